#pragma once

#include <cstddef>
#include <vector>

#include "fslab/layers.h"
#include "fslab/tensor.h"

namespace fslab {

// An ordered stack of layers mapping a batch of inputs to a batch of
// logits. Construction checks that consecutive layer shapes compose.
//
// predict() is const and keeps no state, so one Network may be shared by
// several threads for inference. forward() records the activations needed
// by the next backward(); training is single-writer.
class Network {
 public:
  Network(Shape input_shape, std::vector<Layer> layers);

  const Shape& input_shape() const { return input_shape_; }
  const Shape& output_shape() const { return output_shape_; }
  const std::vector<Layer>& layers() const { return layers_; }
  // Mutable access for initialization. Shapes must not be changed.
  std::vector<Layer>& layers() { return layers_; }

  Tensor predict(const Tensor& batch) const;
  // Convenience for a single unbatched sample; returns the flattened output.
  std::vector<double> predict_one(const std::vector<double>& sample) const;

  const Tensor& forward(const Tensor& batch);
  // Accumulates parameter gradients for d(loss)/d(output) = grad_output.
  // Consumes the recorded forward pass.
  void backward(const Tensor& grad_output);
  bool has_tape() const { return has_tape_; }

  void zero_grad();
  std::vector<ParamRef> parameters();
  std::size_t param_count() const;

 private:
  void check_input(const Tensor& batch) const;

  Shape input_shape_;
  Shape output_shape_;
  std::vector<Layer> layers_;
  // activations_[0] is the input, activations_[i + 1] the output of layer i.
  std::vector<Tensor> activations_;
  std::vector<Tensor> grads_;
  bool has_tape_ = false;
};

}  // namespace fslab
