#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <variant>

#include "fslab/tensor.h"

namespace fslab {

enum class LayerKind : std::uint8_t {
  kDense = 0,
  kConv2d = 1,
  kMaxPool2d = 2,
  kRelu = 3,
  kSigmoid = 4,
};

std::string_view layer_kind_name(LayerKind kind);

// A trainable tensor paired with its gradient accumulator.
struct ParamRef {
  Tensor* value;
  Tensor* grad;
};

// All layers take a batched input whose first dimension is the batch size.
// output_shape() works on per-sample shapes (batch dimension stripped).
// backward() accumulates parameter gradients and, when grad_in is non-null,
// writes the gradient with respect to the input.

// Fully connected layer, y = W x + b. Any per-sample input shape is
// flattened row-major, so a Dense after a pooling layer needs no reshape.
class Dense {
 public:
  static constexpr LayerKind kKind = LayerKind::kDense;

  Dense(std::size_t in_dim, std::size_t out_dim);
  // weight: (out_dim, in_dim), bias: (out_dim).
  Dense(Tensor weight, Tensor bias);

  std::size_t in_dim() const { return weight_.dim(1); }
  std::size_t out_dim() const { return weight_.dim(0); }

  Tensor& weight() { return weight_; }
  Tensor& bias() { return bias_; }
  const Tensor& weight() const { return weight_; }
  const Tensor& bias() const { return bias_; }
  const Tensor& grad_weight() const { return grad_weight_; }
  const Tensor& grad_bias() const { return grad_bias_; }

  Shape output_shape(const Shape& in) const;
  void forward(const Tensor& in, Tensor& out) const;
  void backward(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                Tensor* grad_in);
  void zero_grad();
  std::size_t param_count() const { return weight_.size() + bias_.size(); }

 private:
  friend class Network;
  Tensor weight_, bias_, grad_weight_, grad_bias_;
};

// 2-D convolution over (channels, height, width) inputs with stride 1 and
// "same" zero padding: output spatial size equals input spatial size.
class Conv2d {
 public:
  static constexpr LayerKind kKind = LayerKind::kConv2d;

  // Kernel size must be odd.
  Conv2d(std::size_t in_channels, std::size_t filters, std::size_t kernel);
  // weight: (filters, in_channels, kernel, kernel), bias: (filters).
  Conv2d(Tensor weight, Tensor bias);

  std::size_t in_channels() const { return weight_.dim(1); }
  std::size_t filters() const { return weight_.dim(0); }
  std::size_t kernel() const { return weight_.dim(2); }

  Tensor& weight() { return weight_; }
  Tensor& bias() { return bias_; }
  const Tensor& weight() const { return weight_; }
  const Tensor& bias() const { return bias_; }
  const Tensor& grad_weight() const { return grad_weight_; }
  const Tensor& grad_bias() const { return grad_bias_; }

  Shape output_shape(const Shape& in) const;
  void forward(const Tensor& in, Tensor& out) const;
  void backward(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                Tensor* grad_in);
  void zero_grad();
  std::size_t param_count() const { return weight_.size() + bias_.size(); }

 private:
  friend class Network;
  Tensor weight_, bias_, grad_weight_, grad_bias_;
};

// Max pooling with a square window, stride equal to the window and "same"
// padding: output spatial size is ceil(input / pool).
class MaxPool2d {
 public:
  static constexpr LayerKind kKind = LayerKind::kMaxPool2d;

  explicit MaxPool2d(std::size_t pool = 2) : pool_(pool) {}
  std::size_t pool() const { return pool_; }

  Shape output_shape(const Shape& in) const;
  void forward(const Tensor& in, Tensor& out) const;
  void backward(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                Tensor* grad_in);
  void zero_grad() {}
  std::size_t param_count() const { return 0; }

 private:
  std::size_t pool_;
};

class Relu {
 public:
  static constexpr LayerKind kKind = LayerKind::kRelu;

  Shape output_shape(const Shape& in) const { return in; }
  void forward(const Tensor& in, Tensor& out) const;
  void backward(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                Tensor* grad_in);
  void zero_grad() {}
  std::size_t param_count() const { return 0; }
};

class Sigmoid {
 public:
  static constexpr LayerKind kKind = LayerKind::kSigmoid;

  Shape output_shape(const Shape& in) const { return in; }
  void forward(const Tensor& in, Tensor& out) const;
  void backward(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                Tensor* grad_in);
  void zero_grad() {}
  std::size_t param_count() const { return 0; }
};

using Layer = std::variant<Dense, Conv2d, MaxPool2d, Relu, Sigmoid>;

LayerKind kind_of(const Layer& layer);

// Numerically stable logistic function.
double sigmoid(double v);

}  // namespace fslab
