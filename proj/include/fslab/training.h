#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fslab/network.h"
#include "fslab/rng.h"
#include "fslab/tensor.h"

namespace fslab {

// Binary cross-entropy summed over samples:
//   C(v, w) = sum_j -w_j log(sigmoid(v_j)) - (1 - w_j) log(1 - sigmoid(v_j)),
// evaluated as log1p(exp(-|v|)) + max(v, 0) - v w to stay finite for large
// |v|. Labels must be exactly 0 or 1.
double bce_loss(std::span<const double> logits, std::span<const double> labels);

// Mean of the per-sample cross-entropy and its gradient with respect to the
// logits, (sigmoid(v_j) - w_j) / n. Used for mini-batch updates.
double bce_mean_with_grad(std::span<const double> logits,
                          std::span<const double> labels, std::span<double> grad);

// Round-half-up of sigmoid(v): 1 iff sigmoid(v) >= 1/2, i.e. iff v >= 0.
inline int round_sigmoid(double logit) { return logit >= 0.0 ? 1 : 0; }

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias correction:
//   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2,
//   p <- p - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps).
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  // Applies one update using the gradients stored alongside each parameter.
  // Moment buffers are created on the first call; later calls must pass
  // parameters of identical shapes in the same order.
  void step(std::span<const ParamRef> params);

  std::uint64_t t() const { return t_; }
  const AdamOptions& options() const { return options_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }

 private:
  AdamOptions options_;
  std::uint64_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

// Glorot/Xavier uniform samples on [-L, L], L = sqrt(6 / (fan_in + fan_out)).
// Rank-2 shapes are (out, in); rank-4 shapes are (filters, channels, kh, kw)
// with fan_in = channels*kh*kw and fan_out = filters*kh*kw.
double glorot_limit(const Shape& shape);
Tensor glorot_uniform(const Shape& shape, Rng& rng);

// Glorot-uniform weights and zero biases for every dense/conv layer, in
// declaration order.
void glorot_initialize(Network& net, Rng& rng);

// Inputs are batched, shape (n, sample dims...); one 0/1 label per row.
struct Dataset {
  Tensor inputs;
  std::vector<double> labels;

  std::size_t size() const { return labels.size(); }
};

struct TrainOptions {
  std::size_t epochs = 1;
  std::size_t batch_size = 1;
  bool shuffle = true;
  AdamOptions adam;
};

struct TrainResult {
  // Mean per-sample cross-entropy of every mini-batch, in update order;
  // epochs * ceil(n / batch_size) entries.
  std::vector<double> batch_losses;
  std::uint64_t steps = 0;
};

// Mini-batch Adam on the mean cross-entropy. `shuffle_rng` only drives the
// per-epoch permutation, so batch order is reproducible independently of the
// data and the initialization. The final batch of an epoch may be short.
TrainResult train(Network& net, const Dataset& data, const TrainOptions& options,
                  Rng& shuffle_rng);

// Predicted labels round(sigmoid(net(x))) for every row of `inputs`,
// evaluated in chunks.
std::vector<int> predict_labels(const Network& net, const Tensor& inputs,
                                std::size_t chunk = 1024);

}  // namespace fslab
