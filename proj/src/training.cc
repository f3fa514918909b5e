#include "fslab/training.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fslab/errors.h"

namespace fslab {
namespace {

void check_labels(std::span<const double> logits, std::span<const double> labels) {
  if (logits.size() != labels.size()) {
    throw DimensionError("bce: " + std::to_string(logits.size()) + " logits but " +
                         std::to_string(labels.size()) + " labels");
  }
  for (double w : labels) {
    if (w != 0.0 && w != 1.0) {
      throw DomainError("bce: label " + std::to_string(w) + " is not 0 or 1");
    }
  }
}

double bce_term(double v, double w) {
  return std::log1p(std::exp(-std::abs(v))) + std::max(v, 0.0) - v * w;
}

}  // namespace

double bce_loss(std::span<const double> logits, std::span<const double> labels) {
  check_labels(logits, labels);
  double total = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) total += bce_term(logits[j], labels[j]);
  return total;
}

double bce_mean_with_grad(std::span<const double> logits,
                          std::span<const double> labels, std::span<double> grad) {
  check_labels(logits, labels);
  if (grad.size() != logits.size()) throw DimensionError("bce: gradient size mismatch");
  const double n = static_cast<double>(logits.size());
  double total = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    total += bce_term(logits[j], labels[j]);
    grad[j] = (sigmoid(logits[j]) - labels[j]) / n;
  }
  return total / n;
}

// ---------------------------------------------------------------- Adam

void Adam::step(std::span<const ParamRef> params) {
  if (m_.empty()) {
    for (const ParamRef& p : params) {
      m_.emplace_back(p.value->shape());
      v_.emplace_back(p.value->shape());
    }
  }
  if (params.size() != m_.size()) {
    throw DimensionError("adam: expected " + std::to_string(m_.size()) +
                         " parameter tensors, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].value->shape() != m_[i].shape() ||
        params[i].grad->shape() != m_[i].shape()) {
      throw DimensionError("adam: parameter " + std::to_string(i) + " has shape " +
                           shape_string(params[i].value->shape()) +
                           ", moments have " + shape_string(m_[i].shape()));
    }
  }
  ++t_;
  const auto& o = options_;
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    double* p = params[i].value->ptr();
    const double* g = params[i].grad->ptr();
    double* m = m_[i].ptr();
    double* v = v_[i].ptr();
    for (std::size_t j = 0, n = m_[i].size(); j < n; ++j) {
      m[j] = o.beta1 * m[j] + (1.0 - o.beta1) * g[j];
      v[j] = o.beta2 * v[j] + (1.0 - o.beta2) * g[j] * g[j];
      p[j] -= o.lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + o.epsilon);
    }
  }
}

// ---------------------------------------------------------------- init

double glorot_limit(const Shape& shape) {
  double fan_in = 0, fan_out = 0;
  if (shape.size() == 2) {
    fan_out = static_cast<double>(shape[0]);
    fan_in = static_cast<double>(shape[1]);
  } else if (shape.size() == 4) {
    const double area = static_cast<double>(shape[2] * shape[3]);
    fan_out = static_cast<double>(shape[0]) * area;
    fan_in = static_cast<double>(shape[1]) * area;
  } else {
    throw DimensionError("glorot: cannot infer fans from shape " + shape_string(shape));
  }
  return std::sqrt(6.0 / (fan_in + fan_out));
}

Tensor glorot_uniform(const Shape& shape, Rng& rng) {
  const double limit = glorot_limit(shape);
  Tensor t(shape);
  for (double& x : t.data()) x = rng.uniform(-limit, limit);
  return t;
}

void glorot_initialize(Network& net, Rng& rng) {
  for (Layer& layer : net.layers()) {
    std::visit(
        [&](auto& l) {
          if constexpr (requires { l.weight(); }) {
            l.weight() = glorot_uniform(l.weight().shape(), rng);
            l.bias().fill(0.0);
          }
        },
        layer);
  }
}

// ---------------------------------------------------------------- train

TrainResult train(Network& net, const Dataset& data, const TrainOptions& options,
                  Rng& shuffle_rng) {
  const std::size_t n = data.size();
  if (n == 0) throw ParameterError("train: dataset is empty");
  if (data.inputs.rank() == 0 || data.inputs.dim(0) != n) {
    throw DimensionError("train: inputs " + shape_string(data.inputs.shape()) +
                         " do not match " + std::to_string(n) + " labels");
  }
  if (options.batch_size == 0 || options.batch_size > n) {
    throw ParameterError("train: batch size " + std::to_string(options.batch_size) +
                         " must be in [1, " + std::to_string(n) + "]");
  }
  const std::size_t row = data.inputs.size() / n;
  const std::size_t batches = (n + options.batch_size - 1) / options.batch_size;

  TrainResult result;
  result.batch_losses.reserve(options.epochs * batches);
  Adam adam(options.adam);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<ParamRef> params = net.parameters();

  Shape batch_shape = data.inputs.shape();
  Tensor batch_x;
  std::vector<double> batch_w;
  Tensor grad;

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    if (options.shuffle) {
      for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.index(i)]);
    }
    for (std::size_t start = 0; start < n; start += options.batch_size) {
      const std::size_t len = std::min(options.batch_size, n - start);
      batch_shape[0] = len;
      batch_x.resize(batch_shape);
      batch_w.resize(len);
      for (std::size_t i = 0; i < len; ++i) {
        const std::size_t src = order[start + i];
        std::copy_n(data.inputs.ptr() + src * row, row, batch_x.ptr() + i * row);
        batch_w[i] = data.labels[src];
      }
      const Tensor& logits = net.forward(batch_x);
      grad.resize(logits.shape());
      const double loss = bce_mean_with_grad(logits.data(), batch_w, grad.data());
      if (!std::isfinite(loss)) {
        throw DivergedError(epoch, "training diverged: non-finite loss in epoch " +
                                       std::to_string(epoch));
      }
      result.batch_losses.push_back(loss);
      net.zero_grad();
      net.backward(grad);
      adam.step(params);
      ++result.steps;
    }
  }
  return result;
}

std::vector<int> predict_labels(const Network& net, const Tensor& inputs,
                                std::size_t chunk) {
  const std::size_t n = inputs.rank() ? inputs.dim(0) : 0;
  std::vector<int> out;
  out.reserve(n);
  if (n == 0) return out;
  const std::size_t row = inputs.size() / n;
  Shape s = inputs.shape();
  for (std::size_t start = 0; start < n; start += chunk) {
    const std::size_t len = std::min(chunk, n - start);
    s[0] = len;
    std::vector<double> buf(inputs.ptr() + start * row, inputs.ptr() + (start + len) * row);
    Tensor logits = net.predict(Tensor(s, std::move(buf)));
    const std::size_t per = logits.size() / len;
    for (std::size_t i = 0; i < len; ++i) out.push_back(round_sigmoid(logits[i * per]));
  }
  return out;
}

}  // namespace fslab
