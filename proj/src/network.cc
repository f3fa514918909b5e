#include "fslab/network.h"

#include <string>

#include "fslab/errors.h"

namespace fslab {
namespace {

std::string layer_label(std::size_t index, const Layer& layer) {
  return "layer " + std::to_string(index) + " (" +
         std::string(layer_kind_name(kind_of(layer))) + ")";
}

}  // namespace

Network::Network(Shape input_shape, std::vector<Layer> layers)
    : input_shape_(std::move(input_shape)), layers_(std::move(layers)) {
  Shape s = input_shape_;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    try {
      s = std::visit([&](const auto& l) { return l.output_shape(s); }, layers_[i]);
    } catch (const DimensionError& e) {
      throw DimensionError(layer_label(i, layers_[i]) + ": " + e.what());
    }
  }
  output_shape_ = s;
  activations_.resize(layers_.size() + 1);
  grads_.resize(layers_.size() + 1);
}

void Network::check_input(const Tensor& batch) const {
  const Shape& s = batch.shape();
  const bool ok = s.size() == input_shape_.size() + 1 &&
                  std::equal(input_shape_.begin(), input_shape_.end(), s.begin() + 1);
  if (!ok) {
    const std::string where =
        layers_.empty() ? std::string("network input")
                        : layer_label(0, layers_.front());
    throw DimensionError(where + ": expected batch of " +
                         shape_string(input_shape_) + ", got " + shape_string(s));
  }
}

Tensor Network::predict(const Tensor& batch) const {
  check_input(batch);
  Tensor cur = batch;
  Tensor next;
  for (const Layer& layer : layers_) {
    std::visit([&](const auto& l) { l.forward(cur, next); }, layer);
    std::swap(cur, next);
  }
  return cur;
}

std::vector<double> Network::predict_one(const std::vector<double>& sample) const {
  Shape s{1};
  s.insert(s.end(), input_shape_.begin(), input_shape_.end());
  Tensor out = predict(Tensor(s, sample));
  return {out.data().begin(), out.data().end()};
}

const Tensor& Network::forward(const Tensor& batch) {
  check_input(batch);
  activations_[0] = batch;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    std::visit([&](const auto& l) { l.forward(activations_[i], activations_[i + 1]); },
               layers_[i]);
  }
  has_tape_ = true;
  return activations_.back();
}

void Network::backward(const Tensor& grad_output) {
  if (!has_tape_) throw StateError("backward called without a recorded forward pass");
  if (grad_output.shape() != activations_.back().shape()) {
    throw DimensionError("output gradient " + shape_string(grad_output.shape()) +
                         " does not match network output " +
                         shape_string(activations_.back().shape()));
  }
  grads_.back() = grad_output;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    // The input gradient of the first layer is never needed.
    Tensor* grad_in = i == 0 ? nullptr : &grads_[i];
    std::visit(
        [&](auto& l) {
          l.backward(activations_[i], activations_[i + 1], grads_[i + 1], grad_in);
        },
        layers_[i]);
  }
  has_tape_ = false;
}

void Network::zero_grad() {
  for (Layer& layer : layers_) std::visit([](auto& l) { l.zero_grad(); }, layer);
}

std::vector<ParamRef> Network::parameters() {
  std::vector<ParamRef> out;
  for (Layer& layer : layers_) {
    if (auto* d = std::get_if<Dense>(&layer)) {
      out.push_back({&d->weight_, &d->grad_weight_});
      out.push_back({&d->bias_, &d->grad_bias_});
    } else if (auto* c = std::get_if<Conv2d>(&layer)) {
      out.push_back({&c->weight_, &c->grad_weight_});
      out.push_back({&c->bias_, &c->grad_bias_});
    }
  }
  return out;
}

std::size_t Network::param_count() const {
  std::size_t n = 0;
  for (const Layer& layer : layers_)
    n += std::visit([](const auto& l) { return l.param_count(); }, layer);
  return n;
}

}  // namespace fslab
