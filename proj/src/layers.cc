#include "fslab/layers.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "fslab/errors.h"

namespace fslab {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

std::size_t batch_of(const Tensor& t) {
  if (t.rank() == 0) throw DimensionError("tensor has no batch dimension");
  return t.dim(0);
}

Shape with_batch(std::size_t batch, const Shape& sample) {
  Shape s;
  s.reserve(sample.size() + 1);
  s.push_back(batch);
  s.insert(s.end(), sample.begin(), sample.end());
  return s;
}

Shape sample_shape(const Tensor& t) {
  return Shape(t.shape().begin() + 1, t.shape().end());
}

void require_image(const Shape& in, std::string_view who) {
  if (in.size() != 3) {
    throw DimensionError(std::string(who) +
                         " expects (channels, height, width) input, got " +
                         shape_string(in));
  }
}

// Unfolds one (C, H, W) image into a (C*k*k, H*W) patch matrix for a
// stride-1 "same" convolution.
void im2col(const double* img, std::size_t channels, std::size_t height,
            std::size_t width, std::size_t k, double* col) {
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(k / 2);
  const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(height);
  const std::ptrdiff_t w = static_cast<std::ptrdiff_t>(width);
  for (std::size_t c = 0; c < channels; ++c) {
    const double* plane = img + c * height * width;
    for (std::size_t ki = 0; ki < k; ++ki) {
      for (std::size_t kj = 0; kj < k; ++kj) {
        double* row = col + ((c * k + ki) * k + kj) * height * width;
        const std::ptrdiff_t di = static_cast<std::ptrdiff_t>(ki) - pad;
        const std::ptrdiff_t dj = static_cast<std::ptrdiff_t>(kj) - pad;
        for (std::ptrdiff_t y = 0; y < h; ++y) {
          const std::ptrdiff_t sy = y + di;
          double* out = row + y * w;
          if (sy < 0 || sy >= h) {
            std::fill(out, out + w, 0.0);
            continue;
          }
          const double* src = plane + sy * w;
          for (std::ptrdiff_t x = 0; x < w; ++x) {
            const std::ptrdiff_t sx = x + dj;
            out[x] = (sx >= 0 && sx < w) ? src[sx] : 0.0;
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatters patch gradients back onto the image.
void col2im(const double* col, std::size_t channels, std::size_t height,
            std::size_t width, std::size_t k, double* img) {
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(k / 2);
  const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(height);
  const std::ptrdiff_t w = static_cast<std::ptrdiff_t>(width);
  std::fill(img, img + channels * height * width, 0.0);
  for (std::size_t c = 0; c < channels; ++c) {
    double* plane = img + c * height * width;
    for (std::size_t ki = 0; ki < k; ++ki) {
      for (std::size_t kj = 0; kj < k; ++kj) {
        const double* row = col + ((c * k + ki) * k + kj) * height * width;
        const std::ptrdiff_t di = static_cast<std::ptrdiff_t>(ki) - pad;
        const std::ptrdiff_t dj = static_cast<std::ptrdiff_t>(kj) - pad;
        for (std::ptrdiff_t y = 0; y < h; ++y) {
          const std::ptrdiff_t sy = y + di;
          if (sy < 0 || sy >= h) continue;
          double* dst = plane + sy * w;
          const double* src = row + y * w;
          for (std::ptrdiff_t x = 0; x < w; ++x) {
            const std::ptrdiff_t sx = x + dj;
            if (sx >= 0 && sx < w) dst[sx] += src[x];
          }
        }
      }
    }
  }
}

}  // namespace

std::string_view layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kDense: return "dense";
    case LayerKind::kConv2d: return "conv2d";
    case LayerKind::kMaxPool2d: return "maxpool2d";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kSigmoid: return "sigmoid";
  }
  return "unknown";
}

LayerKind kind_of(const Layer& layer) {
  return std::visit([](const auto& l) { return std::decay_t<decltype(l)>::kKind; },
                    layer);
}

double sigmoid(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

// ---------------------------------------------------------------- Dense

Dense::Dense(std::size_t in_dim, std::size_t out_dim)
    : Dense(Tensor({out_dim, in_dim}), Tensor({out_dim})) {}

Dense::Dense(Tensor weight, Tensor bias)
    : weight_(std::move(weight)), bias_(std::move(bias)) {
  if (weight_.rank() != 2 || bias_.rank() != 1 || bias_.dim(0) != weight_.dim(0) ||
      weight_.size() == 0) {
    throw DimensionError("dense: weight " + shape_string(weight_.shape()) +
                         " and bias " + shape_string(bias_.shape()) +
                         " are inconsistent");
  }
  grad_weight_ = Tensor(weight_.shape());
  grad_bias_ = Tensor(bias_.shape());
}

Shape Dense::output_shape(const Shape& in) const {
  if (shape_size(in) != in_dim()) {
    throw DimensionError("dense expects " + std::to_string(in_dim()) +
                         " input features, got shape " + shape_string(in));
  }
  return {out_dim()};
}

void Dense::forward(const Tensor& in, Tensor& out) const {
  const std::size_t batch = batch_of(in);
  output_shape(sample_shape(in));
  out.resize({batch, out_dim()});
  ConstMatMap x(in.ptr(), batch, in_dim());
  ConstMatMap w(weight_.ptr(), out_dim(), in_dim());
  ConstVecMap b(bias_.ptr(), out_dim());
  MatMap y(out.ptr(), batch, out_dim());
  y.noalias() = x * w.transpose();
  y.rowwise() += b.transpose();
}

void Dense::backward(const Tensor& in, const Tensor&, const Tensor& grad_out,
                     Tensor* grad_in) {
  const std::size_t batch = batch_of(in);
  ConstMatMap x(in.ptr(), batch, in_dim());
  ConstMatMap gy(grad_out.ptr(), batch, out_dim());
  MatMap gw(grad_weight_.ptr(), out_dim(), in_dim());
  VecMap gb(grad_bias_.ptr(), out_dim());
  gw.noalias() += gy.transpose() * x;
  gb.noalias() += gy.colwise().sum().transpose();
  if (grad_in) {
    grad_in->resize(in.shape());
    ConstMatMap w(weight_.ptr(), out_dim(), in_dim());
    MatMap gx(grad_in->ptr(), batch, in_dim());
    gx.noalias() = gy * w;
  }
}

void Dense::zero_grad() {
  grad_weight_.fill(0.0);
  grad_bias_.fill(0.0);
}

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(std::size_t in_channels, std::size_t filters, std::size_t kernel)
    : Conv2d(Tensor({filters, in_channels, kernel, kernel}), Tensor({filters})) {}

Conv2d::Conv2d(Tensor weight, Tensor bias)
    : weight_(std::move(weight)), bias_(std::move(bias)) {
  if (weight_.rank() != 4 || bias_.rank() != 1 || bias_.dim(0) != weight_.dim(0) ||
      weight_.dim(2) != weight_.dim(3) || weight_.dim(2) % 2 == 0 ||
      weight_.size() == 0) {
    throw DimensionError("conv2d: weight " + shape_string(weight_.shape()) +
                         " and bias " + shape_string(bias_.shape()) +
                         " are inconsistent (square odd kernel required)");
  }
  grad_weight_ = Tensor(weight_.shape());
  grad_bias_ = Tensor(bias_.shape());
}

Shape Conv2d::output_shape(const Shape& in) const {
  require_image(in, "conv2d");
  if (in[0] != in_channels()) {
    throw DimensionError("conv2d expects " + std::to_string(in_channels()) +
                         " channels, got shape " + shape_string(in));
  }
  return {filters(), in[1], in[2]};
}

void Conv2d::forward(const Tensor& in, Tensor& out) const {
  const std::size_t batch = batch_of(in);
  const Shape s = sample_shape(in);
  output_shape(s);
  const std::size_t c = s[0], h = s[1], w = s[2], k = kernel();
  const std::size_t hw = h * w, patch = c * k * k;
  out.resize({batch, filters(), h, w});
  Buffer col(patch * hw);
  ConstMatMap wm(weight_.ptr(), filters(), patch);
  ConstVecMap b(bias_.ptr(), filters());
  ConstMatMap cm(col.data(), patch, hw);
  for (std::size_t n = 0; n < batch; ++n) {
    im2col(in.ptr() + n * c * hw, c, h, w, k, col.data());
    MatMap y(out.ptr() + n * filters() * hw, filters(), hw);
    y.noalias() = wm * cm;
    y.colwise() += b;
  }
}

void Conv2d::backward(const Tensor& in, const Tensor&, const Tensor& grad_out,
                      Tensor* grad_in) {
  const std::size_t batch = batch_of(in);
  const Shape s = sample_shape(in);
  const std::size_t c = s[0], h = s[1], w = s[2], k = kernel();
  const std::size_t hw = h * w, patch = c * k * k;
  Buffer col(patch * hw);
  Buffer gcol(grad_in ? patch * hw : 0);
  if (grad_in) grad_in->resize(in.shape());
  ConstMatMap wm(weight_.ptr(), filters(), patch);
  MatMap gw(grad_weight_.ptr(), filters(), patch);
  VecMap gb(grad_bias_.ptr(), filters());
  ConstMatMap cm(col.data(), patch, hw);
  for (std::size_t n = 0; n < batch; ++n) {
    ConstMatMap gy(grad_out.ptr() + n * filters() * hw, filters(), hw);
    im2col(in.ptr() + n * c * hw, c, h, w, k, col.data());
    gw.noalias() += gy * cm.transpose();
    gb.noalias() += gy.rowwise().sum();
    if (grad_in) {
      MatMap gc(gcol.data(), patch, hw);
      gc.noalias() = wm.transpose() * gy;
      col2im(gcol.data(), c, h, w, k, grad_in->ptr() + n * c * hw);
    }
  }
}

void Conv2d::zero_grad() {
  grad_weight_.fill(0.0);
  grad_bias_.fill(0.0);
}

// ---------------------------------------------------------------- MaxPool2d

Shape MaxPool2d::output_shape(const Shape& in) const {
  require_image(in, "maxpool2d");
  if (pool_ == 0) throw DimensionError("maxpool2d: pool size must be positive");
  return {in[0], (in[1] + pool_ - 1) / pool_, (in[2] + pool_ - 1) / pool_};
}

namespace {

// Index of the window maximum (first in scan order on ties). "Same" padding
// puts any padding at the far edge for pool 2; in general the leading pad is
// floor(total / 2) and padded cells never win.
struct PoolGeometry {
  std::size_t h, w, oh, ow, pool;
  std::ptrdiff_t pad_top, pad_left;
  PoolGeometry(const Shape& s, std::size_t p)
      : h(s[1]), w(s[2]), oh((s[1] + p - 1) / p), ow((s[2] + p - 1) / p), pool(p) {
    const std::size_t pad_h = oh * p > h ? oh * p - h : 0;
    const std::size_t pad_w = ow * p > w ? ow * p - w : 0;
    pad_top = static_cast<std::ptrdiff_t>(pad_h / 2);
    pad_left = static_cast<std::ptrdiff_t>(pad_w / 2);
  }
  std::size_t argmax(const double* plane, std::size_t oy, std::size_t ox) const {
    std::size_t best = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    bool found = false;
    for (std::size_t i = 0; i < pool; ++i) {
      const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(oy * pool + i) - pad_top;
      if (y < 0 || y >= static_cast<std::ptrdiff_t>(h)) continue;
      for (std::size_t j = 0; j < pool; ++j) {
        const std::ptrdiff_t x = static_cast<std::ptrdiff_t>(ox * pool + j) - pad_left;
        if (x < 0 || x >= static_cast<std::ptrdiff_t>(w)) continue;
        const std::size_t idx = static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x);
        if (!found || plane[idx] > best_v) {
          best = idx;
          best_v = plane[idx];
          found = true;
        }
      }
    }
    return best;
  }
};

}  // namespace

void MaxPool2d::forward(const Tensor& in, Tensor& out) const {
  const std::size_t batch = batch_of(in);
  const Shape s = sample_shape(in);
  const Shape os = output_shape(s);
  const PoolGeometry g(s, pool_);
  out.resize(with_batch(batch, os));
  const std::size_t planes = batch * s[0];
  for (std::size_t p = 0; p < planes; ++p) {
    const double* plane = in.ptr() + p * g.h * g.w;
    double* dst = out.ptr() + p * g.oh * g.ow;
    for (std::size_t oy = 0; oy < g.oh; ++oy)
      for (std::size_t ox = 0; ox < g.ow; ++ox)
        dst[oy * g.ow + ox] = plane[g.argmax(plane, oy, ox)];
  }
}

void MaxPool2d::backward(const Tensor& in, const Tensor&, const Tensor& grad_out,
                         Tensor* grad_in) {
  if (!grad_in) return;
  const std::size_t batch = batch_of(in);
  const Shape s = sample_shape(in);
  const PoolGeometry g(s, pool_);
  grad_in->resize(in.shape());
  grad_in->fill(0.0);
  const std::size_t planes = batch * s[0];
  for (std::size_t p = 0; p < planes; ++p) {
    const double* plane = in.ptr() + p * g.h * g.w;
    const double* gy = grad_out.ptr() + p * g.oh * g.ow;
    double* gx = grad_in->ptr() + p * g.h * g.w;
    for (std::size_t oy = 0; oy < g.oh; ++oy)
      for (std::size_t ox = 0; ox < g.ow; ++ox)
        gx[g.argmax(plane, oy, ox)] += gy[oy * g.ow + ox];
  }
}

// ---------------------------------------------------------------- activations

void Relu::forward(const Tensor& in, Tensor& out) const {
  out.resize(in.shape());
  const double* x = in.ptr();
  double* y = out.ptr();
  for (std::size_t i = 0, n = in.size(); i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void Relu::backward(const Tensor& in, const Tensor&, const Tensor& grad_out,
                    Tensor* grad_in) {
  if (!grad_in) return;
  grad_in->resize(in.shape());
  const double* x = in.ptr();
  const double* gy = grad_out.ptr();
  double* gx = grad_in->ptr();
  for (std::size_t i = 0, n = in.size(); i < n; ++i) gx[i] = x[i] > 0.0 ? gy[i] : 0.0;
}

void Sigmoid::forward(const Tensor& in, Tensor& out) const {
  out.resize(in.shape());
  for (std::size_t i = 0, n = in.size(); i < n; ++i) out[i] = sigmoid(in[i]);
}

void Sigmoid::backward(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                       Tensor* grad_in) {
  if (!grad_in) return;
  grad_in->resize(in.shape());
  for (std::size_t i = 0, n = in.size(); i < n; ++i)
    (*grad_in)[i] = grad_out[i] * out[i] * (1.0 - out[i]);
}

}  // namespace fslab
