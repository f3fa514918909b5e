#include "fslab/case2.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "fslab/errors.h"

namespace fslab::case2 {

std::string_view to_string(Orientation o) {
  return o == Orientation::kHorizontal ? "horizontal" : "vertical";
}

std::string_view to_string(Family f) { return f == Family::kTilde ? "tilde" : "hat"; }

Family other(Family f) { return f == Family::kTilde ? Family::kHat : Family::kTilde; }

namespace {

// Tilde-vertical and hat-horizontal images are shifted up by a, the other
// two combinations down by a.
bool shifted_up(const StripeSpec& s) {
  return (s.family == Family::kTilde) == (s.orientation == Orientation::kVertical);
}

// (stripe value, background value) for a colour code.
std::pair<double, double> colours(const StripeSpec& s) {
  return shifted_up(s) ? std::pair{1.0 + s.a, s.a} : std::pair{1.0 - s.a, -s.a};
}

void check_spec(const StripeSpec& s) {
  if (s.position < 0 || s.position >= static_cast<int>(kPositions)) {
    throw ParameterError("stripe position " + std::to_string(s.position) +
                         " outside [0, " + std::to_string(kPositions - 1) + "]");
  }
  if (!(s.a >= 0)) throw ParameterError("colour offset a must be >= 0");
}

}  // namespace

GrayImage render(const StripeSpec& spec) {
  check_spec(spec);
  const auto [stripe, background] = colours(spec);
  GrayImage img;
  std::fill(img.pixels().begin(), img.pixels().end(), background);
  const auto first = static_cast<std::size_t>(spec.position);
  for (std::size_t s = first; s < first + kStripeWidth; ++s) {
    for (std::size_t t = 0; t < kSide; ++t) {
      if (spec.orientation == Orientation::kHorizontal) {
        img.at(s, t) = stripe;
      } else {
        img.at(t, s) = stripe;
      }
    }
  }
  return img;
}

double expected_pixel_sum(const StripeSpec& spec) {
  const double shift = static_cast<double>(kPixels) * spec.a;
  return shifted_up(spec) ? kSumThreshold + shift : kSumThreshold - shift;
}

int f_orientation(const GrayImage& img) {
  const auto px = img.pixels();
  const double lo = *std::min_element(px.begin(), px.end());
  const double hi = *std::max_element(px.begin(), px.end());
  if (!(hi > lo)) throw MalformedImageError("image has no stripe (constant pixels)");
  for (double v : px) {
    if (v != lo && v != hi) throw MalformedImageError("image has more than two pixel values");
  }
  // Rows (or columns) made entirely of the bright value.
  auto full_lines = [&](bool rows) {
    std::vector<std::size_t> lines;
    for (std::size_t i = 0; i < kSide; ++i) {
      bool full = true;
      for (std::size_t j = 0; j < kSide && full; ++j)
        full = (rows ? img.at(i, j) : img.at(j, i)) == hi;
      if (full) lines.push_back(i);
    }
    return lines;
  };
  const auto bright_count =
      static_cast<std::size_t>(std::count(px.begin(), px.end(), hi));
  auto is_stripe = [&](const std::vector<std::size_t>& lines) {
    return lines.size() == kStripeWidth && lines.back() - lines.front() == kStripeWidth - 1 &&
           bright_count == kStripeWidth * kSide;
  };
  const bool horizontal = is_stripe(full_lines(true));
  const bool vertical = is_stripe(full_lines(false));
  if (horizontal == vertical) {
    throw MalformedImageError("image does not contain exactly one 3-wide full stripe");
  }
  return horizontal ? 0 : 1;
}

double pixel_sum(const GrayImage& img) {
  double sum = 0.0, comp = 0.0;
  for (double v : img.pixels()) {
    const double t = sum + v;
    comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  return sum + comp;
}

int pixel_sum_g(const GrayImage& img) { return pixel_sum(img) > kSumThreshold ? 1 : 0; }

std::vector<LabeledImage> enumerate_training_set(double a) {
  std::vector<LabeledImage> out;
  out.reserve(2 * kPositions);
  for (Orientation o : {Orientation::kHorizontal, Orientation::kVertical}) {
    for (int pos = 0; pos < static_cast<int>(kPositions); ++pos) {
      StripeSpec spec{o, pos, Family::kTilde, a};
      GrayImage img = render(spec);
      const int label = f_orientation(img);
      out.push_back({spec, std::move(img), label});
    }
  }
  return out;
}

std::vector<LabeledImage> sample_test_set(Family family, double b, double c,
                                          std::size_t n, Rng& rng) {
  if (!(b > 0 && b < c)) {
    throw ParameterError("test set needs 0 < b < c, got b = " + std::to_string(b) +
                         ", c = " + std::to_string(c));
  }
  if (n == 0) throw ParameterError("test set size must be at least 1");
  std::vector<LabeledImage> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    StripeSpec spec;
    spec.orientation = rng.coin() ? Orientation::kVertical : Orientation::kHorizontal;
    spec.position = static_cast<int>(rng.index(kPositions));
    spec.family = family;
    spec.a = rng.uniform(b, c);
    GrayImage img = render(spec);
    const int label = f_orientation(img);
    out.push_back({spec, std::move(img), label});
  }
  return out;
}

Tensor to_tensor(std::span<const LabeledImage> images) {
  Tensor t({images.size(), 1, kSide, kSide});
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto px = images[i].image.pixels();
    std::copy(px.begin(), px.end(), t.ptr() + i * kPixels);
  }
  return t;
}

Dataset to_dataset(std::span<const LabeledImage> images) {
  Dataset d{to_tensor(images), std::vector<double>(images.size())};
  for (std::size_t i = 0; i < images.size(); ++i) d.labels[i] = images[i].label;
  return d;
}

Network build_cnn(Rng& rng, bool relu_between_dense) {
  std::vector<Layer> layers{Conv2d(1, 24, 5), Relu{}, MaxPool2d(2),
                            Conv2d(24, 48, 5), Relu{}, MaxPool2d(2),
                            Dense(8 * 8 * 48, 10)};
  if (relu_between_dense) layers.emplace_back(Relu{});
  layers.emplace_back(Dense(10, 1));
  Network net({1, kSide, kSide}, std::move(layers));
  glorot_initialize(net, rng);
  return net;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError("cannot open " + path.string() + " for writing");
  out << "P5\n" << kSide << " " << kSide << "\n65535\n";
  constexpr double lo = -0.01, hi = 1.01;
  for (double v : img.pixels()) {
    const double scaled = std::clamp((v - lo) / (hi - lo), 0.0, 1.0) * 65535.0;
    const auto q = static_cast<unsigned>(std::lround(scaled));
    const char bytes[2] = {static_cast<char>(q >> 8), static_cast<char>(q & 0xff)};
    out.write(bytes, 2);
  }
}

}  // namespace fslab::case2
