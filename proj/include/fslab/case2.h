#pragma once

// 32x32 stripe images. Each image has a 3-pixel wide light stripe, either
// horizontal (label 0) or vertical (label 1), on a uniform dark background.
// Two colour codes offset the pixel values by a small a > 0:
//
//   family   orientation   stripe   background   pixel sum
//   tilde    horizontal    1 - a    -a           96 - 1024 a
//   tilde    vertical      1 + a     a           96 + 1024 a
//   hat      horizontal    1 + a     a           96 + 1024 a
//   hat      vertical      1 - a    -a           96 - 1024 a
//
// On the tilde family "pixel sum > 96" coincides with "vertical"; on the hat
// family it is always wrong.

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "fslab/network.h"
#include "fslab/rng.h"
#include "fslab/training.h"

namespace fslab::case2 {

inline constexpr std::size_t kSide = 32;
inline constexpr std::size_t kPixels = kSide * kSide;
inline constexpr std::size_t kStripeWidth = 3;
inline constexpr std::size_t kPositions = kSide - kStripeWidth + 1;  // 30
inline constexpr double kSumThreshold = 96.0;

enum class Orientation { kHorizontal = 0, kVertical = 1 };
enum class Family { kTilde, kHat };

std::string_view to_string(Orientation o);
std::string_view to_string(Family f);
Family other(Family f);

struct StripeSpec {
  Orientation orientation = Orientation::kHorizontal;
  // First of the three stripe rows (horizontal) or columns (vertical).
  int position = 0;
  Family family = Family::kTilde;
  double a = 0.0;
};

class GrayImage {
 public:
  GrayImage() { pixels_.fill(0.0); }

  double& at(std::size_t row, std::size_t col) { return pixels_[row * kSide + col]; }
  double at(std::size_t row, std::size_t col) const { return pixels_[row * kSide + col]; }
  std::span<const double, kPixels> pixels() const { return pixels_; }
  std::span<double, kPixels> pixels() { return pixels_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  std::array<double, kPixels> pixels_;
};

// Throws ParameterError for a position outside [0, 29] or a < 0.
GrayImage render(const StripeSpec& spec);

// Closed form of the pixel sum, 96 +- 1024 a, per the table above.
double expected_pixel_sum(const StripeSpec& spec);

// Geometric ground truth: finds the three adjacent full rows or columns that
// carry the brighter of the two pixel values. 0 = horizontal, 1 = vertical.
// Throws MalformedImageError when no single such stripe exists.
int f_orientation(const GrayImage& img);

// Neumaier-compensated sum of all 1024 pixels.
double pixel_sum(const GrayImage& img);

// The pixel-sum labeler: 1 iff the sum exceeds 96.
int pixel_sum_g(const GrayImage& img);

struct LabeledImage {
  StripeSpec spec;
  GrayImage image;
  int label = 0;
};

// The 60 distinct tilde images with a = 0.01: horizontal stripes by
// position, then vertical stripes by position.
std::vector<LabeledImage> enumerate_training_set(double a = 0.01);

// n images of one family: orientation fair coin, position uniform over the
// 30 placements, a uniform on [b, c]. Requires 0 < b < c, n >= 1.
std::vector<LabeledImage> sample_test_set(Family family, double b, double c,
                                          std::size_t n, Rng& rng);

// Batched network input of shape (n, 1, 32, 32).
Tensor to_tensor(std::span<const LabeledImage> images);
Dataset to_dataset(std::span<const LabeledImage> images);

// conv(5x5, 24, same) -> ReLU -> maxpool(2) -> conv(5x5, 48, same) -> ReLU
// -> maxpool(2) -> dense(3072 -> 10) -> [ReLU] -> dense(10 -> 1),
// Glorot-uniform weights, zero biases. The bracketed ReLU is only inserted
// when `relu_between_dense` is set.
Network build_cnn(Rng& rng, bool relu_between_dense = false);

// 16-bit binary PGM; pixel values are mapped affinely from [-0.01, 1.01]
// onto [0, 65535] and clamped.
void write_pgm(const std::filesystem::path& path, const GrayImage& img);

}  // namespace fslab::case2
