#include "fslab/case2.h"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "fslab/errors.h"

using namespace fslab;
using namespace fslab::case2;

namespace {

StripeSpec spec(Orientation o, int pos, Family f, double a) { return {o, pos, f, a}; }

}  // namespace

TEST(Case2Render, ColourCodes) {
  const double a = 0.01;
  auto img = render(spec(Orientation::kHorizontal, 4, Family::kTilde, a));
  EXPECT_EQ(img.at(4, 0), 1 - a);
  EXPECT_EQ(img.at(6, 31), 1 - a);
  EXPECT_EQ(img.at(7, 0), -a);
  img = render(spec(Orientation::kVertical, 4, Family::kTilde, a));
  EXPECT_EQ(img.at(0, 5), 1 + a);
  EXPECT_EQ(img.at(0, 0), a);
  img = render(spec(Orientation::kHorizontal, 0, Family::kHat, a));
  EXPECT_EQ(img.at(0, 0), 1 + a);
  EXPECT_EQ(img.at(3, 0), a);
  img = render(spec(Orientation::kVertical, 29, Family::kHat, a));
  EXPECT_EQ(img.at(0, 31), 1 - a);
  EXPECT_EQ(img.at(0, 28), -a);
}

TEST(Case2Render, PixelSumExamples) {
  EXPECT_NEAR(pixel_sum(render(spec(Orientation::kVertical, 3, Family::kTilde, 0.01))), 106.24,
              1e-12);
  EXPECT_NEAR(pixel_sum(render(spec(Orientation::kHorizontal, 3, Family::kTilde, 0.01))), 85.76,
              1e-12);
  for (Family f : {Family::kTilde, Family::kHat}) {
    for (Orientation o : {Orientation::kHorizontal, Orientation::kVertical}) {
      const auto img = render(spec(o, 7, f, 0.0));
      EXPECT_EQ(pixel_sum(img), 96.0);
      EXPECT_EQ(pixel_sum_g(img), 0);
    }
  }
}

TEST(Case2Render, BadPosition) {
  EXPECT_THROW(render(spec(Orientation::kVertical, 30, Family::kTilde, 0.01)), ParameterError);
  EXPECT_THROW(render(spec(Orientation::kVertical, -1, Family::kTilde, 0.01)), ParameterError);
  EXPECT_THROW(render(spec(Orientation::kVertical, 0, Family::kTilde, -0.1)), ParameterError);
}

TEST(Case2Render, ClosedFormSums) {
  Rng rng(4);
  for (int t = 0; t < 2000; ++t) {
    const StripeSpec s{rng.coin() ? Orientation::kVertical : Orientation::kHorizontal,
                       static_cast<int>(rng.index(30)),
                       rng.coin() ? Family::kHat : Family::kTilde, rng.uniform(0.0, 0.05)};
    const double sum = pixel_sum(render(s));
    EXPECT_NEAR(sum, expected_pixel_sum(s), 1024 * 1e-16 * 110);
  }
}

TEST(Case2Render, FamiliesDifferByTwoA) {
  for (double a : {0.006, 0.01}) {
    for (Orientation o : {Orientation::kHorizontal, Orientation::kVertical}) {
      const auto t = render(spec(o, 11, Family::kTilde, a));
      const auto h = render(spec(o, 11, Family::kHat, a));
      for (std::size_t i = 0; i < kPixels; ++i) {
        EXPECT_NEAR(std::abs(t.pixels()[i] - h.pixels()[i]), 2 * a, 1e-15);
      }
    }
  }
}

TEST(Case2Orientation, Examples) {
  EXPECT_EQ(f_orientation(render(spec(Orientation::kHorizontal, 9, Family::kTilde, 0.01))), 0);
  EXPECT_EQ(f_orientation(render(spec(Orientation::kVertical, 9, Family::kHat, 0.007))), 1);
  EXPECT_EQ(f_orientation(render(spec(Orientation::kVertical, 0, Family::kHat, 0.0))), 1);
  EXPECT_EQ(f_orientation(render(spec(Orientation::kHorizontal, 29, Family::kHat, 0.0))), 0);
}

TEST(Case2Orientation, ExhaustiveOverPositionsAndOffsets) {
  for (double a : {0.0, 0.001, 0.006, 0.0085, 0.01, 0.02}) {
    for (Family f : {Family::kTilde, Family::kHat}) {
      for (Orientation o : {Orientation::kHorizontal, Orientation::kVertical}) {
        for (int p = 0; p < 30; ++p) {
          const auto img = render(spec(o, p, f, a));
          ASSERT_EQ(f_orientation(img), static_cast<int>(o));
          if (a > 0) {
            // Pixel sum matches the label on tilde, contradicts it on hat.
            ASSERT_EQ(pixel_sum_g(img) == f_orientation(img), f == Family::kTilde);
          }
        }
      }
    }
  }
}

TEST(Case2Orientation, Malformed) {
  GrayImage flat;
  EXPECT_THROW(f_orientation(flat), MalformedImageError);
  auto img = render(spec(Orientation::kHorizontal, 5, Family::kTilde, 0.01));
  img.at(20, 20) = 0.5;
  EXPECT_THROW(f_orientation(img), MalformedImageError);
  // A cross: both a full row stripe and a full column stripe.
  GrayImage cross;
  for (std::size_t i = 0; i < kSide; ++i)
    for (std::size_t j = 0; j < 3; ++j) cross.at(i, j) = cross.at(j, i) = 1.0;
  EXPECT_THROW(f_orientation(cross), MalformedImageError);
  // Two separated stripes.
  GrayImage two;
  for (std::size_t j = 0; j < kSide; ++j) two.at(0, j) = two.at(1, j) = two.at(5, j) = 1.0;
  EXPECT_THROW(f_orientation(two), MalformedImageError);
}

TEST(Case2PixelSumG, Examples) {
  EXPECT_EQ(pixel_sum_g(render(spec(Orientation::kVertical, 2, Family::kTilde, 0.01))), 1);
  const auto hat_v = render(spec(Orientation::kVertical, 2, Family::kHat, 0.01));
  EXPECT_NEAR(pixel_sum(hat_v), 85.76, 1e-12);
  EXPECT_EQ(pixel_sum_g(hat_v), 0);
  EXPECT_NE(pixel_sum_g(hat_v), f_orientation(hat_v));
}

TEST(Case2Training, SixtyDistinctTildeImages) {
  const auto t = enumerate_training_set();
  ASSERT_EQ(t.size(), 60u);
  int ones = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_EQ(t[i].spec.family, Family::kTilde);
    EXPECT_EQ(t[i].spec.a, 0.01);
    EXPECT_EQ(t[i].label, i < 30 ? 0 : 1);
    EXPECT_EQ(t[i].spec.position, static_cast<int>(i % 30));
    ones += t[i].label;
    for (std::size_t j = 0; j < i; ++j) EXPECT_FALSE(t[i].image == t[j].image);
  }
  EXPECT_EQ(ones, 30);
}

TEST(Case2TestSet, OracleAgreement) {
  Rng rng(21);
  const auto tilde = sample_test_set(Family::kTilde, 0.009, 0.01, 1000, rng);
  const auto hat = sample_test_set(Family::kHat, 0.009, 0.01, 1000, rng);
  int vertical = 0;
  for (const auto& im : tilde) {
    EXPECT_EQ(pixel_sum_g(im.image), im.label);
    EXPECT_GE(im.spec.a, 0.009);
    EXPECT_LE(im.spec.a, 0.01);
    vertical += im.label;
  }
  for (const auto& im : hat) EXPECT_NE(pixel_sum_g(im.image), im.label);
  // 3 sigma of Binomial(1000, 1/2) is about 47.4.
  EXPECT_NEAR(vertical, 500, 47.5);
}

TEST(Case2TestSet, Errors) {
  Rng rng(1);
  EXPECT_THROW(sample_test_set(Family::kTilde, 0.01, 0.01, 10, rng), ParameterError);
  EXPECT_THROW(sample_test_set(Family::kTilde, 0.01, 0.009, 10, rng), ParameterError);
  EXPECT_THROW(sample_test_set(Family::kTilde, 0.009, 0.01, 0, rng), ParameterError);
}

TEST(Case2Cnn, Architecture) {
  Rng rng(1);
  const Network net = build_cnn(rng);
  constexpr std::size_t kParams = (25 * 1 * 24 + 24) + (25 * 24 * 48 + 48) + (3072 * 10 + 10) + (10 + 1);
  static_assert(kParams == 60213);
  EXPECT_EQ(net.param_count(), kParams);
  EXPECT_EQ(net.layers().size(), 8u);
  const Tensor out = net.predict(to_tensor(enumerate_training_set()));
  EXPECT_EQ(out.shape(), (Shape{60, 1}));
  // 32 -> 16 -> 8 after the two pools.
  const auto& pool2 = std::get<MaxPool2d>(net.layers()[5]);
  EXPECT_EQ(pool2.output_shape({48, 16, 16}), (Shape{48, 8, 8}));

  Rng rng2(1);
  const Network with_relu = build_cnn(rng2, true);
  EXPECT_EQ(with_relu.layers().size(), 9u);
  EXPECT_EQ(with_relu.param_count(), kParams);
}

TEST(Case2Pgm, HeaderAndScale) {
  const auto path = std::filesystem::temp_directory_path() / "fslab_case2_test.pgm";
  write_pgm(path, render(spec(Orientation::kVertical, 0, Family::kTilde, 0.01)));
  std::ifstream in(path, std::ios::binary);
  std::string magic;
  int w = 0, h = 0, max = 0;
  in >> magic >> w >> h >> max;
  in.get();
  EXPECT_EQ(magic, "P5");
  EXPECT_EQ(w, 32);
  EXPECT_EQ(h, 32);
  EXPECT_EQ(max, 65535);
  unsigned char px[2];
  in.read(reinterpret_cast<char*>(px), 2);
  // Pixel (0,0) is stripe 1.01, the top of the range.
  EXPECT_EQ((px[0] << 8) | px[1], 65535);
  std::filesystem::remove(path);
}
