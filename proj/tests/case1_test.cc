#include "fslab/case1.h"

#include <gtest/gtest.h>

#include <cmath>

#include "fslab/errors.h"
#include "fslab/training.h"

using namespace fslab;
using namespace fslab::case1;

namespace {

const Problem kDefault;

}  // namespace

TEST(Case1Problem, DefaultIsValid) {
  EXPECT_TRUE(kDefault.violations().empty());
  EXPECT_NEAR(kDefault.b(), 20.0 / 27.0, 1e-15);
  // b^2 / (2 (a - b)) by hand: (400/729) / (2 (20 - 20/27)) = 0.0142450...
  EXPECT_NEAR(kDefault.epsilon_bound(), 0.014245014245, 1e-10);
}

TEST(Case1Problem, ViolationsNameTheConstraint) {
  Problem p;
  p.epsilon = 0.02;
  auto v = p.violations();
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NE(v[0].find("epsilon < b^2/(2(a-b))"), std::string::npos);
  EXPECT_NE(v[0].find("0.014245"), std::string::npos);

  p = kDefault;
  p.delta = p.epsilon;
  v = p.violations();
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NE(v[0].find("0 < delta < epsilon"), std::string::npos);

  p = kDefault;
  p.K = 20;
  EXPECT_FALSE(p.violations().empty());
  EXPECT_THROW(p.validate(), ConstructionError);
}

TEST(Case1FA, Examples) {
  EXPECT_EQ(f_a(kDefault, 1.0), 0);
  EXPECT_EQ(f_a(kDefault, 0.97), 1);
  Problem one{1, 2, 0.01, 0.001};
  EXPECT_EQ(f_a(one, 1.0), 1);
  EXPECT_THROW(f_a(kDefault, 0.0), DomainError);
  EXPECT_THROW(f_a(kDefault, -1.0), DomainError);
  EXPECT_EQ(f_a(kDefault, Point{0.97, 0.5}), f_a(kDefault, 0.97));
}

TEST(Case1StableRegion, Intervals) {
  const IntervalUnion s = stable_region(kDefault);
  ASSERT_EQ(s.size(), 7u);
  EXPECT_EQ(s[0].k, 26);
  EXPECT_NEAR(s[0].lo, 20.0 / 27 + 0.01, 1e-15);
  EXPECT_NEAR(s[0].hi, 20.0 / 26 - 0.01, 1e-15);
  EXPECT_NEAR(s[0].lo, 0.75074, 1e-5);
  EXPECT_NEAR(s[0].hi, 0.75923, 1e-5);
  EXPECT_EQ(s[6].k, 20);
  EXPECT_NEAR(s[6].lo, 0.96238, 1e-5);
  EXPECT_NEAR(s[6].hi, 0.99, 1e-15);
  for (std::size_t i = 0; i + 1 < s.size(); ++i) EXPECT_LT(s[i].hi, s[i + 1].lo);
}

TEST(Case1StableRegion, ConstantAndAwayFromJumps) {
  const IntervalUnion s = stable_region(kDefault);
  for (const Interval& iv : s.intervals()) {
    for (int j = 1; j < 10000; ++j) {
      const double x = iv.lo + iv.length() * j / 10000.0;
      ASSERT_EQ(f_a(kDefault, x), iv.label) << "k=" << iv.k << " x=" << x;
      ASSERT_GT(distance_to_jump(kDefault, x), kDefault.epsilon);
    }
  }
}

TEST(Case1StableRegion, InvalidProblemThrows) {
  Problem p;
  p.epsilon = 0.02;
  EXPECT_THROW(stable_region(p), ConstructionError);
}

TEST(Case1Sampling, LiftsAndLabels) {
  Rng rng(5);
  for (const auto& x : sample_training_set(kDefault, 500, Lift::kDelta, rng)) {
    EXPECT_EQ(x.label, f_a(kDefault, x.x1));
    EXPECT_EQ(x.x2, x.label == 1 ? 1e-4 : 0.0);
    // g agrees with f on every lifted training set.
    EXPECT_EQ(false_g(x.x2), f_a(kDefault, x.x1));
  }
  for (const auto& x : sample_training_set(kDefault, 500, Lift::kZero, rng)) {
    EXPECT_EQ(x.x2, 0.0);
  }
}

TEST(Case1Sampling, SevenPointsInSevenIntervals) {
  Rng rng(9);
  const auto pts = sample_training_set(kDefault, 7, Lift::kDelta, rng, Allocation::kOnePerInterval);
  const IntervalUnion s = stable_region(kDefault);
  std::vector<int> hits(s.size());
  for (const auto& x : pts) {
    const std::size_t i = s.locate(x.x1);
    ASSERT_LT(i, s.size());
    ++hits[i];
  }
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(sample_training_set(kDefault, 6, Lift::kDelta, rng, Allocation::kOnePerInterval),
               ParameterError);
}

TEST(Case1Sampling, BalancedCounts) {
  Rng rng(1);
  const auto pts = sample_training_set(kDefault, 5000, Lift::kZero, rng);
  const IntervalUnion s = stable_region(kDefault);
  std::vector<int> hits(s.size());
  for (const auto& x : pts) ++hits[s.locate(x.x1)];
  for (int h : hits) EXPECT_TRUE(h == 714 || h == 715) << h;
}

TEST(Case1Sampling, LabelsAreStableUnderSmallShifts) {
  Rng rng(2);
  const IntervalUnion s = stable_region(kDefault);
  for (const auto& x : sample_training_set(kDefault, 300, Lift::kDelta, rng)) {
    const Interval& iv = s[s.locate(x.x1)];
    const double room = std::min(x.x1 - iv.lo, iv.hi - x.x1);
    for (double t : {-0.999, -0.5, 0.5, 0.999}) {
      EXPECT_EQ(f_a(kDefault, x.x1 + t * room), x.label);
    }
  }
}

TEST(Case1Sampling, FalseStructureWitnessExists) {
  // Some (x1, 0) has f_a = 1 while g = 0.
  bool found = false;
  const IntervalUnion s = stable_region(kDefault);
  for (const Interval& iv : s.intervals()) {
    const double mid = 0.5 * (iv.lo + iv.hi);
    if (f_a(kDefault, mid) == 1 && false_g(0.0) == 0) found = true;
  }
  EXPECT_TRUE(found);
}

TEST(Case1FalseG, ExactZeroTest) {
  EXPECT_EQ(false_g(0.0), 0);
  EXPECT_EQ(false_g(-0.0), 0);
  EXPECT_EQ(false_g(1e-4), 1);
  EXPECT_EQ(false_g(-1e-300), 1);
}

TEST(Case1Diagnostic, GridAndMask) {
  const auto d = diagnostic_sets(kDefault, 2000);
  ASSERT_EQ(d.size(), 2000u);
  EXPECT_EQ(d.x1.front(), kDefault.b());
  EXPECT_EQ(d.x1.back(), 1.0);
  const IntervalUnion s = stable_region(kDefault);
  // Brute-force membership, and per-interval counts from the grid formula.
  std::size_t brute = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(d.c0[i].x2, 0.0);
    EXPECT_TRUE(d.cdelta[i].x2 == 0.0 || d.cdelta[i].x2 == kDefault.delta);
    EXPECT_EQ(d.cdelta[i].x2, kDefault.delta * f_a(kDefault, d.x1[i]));
    bool in = false;
    for (const Interval& iv : s.intervals()) in = in || (iv.lo < d.x1[i] && d.x1[i] < iv.hi);
    EXPECT_EQ(d.in_stable[i], in);
    brute += in;
  }
  const double b = kDefault.b(), h = (1.0 - b) / 1999.0;
  std::size_t counted = 0;
  for (const Interval& iv : s.intervals()) {
    // Grid indices i with lo < b + i h < hi.
    const auto first = static_cast<long>(std::floor((iv.lo - b) / h)) + 1;
    const auto last = static_cast<long>(std::ceil((iv.hi - b) / h)) - 1;
    counted += static_cast<std::size_t>(last - first + 1);
  }
  EXPECT_EQ(d.stable_count(), brute);
  EXPECT_EQ(brute, counted);
  EXPECT_THROW(diagnostic_sets(kDefault, 1), ParameterError);
}

TEST(Case1Stable, LogitScale) {
  const double n = logit_scale(1e-3, 7);
  EXPECT_NEAR(n, std::log(6999.5), 1e-4);
  EXPECT_NEAR(n, 8.853, 1e-3);
  // Both strict bounds: -log sigmoid(N) < eta / r, and the same for -N.
  EXPECT_LT(std::log1p(std::exp(-n)), 1e-3 / 7);
  EXPECT_THROW(logit_scale(0.0, 7), ParameterError);
  EXPECT_THROW(logit_scale(1e-3, 0), ParameterError);
}

TEST(Case1Stable, Examples) {
  const Network net = build_stable_network(kDefault, 1e-3, 7);
  const double n = logit_scale(1e-3, 7);
  EXPECT_GE(net.predict_one({0.99, 0.3})[0], 8.85);
  EXPECT_NEAR(net.predict_one({0.97, 0.5})[0], n, 1e-9);
  EXPECT_NEAR(net.predict_one({1.0, 0.0})[0], -n, 1e-9);
  EXPECT_EQ(net.param_count(), (2 * 104 + 104) + (104 + 1));
}

TEST(Case1Stable, ExactOnSEps) {
  const Network net = build_stable_network(kDefault, 1e-3, 7);
  const double n = logit_scale(1e-3, 7);
  Rng rng(11);
  const auto pts = sample_stable_inputs(kDefault, 100000, rng);
  const Tensor logits = net.predict(to_tensor(pts));
  std::size_t errors = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const int f = f_a(kDefault, pts[i]);
    errors += round_sigmoid(logits[i]) != f;
    // Logits sit at +-N on S_eps.
    EXPECT_NEAR(std::abs(logits[i]), n, 1e-9);
  }
  EXPECT_EQ(errors, 0u);
}

TEST(Case1Stable, LossCertificate) {
  const Network net = build_stable_network(kDefault, 1e-3, 7);
  Rng rng(12);
  for (int t = 0; t < 100; ++t) {
    const auto pts = sample_stable_inputs(kDefault, 7, rng);
    std::vector<double> w;
    for (const auto& x : pts) w.push_back(f_a(kDefault, x));
    const Tensor logits = net.predict(to_tensor(pts));
    EXPECT_LE(bce_loss(logits.data(), w), 1e-3);
  }
}

TEST(Case1Stable, IgnoresX2) {
  const Network net = build_stable_network(kDefault, 1e-3, 7);
  const auto& first = std::get<Dense>(net.layers()[0]);
  ASSERT_EQ(first.weight().dim(0), 104u);
  for (std::size_t u = 0; u < 104; ++u) EXPECT_EQ(first.weight()[2 * u + 1], 0.0);
}

TEST(Case1Stable, InvalidProblemThrows) {
  Problem p;
  p.delta = 0.5;
  EXPECT_THROW(build_stable_network(p, 1e-3, 7), ConstructionError);
}

TEST(Case1Stable, SampledInputsLieInSEps) {
  Rng rng(3);
  const IntervalUnion s = stable_region(kDefault);
  for (const auto& x : sample_stable_inputs(kDefault, 10000, rng)) {
    EXPECT_TRUE(s.contains(x.x1));
    EXPECT_GE(x.x2, 0.0);
    EXPECT_LT(x.x2, 1.0);
  }
}
