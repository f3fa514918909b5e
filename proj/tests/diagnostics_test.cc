#include "fslab/diagnostics.h"

#include <gtest/gtest.h>

#include <cmath>

#include "fslab/errors.h"

using namespace fslab;
using namespace fslab::diagnostics;

namespace {

const case1::Problem kP;

// Logit +10 when x2 = delta, -10 when x2 = 0: an exact implementation of g.
Network exact_g_net(const case1::Problem& p) {
  return Network({2}, {Dense(Tensor({1, 2}, {0.0, 20.0 / p.delta}), Tensor({1}, {-10.0}))});
}

Network constant_zero_net() {
  return Network({2}, {Dense(Tensor({1, 2}, {0.0, 0.0}), Tensor({1}, {-5.0}))});
}

std::vector<case1::Point> t_delta(std::size_t r, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<case1::Point> out;
  for (const auto& x : case1::sample_training_set(kP, r, case1::Lift::kDelta, rng))
    out.push_back(x.point());
  return out;
}

std::vector<case1::Point> stable_grid(const case1::DiagnosticSets& d, bool delta) {
  std::vector<case1::Point> out;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d.in_stable[i]) out.push_back(delta ? d.cdelta[i] : d.c0[i]);
  return out;
}

}  // namespace

TEST(Verify, Case1FalseStructureIsVerified) {
  const auto T = t_delta(7, 1);
  const auto d = case1::diagnostic_sets(kP, 2000);
  std::size_t i = 0;
  Sampler<case1::Point> walk = [&] { return d.c0[i++ % d.size()]; };
  const auto r = verify_false_structure<case1::Point>(case1_original(kP), case1_false(), T, walk, 2000);
  EXPECT_EQ(r.verdict, Verdict::kVerified);
  ASSERT_TRUE(r.witness.has_value());
  EXPECT_EQ(case1::f_a(kP, *r.witness), 1);
  EXPECT_EQ(case1::false_g(*r.witness), 0);
  EXPECT_NE(r.f_label, r.g_label);
}

TEST(Verify, IdenticalStructuresAreInconclusive) {
  const auto T = t_delta(50, 2);
  Rng rng(3);
  Sampler<case1::Point> any = [&] { return case1::Point{rng.uniform(kP.b(), 1.0), rng.uniform()}; };
  const auto f = case1_original(kP);
  const auto r = verify_false_structure<case1::Point>(f, f, T, any, 500);
  EXPECT_EQ(r.verdict, Verdict::kInconclusive);
  EXPECT_FALSE(r.witness.has_value());
  EXPECT_EQ(r.samples_drawn, 500u);
}

TEST(Verify, DisagreementOnTrainingSetRefutes) {
  const auto T = t_delta(7, 4);
  StructureOracle<case1::Point> g = case1_false();
  const case1::Point bad = T[3];
  g.labeler = [bad](const case1::Point& x) {
    return x == bad ? 1 - case1::false_g(x) : case1::false_g(x);
  };
  Sampler<case1::Point> never = [] { return case1::Point{1.0, 0.0}; };
  const auto r = verify_false_structure<case1::Point>(case1_original(kP), g, T, never, 10);
  EXPECT_EQ(r.verdict, Verdict::kRefuted);
  ASSERT_TRUE(r.witness.has_value());
  EXPECT_EQ(*r.witness, bad);
  EXPECT_EQ(r.samples_drawn, 0u);
}

TEST(Verify, Case2FalseStructureIsVerified) {
  std::vector<case2::GrayImage> T;
  for (const auto& im : case2::enumerate_training_set()) T.push_back(im.image);
  Rng rng(5);
  Sampler<case2::GrayImage> hats = [&] {
    return case2::sample_test_set(case2::Family::kHat, 0.009, 0.01, 1, rng).front().image;
  };
  const auto r = verify_false_structure<case2::GrayImage>(case2_original(), case2_false(), T, hats, 10);
  EXPECT_EQ(r.verdict, Verdict::kVerified);
  ASSERT_TRUE(r.witness.has_value());
  EXPECT_NE(case2::f_orientation(*r.witness), case2::pixel_sum_g(*r.witness));
}

TEST(Verify, Errors) {
  Sampler<case1::Point> s = [] { return case1::Point{1.0, 0.0}; };
  const auto f = case1_original(kP);
  EXPECT_THROW(verify_false_structure<case1::Point>(f, f, {}, s, 10), ParameterError);
  const auto T = t_delta(7, 1);
  EXPECT_THROW(verify_false_structure<case1::Point>(f, f, T, s, 0), ParameterError);
}

TEST(Severity, EqualStructures) {
  Rng rng(1);
  Sampler<case1::Point> s = [&] { return case1::Point{rng.uniform(kP.b(), 1.0), 0.0}; };
  const auto f = case1_original(kP);
  const auto e = estimate_severity<case1::Point>(f, f, s, 1000);
  EXPECT_EQ(e.p, 0.0);
  EXPECT_EQ(e.half_width, 0.0);
  EXPECT_THROW(estimate_severity<case1::Point>(f, f, s, 99), ParameterError);
}

TEST(Severity, HatFamilyAlwaysDisagrees) {
  Rng rng(2);
  Sampler<case2::GrayImage> hats = [&] {
    return case2::sample_test_set(case2::Family::kHat, 1e-4, 0.05, 1, rng).front().image;
  };
  const auto e = estimate_severity<case2::GrayImage>(case2_original(), case2_false(), hats, 500);
  EXPECT_EQ(e.p, 1.0);
}

TEST(Severity, Case1MatchesIntervalLengths) {
  // f_a = 1 on (a/(k+1), a/k] for even k; relative length within [b, 1].
  double exact = 0.0;
  for (int k = kP.a; k <= kP.K; ++k)
    if (k % 2 == 0) exact += kP.a / static_cast<double>(k) - kP.a / static_cast<double>(k + 1);
  exact /= 1.0 - kP.b();

  Rng rng(7);
  Sampler<case1::Point> c0 = [&] { return case1::Point{rng.uniform(kP.b(), 1.0), 0.0}; };
  const auto e = estimate_severity<case1::Point>(case1_original(kP), case1_false(), c0, 20000);
  EXPECT_NEAR(e.p, exact, 1.5 * e.half_width);
  EXPECT_GT(e.half_width, 0.0);
}

TEST(Severity, HalfWidthShrinksLikeRootN) {
  Rng r1(8), r2(8);
  Sampler<case1::Point> s1 = [&] { return case1::Point{r1.uniform(kP.b(), 1.0), 0.0}; };
  Sampler<case1::Point> s2 = [&] { return case1::Point{r2.uniform(kP.b(), 1.0), 0.0}; };
  const auto a = estimate_severity<case1::Point>(case1_original(kP), case1_false(), s1, 5000);
  const auto b = estimate_severity<case1::Point>(case1_original(kP), case1_false(), s2, 10000);
  EXPECT_NEAR(b.half_width / a.half_width, 1.0 / std::sqrt(2.0), 0.2 / std::sqrt(2.0));
}

TEST(Attribution, ThreePlugInOracles) {
  const auto d = case1::diagnostic_sets(kP, 2000);
  const auto f = case1_original(kP);
  const auto g = case1_false();

  const Network gnet = exact_g_net(kP);
  const auto vg = classify_learned_structure(classifier_of(gnet), d, f, g);
  EXPECT_EQ(vg.verdict, Structure::kFalse);
  EXPECT_EQ(vg.agreement_g, 1.0);

  const Network stable = case1::build_stable_network(kP, 1e-3, 7);
  const auto vs = classify_learned_structure(classifier_of(stable), d, f, g);
  EXPECT_EQ(vs.verdict, Structure::kOriginal);
  EXPECT_EQ(vs.agreement_f_c0, 1.0);
  EXPECT_EQ(vs.agreement_f_cdelta, 1.0);

  const Network zero = constant_zero_net();
  const auto vz = classify_learned_structure(classifier_of(zero), d, f, g);
  EXPECT_EQ(vz.verdict, Structure::kNeither);
  EXPECT_LT(vz.agreement_g, 0.9);
  EXPECT_EQ(vz.grid_points, d.stable_count());
}

TEST(Attribution, Errors) {
  auto d = case1::diagnostic_sets(kP, 100);
  const auto f = case1_original(kP);
  const auto g = case1_false();
  const Network net = constant_zero_net();
  EXPECT_THROW(classify_learned_structure(classifier_of(net), d, f, g, 0.5), ParameterError);
  EXPECT_THROW(classify_learned_structure(classifier_of(net), d, f, g, 1.1), ParameterError);
  auto shifted = d;
  shifted.cdelta[3].x1 += 1e-3;
  EXPECT_THROW(classify_learned_structure(classifier_of(net), shifted, f, g), ParameterError);
  auto shorter = d;
  shorter.cdelta.pop_back();
  EXPECT_THROW(classify_learned_structure(classifier_of(net), shorter, f, g), ParameterError);
}

TEST(Probe, ExactGFlipsEverywhereOnOnes) {
  const auto d = case1::diagnostic_sets(kP, 2000);
  std::vector<case1::Point> ones;
  for (const auto& x : d.cdelta)
    if (x.x2 != 0) ones.push_back(x);
  const Network gnet = exact_g_net(kP);
  const auto r = adversarial_probe(classifier_of(gnet), ones, Perturber::kCase1ZeroX2, kP);
  EXPECT_EQ(r.flip_rate, 1.0);
  EXPECT_EQ(r.max_perturbation, 1e-4);
}

TEST(Probe, StableNetworkNeverFlips) {
  const auto d = case1::diagnostic_sets(kP, 2000);
  const Network net = case1::build_stable_network(kP, 1e-3, 7);
  const auto c = classifier_of(net);
  EXPECT_EQ(adversarial_probe(c, stable_grid(d, true), Perturber::kCase1ZeroX2, kP).flip_rate, 0.0);
  EXPECT_EQ(adversarial_probe(c, stable_grid(d, false), Perturber::kCase1AddDelta, kP).flip_rate,
            0.0);
}

TEST(Probe, PixelSumFlipsUnderFamilySwap) {
  const auto images = case2::enumerate_training_set(0.01);
  ImageClassifier g = [](std::span<const case2::LabeledImage> ims) {
    std::vector<int> out;
    for (const auto& im : ims) out.push_back(case2::pixel_sum_g(im.image));
    return out;
  };
  const auto r = adversarial_probe(g, images, Perturber::kCase2FamilySwap);
  EXPECT_EQ(r.flip_rate, 1.0);
  EXPECT_NEAR(r.max_perturbation, 0.02, 1e-15);
}

TEST(Probe, InapplicablePerturber) {
  const Network net = constant_zero_net();
  const std::vector<case1::Point> pts{{0.9, 0.0}};
  EXPECT_THROW(adversarial_probe(classifier_of(net), pts, Perturber::kCase2FamilySwap, kP),
               ParameterError);
  ImageClassifier any = [](std::span<const case2::LabeledImage> ims) {
    return std::vector<int>(ims.size(), 0);
  };
  const auto images = case2::enumerate_training_set();
  EXPECT_THROW(adversarial_probe(any, images, Perturber::kCase1ZeroX2), ParameterError);
  EXPECT_THROW(adversarial_probe(classifier_of(net), {}, Perturber::kCase1ZeroX2, kP),
               ParameterError);
  EXPECT_EQ(parse_perturber("case1-add-delta"), Perturber::kCase1AddDelta);
  EXPECT_THROW(parse_perturber("rotate"), ParameterError);
}
