#include "fslab/diagnostics.h"

#include <algorithm>
#include <cmath>

#include "fslab/errors.h"
#include "fslab/training.h"

namespace fslab::diagnostics {

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kVerified: return "verified";
    case Verdict::kRefuted: return "refuted";
    case Verdict::kInconclusive: return "inconclusive";
  }
  return "?";
}

std::string_view to_string(Structure s) {
  switch (s) {
    case Structure::kOriginal: return "original";
    case Structure::kFalse: return "false";
    case Structure::kNeither: return "neither";
  }
  return "?";
}

std::string_view to_string(Perturber p) {
  switch (p) {
    case Perturber::kCase1ZeroX2: return "case1-zero-x2";
    case Perturber::kCase1AddDelta: return "case1-add-delta";
    case Perturber::kCase2FamilySwap: return "case2-family-swap";
  }
  return "?";
}

Perturber parse_perturber(std::string_view name) {
  for (Perturber p : {Perturber::kCase1ZeroX2, Perturber::kCase1AddDelta,
                      Perturber::kCase2FamilySwap}) {
    if (name == to_string(p)) return p;
  }
  throw ParameterError("unknown perturber '" + std::string(name) +
                       "' (expected case1-zero-x2, case1-add-delta or case2-family-swap)");
}

template <class P>
VerifyResult<P> verify_false_structure(const StructureOracle<P>& f, const StructureOracle<P>& g,
                                       std::span<const P> T, const Sampler<P>& witnesses,
                                       std::size_t budget) {
  if (T.empty()) throw ParameterError("verify: training set is empty");
  if (budget == 0) throw ParameterError("verify: witness budget must be at least 1");
  VerifyResult<P> r;
  for (const P& x : T) {
    const int fx = f(x), gx = g(x);
    if (fx != gx) {
      r.verdict = Verdict::kRefuted;
      r.witness = x;
      r.f_label = fx;
      r.g_label = gx;
      return r;
    }
  }
  for (std::size_t i = 0; i < budget; ++i) {
    const P x = witnesses();
    ++r.samples_drawn;
    const int fx = f(x), gx = g(x);
    if (fx != gx) {
      r.verdict = Verdict::kVerified;
      r.witness = x;
      r.f_label = fx;
      r.g_label = gx;
      return r;
    }
  }
  return r;
}

template <class P>
SeverityEstimate estimate_severity(const StructureOracle<P>& f, const StructureOracle<P>& g,
                                   const Sampler<P>& sampler, std::size_t n) {
  if (n < 100) throw ParameterError("severity: need at least 100 samples");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const P x = sampler();
    hits += f(x) != g(x);
  }
  SeverityEstimate e;
  e.n = n;
  e.p = static_cast<double>(hits) / static_cast<double>(n);
  e.half_width = 1.96 * std::sqrt(e.p * (1.0 - e.p) / static_cast<double>(n));
  return e;
}

template VerifyResult<case1::Point> verify_false_structure(
    const StructureOracle<case1::Point>&, const StructureOracle<case1::Point>&,
    std::span<const case1::Point>, const Sampler<case1::Point>&, std::size_t);
template VerifyResult<case2::GrayImage> verify_false_structure(
    const StructureOracle<case2::GrayImage>&, const StructureOracle<case2::GrayImage>&,
    std::span<const case2::GrayImage>, const Sampler<case2::GrayImage>&, std::size_t);
template SeverityEstimate estimate_severity(const StructureOracle<case1::Point>&,
                                            const StructureOracle<case1::Point>&,
                                            const Sampler<case1::Point>&, std::size_t);
template SeverityEstimate estimate_severity(const StructureOracle<case2::GrayImage>&,
                                            const StructureOracle<case2::GrayImage>&,
                                            const Sampler<case2::GrayImage>&, std::size_t);

// ------------------------------------------------------------------ case 1

StructureOracle<case1::Point> case1_original(const case1::Problem& p) {
  return {"f_a",
          [p](const case1::Point& x) { return case1::f_a(p, x); },
          {"ceil(a/x1) is even", "ceil(a/x1) is odd"}};
}

StructureOracle<case1::Point> case1_false() {
  return {"g",
          [](const case1::Point& x) { return case1::false_g(x); },
          {"x2 is 0", "x2 is not 0"}};
}

PointClassifier classifier_of(const Network& net) {
  return [&net](std::span<const case1::Point> pts) {
    return predict_labels(net, case1::to_tensor({pts.begin(), pts.end()}));
  };
}

AttributionVerdict attribute_predictions(std::span<const int> pred_c0,
                                         std::span<const int> pred_cdelta,
                                         const case1::DiagnosticSets& sets,
                                         const StructureOracle<case1::Point>& f,
                                         const StructureOracle<case1::Point>& g,
                                         double threshold) {
  if (!(threshold > 0.5 && threshold <= 1.0)) {
    throw ParameterError("attribution threshold must be in (0.5, 1]");
  }
  const std::size_t n = sets.size();
  if (sets.c0.size() != n || sets.cdelta.size() != n || sets.in_stable.size() != n ||
      pred_c0.size() != n || pred_cdelta.size() != n) {
    throw ParameterError("attribution: C_0, C_delta and predictions differ in size");
  }
  std::size_t m = 0, f0 = 0, fd = 0, g_ok = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (sets.c0[i].x1 != sets.x1[i] || sets.cdelta[i].x1 != sets.x1[i]) {
      throw ParameterError("attribution: C_0 and C_delta are not paired by x1");
    }
    if (!sets.in_stable[i]) continue;
    ++m;
    f0 += pred_c0[i] == f(sets.c0[i]);
    fd += pred_cdelta[i] == f(sets.cdelta[i]);
    g_ok += (pred_c0[i] == g(sets.c0[i])) + (pred_cdelta[i] == g(sets.cdelta[i]));
  }
  if (m == 0) throw ParameterError("attribution: no grid point lies in S_eps");
  AttributionVerdict v;
  v.threshold = threshold;
  v.grid_points = m;
  v.agreement_f_c0 = static_cast<double>(f0) / static_cast<double>(m);
  v.agreement_f_cdelta = static_cast<double>(fd) / static_cast<double>(m);
  v.agreement_g = static_cast<double>(g_ok) / static_cast<double>(2 * m);
  if (v.agreement_g >= threshold) {
    v.verdict = Structure::kFalse;
  } else if (v.agreement_f_c0 >= threshold && v.agreement_f_cdelta >= threshold) {
    v.verdict = Structure::kOriginal;
  }
  return v;
}

AttributionVerdict classify_learned_structure(const PointClassifier& net,
                                              const case1::DiagnosticSets& sets,
                                              const StructureOracle<case1::Point>& f,
                                              const StructureOracle<case1::Point>& g,
                                              double threshold) {
  if (sets.c0.size() != sets.cdelta.size()) {
    throw ParameterError("attribution: C_0 and C_delta differ in size");
  }
  const auto p0 = net(sets.c0);
  const auto pd = net(sets.cdelta);
  return attribute_predictions(p0, pd, sets, f, g, threshold);
}

// ------------------------------------------------------------------ case 2

StructureOracle<case2::GrayImage> case2_original() {
  return {"f_orientation",
          [](const case2::GrayImage& x) { return case2::f_orientation(x); },
          {"x has a light horizontal stripe", "x has a light vertical stripe"}};
}

StructureOracle<case2::GrayImage> case2_false() {
  return {"pixel_sum_g",
          [](const case2::GrayImage& x) { return case2::pixel_sum_g(x); },
          {"the pixel sum of x is <= 96", "the pixel sum of x is > 96"}};
}

ImageClassifier image_classifier_of(const Network& net) {
  return [&net](std::span<const case2::LabeledImage> images) {
    return predict_labels(net, case2::to_tensor(images), 250);
  };
}

// --------------------------------------------------------------- probing

namespace {

ProbeResult count_flips(std::span<const int> before, std::span<const int> after, double norm) {
  ProbeResult r;
  r.n = before.size();
  for (std::size_t i = 0; i < r.n; ++i) r.flips += before[i] != after[i];
  r.flip_rate = static_cast<double>(r.flips) / static_cast<double>(r.n);
  r.max_perturbation = norm;
  return r;
}

}  // namespace

ProbeResult adversarial_probe(const PointClassifier& net, std::span<const case1::Point> data,
                              Perturber perturber, const case1::Problem& problem) {
  if (perturber == Perturber::kCase2FamilySwap) {
    throw ParameterError("perturber case2-family-swap does not apply to case1 points");
  }
  if (data.empty()) throw ParameterError("probe: no points");
  const double x2 = perturber == Perturber::kCase1ZeroX2 ? 0.0 : problem.delta;
  std::vector<case1::Point> moved(data.begin(), data.end());
  double norm = 0.0;
  for (auto& pt : moved) {
    norm = std::max(norm, std::abs(pt.x2 - x2));
    pt.x2 = x2;
  }
  return count_flips(net(data), net(moved), norm);
}

ProbeResult adversarial_probe(const ImageClassifier& net,
                              std::span<const case2::LabeledImage> data, Perturber perturber) {
  if (perturber != Perturber::kCase2FamilySwap) {
    throw ParameterError("perturber " + std::string(to_string(perturber)) +
                         " does not apply to case2 images");
  }
  if (data.empty()) throw ParameterError("probe: no images");
  std::vector<case2::LabeledImage> moved(data.begin(), data.end());
  double norm = 0.0;
  for (std::size_t i = 0; i < moved.size(); ++i) {
    moved[i].spec.family = case2::other(moved[i].spec.family);
    moved[i].image = case2::render(moved[i].spec);
    const auto a = data[i].image.pixels();
    const auto b = moved[i].image.pixels();
    for (std::size_t j = 0; j < a.size(); ++j) norm = std::max(norm, std::abs(a[j] - b[j]));
  }
  return count_flips(net(data), net(moved), norm);
}

}  // namespace fslab::diagnostics
