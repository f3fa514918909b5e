#pragma once

// Deciding which structure a classifier follows. A structure is a labeling
// function with a description of what each label means. g is a false
// structure for f relative to a training set T when g agrees with f on all
// of T and disagrees with it somewhere else.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fslab/case1.h"
#include "fslab/case2.h"
#include "fslab/network.h"
#include "fslab/rng.h"

namespace fslab::diagnostics {

template <class P>
struct StructureOracle {
  std::string name;
  std::function<int(const P&)> labeler;
  // predicates[j] describes the inputs labelled j.
  std::vector<std::string> predicates;

  int operator()(const P& x) const { return labeler(x); }
};

// Yields domain points one at a time; may be stateful (a grid walk, an RNG).
template <class P>
using Sampler = std::function<P()>;

enum class Verdict { kVerified, kRefuted, kInconclusive };
std::string_view to_string(Verdict v);

template <class P>
struct VerifyResult {
  Verdict verdict = Verdict::kInconclusive;
  // Refuted: the point of T where f and g differ. Verified: a point outside
  // T where they differ. Empty when inconclusive.
  std::optional<P> witness;
  int f_label = -1;
  int g_label = -1;
  std::size_t samples_drawn = 0;
};

// Checks g == f on every point of T, then draws up to `budget` points from
// the sampler looking for a disagreement. A disagreement outside T cannot be
// ruled out by sampling, so the absence of one is inconclusive.
template <class P>
VerifyResult<P> verify_false_structure(const StructureOracle<P>& f, const StructureOracle<P>& g,
                                       std::span<const P> T, const Sampler<P>& witnesses,
                                       std::size_t budget);

struct SeverityEstimate {
  double p = 0.0;
  // Normal approximation, 1.96 standard errors.
  double half_width = 0.0;
  std::size_t n = 0;
};

// Monte-Carlo estimate of P(f != g) under the sampler's law. n >= 100.
template <class P>
SeverityEstimate estimate_severity(const StructureOracle<P>& f, const StructureOracle<P>& g,
                                   const Sampler<P>& sampler, std::size_t n);

// ------------------------------------------------------------------ case 1

StructureOracle<case1::Point> case1_original(const case1::Problem& p);
StructureOracle<case1::Point> case1_false();

// Labels for a batch of points.
using PointClassifier = std::function<std::vector<int>(std::span<const case1::Point>)>;
PointClassifier classifier_of(const Network& net);

enum class Structure { kOriginal, kFalse, kNeither };
std::string_view to_string(Structure s);

struct AttributionVerdict {
  Structure verdict = Structure::kNeither;
  double agreement_f_c0 = 0.0;
  double agreement_f_cdelta = 0.0;
  // Over C_0 and C_delta together.
  double agreement_g = 0.0;
  double threshold = 0.9;
  std::size_t grid_points = 0;  // per set, inside S_eps
};

// Agreements are taken over the grid points inside S_eps only. A net that
// agrees with g on both sets is "false"; one that agrees with f on both is
// "original". Throws ParameterError if the sets are not paired by x1 or the
// threshold is outside (0.5, 1].
AttributionVerdict classify_learned_structure(const PointClassifier& net,
                                              const case1::DiagnosticSets& sets,
                                              const StructureOracle<case1::Point>& f,
                                              const StructureOracle<case1::Point>& g,
                                              double threshold = 0.9);

// Same rule on precomputed labels for C_0 and C_delta.
AttributionVerdict attribute_predictions(std::span<const int> pred_c0,
                                         std::span<const int> pred_cdelta,
                                         const case1::DiagnosticSets& sets,
                                         const StructureOracle<case1::Point>& f,
                                         const StructureOracle<case1::Point>& g,
                                         double threshold = 0.9);

// ------------------------------------------------------------------ case 2

StructureOracle<case2::GrayImage> case2_original();
StructureOracle<case2::GrayImage> case2_false();

using ImageClassifier = std::function<std::vector<int>(std::span<const case2::LabeledImage>)>;
ImageClassifier image_classifier_of(const Network& net);

// --------------------------------------------------------------- probing

enum class Perturber {
  kCase1ZeroX2,     // x2 := 0
  kCase1AddDelta,   // x2 := delta
  kCase2FamilySwap  // same stripe rendered in the other colour code
};
std::string_view to_string(Perturber p);
// Throws ParameterError for an unknown name.
Perturber parse_perturber(std::string_view name);

struct ProbeResult {
  double flip_rate = 0.0;
  // Largest infinity-norm distance between a point and its perturbation.
  double max_perturbation = 0.0;
  std::size_t n = 0;
  std::size_t flips = 0;
};

// Fraction of points whose predicted label changes under the perturbation.
// Throws ParameterError when the perturber does not apply to the data type
// or the data is empty.
ProbeResult adversarial_probe(const PointClassifier& net, std::span<const case1::Point> data,
                              Perturber perturber, const case1::Problem& problem);
ProbeResult adversarial_probe(const ImageClassifier& net,
                              std::span<const case2::LabeledImage> data, Perturber perturber);

}  // namespace fslab::diagnostics
