#pragma once

// The interval classification problem: x = (x1, x2) in [b, 1] x [0, 1] is
// labelled by f_a(x) = ceil(a / x1) mod 2, which ignores x2. Training sets
// either leave x2 at 0 or "lift" it to delta * f_a(x1), which plants the
// false structure "x2 is nonzero".

#include <cstddef>
#include <string>
#include <vector>

#include "fslab/network.h"
#include "fslab/rng.h"
#include "fslab/training.h"

namespace fslab::case1 {

struct Problem {
  int a = 20;
  int K = 26;
  double epsilon = 1e-2;
  double delta = 1e-4;

  double b() const { return static_cast<double>(a) / (K + 1); }
  // Largest admissible epsilon, b^2 / (2 (a - b)).
  double epsilon_bound() const;
  // Violated constraints, each naming the inequality it breaks. Empty when
  // the problem is well posed.
  std::vector<std::string> violations() const;
  // Throws ConstructionError listing every violation.
  void validate() const;
};

struct Point {
  double x1 = 0.0;
  double x2 = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

struct LabeledPoint {
  double x1 = 0.0;
  double x2 = 0.0;
  int label = 0;
  Point point() const { return {x1, x2}; }
};

// Open interval (lo, hi) on which f_a equals `label`; k is the index in
// a/(k+1) < x1 < a/k.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  int k = 0;
  int label = 0;
  bool contains(double x) const { return lo < x && x < hi; }
  double length() const { return hi - lo; }
};

// Disjoint open intervals sorted by lower end.
class IntervalUnion {
 public:
  explicit IntervalUnion(std::vector<Interval> intervals);

  const std::vector<Interval>& intervals() const { return intervals_; }
  std::size_t size() const { return intervals_.size(); }
  const Interval& operator[](std::size_t i) const { return intervals_[i]; }
  bool contains(double x) const;
  // Index of the interval containing x, or size() when none does.
  std::size_t locate(double x) const;

 private:
  std::vector<Interval> intervals_;
};

// ceil(a / x1) mod 2. Throws DomainError for x1 <= 0.
int f_a(const Problem& p, double x1);
inline int f_a(const Problem& p, const Point& x) { return f_a(p, x.x1); }

// S_eps: union over k = a..K of (a/(k+1) + eps, a/k - eps). Validates p.
IntervalUnion stable_region(const Problem& p);

// Distance from x1 to the nearest jump a/k of f_a, k = a+1..K (interior
// jumps of [b, 1]).
double distance_to_jump(const Problem& p, double x1);

enum class Lift { kZero, kDelta };

enum class Allocation {
  // Counts spread as evenly as possible; the first r mod m intervals get one
  // extra sample.
  kBalanced,
  // Exactly one sample per interval; requires r == number of intervals.
  kOnePerInterval,
};

// T_0^r / T_delta^r: x1 uniform inside its assigned interval of S_eps,
// x2 = 0 (kZero) or delta * f_a(x1) (kDelta), label f_a(x1). Points are
// emitted interval by interval in ascending x1 order of the intervals.
std::vector<LabeledPoint> sample_training_set(const Problem& p, std::size_t r, Lift lift,
                                              Rng& rng,
                                              Allocation alloc = Allocation::kBalanced);

// n points uniform on S_eps x [0, 1]: the interval is picked with
// probability proportional to its length.
std::vector<Point> sample_stable_inputs(const Problem& p, std::size_t n, Rng& rng);

// The false-structure labeler: 0 iff x2 is exactly zero.
inline int false_g(double x2) { return x2 == 0.0 ? 0 : 1; }
inline int false_g(const Point& x) { return false_g(x.x2); }

// Uniform grid over [b, 1] paired as C_0 = {(x1, 0)} and
// C_delta = {(x1, delta f_a(x1))}, with the mask of grid points in S_eps.
struct DiagnosticSets {
  std::vector<double> x1;
  std::vector<Point> c0;
  std::vector<Point> cdelta;
  std::vector<bool> in_stable;

  std::size_t size() const { return x1.size(); }
  std::size_t stable_count() const;
};

DiagnosticSets diagnostic_sets(const Problem& p, std::size_t grid_n);

// Batched network input (n, 2) for a list of points.
Tensor to_tensor(const std::vector<Point>& points);
Dataset to_dataset(const std::vector<LabeledPoint>& points);

// Logit magnitude N with -log(sigmoid(N)) < eta / r: the root
// N* = -log(expm1(eta / r)) of sigmoid(N) = exp(-eta / r), widened by a
// relative 1e-12 so rounding in the network evaluation cannot eat the
// strict inequality.
double logit_scale(double eta, std::size_t r);

// Two-layer ReLU network Psi = 2 N Phi - N with Phi a sum of bump units
// equal to f_a on S_eps x [0, 1]. Each bump is four ReLU units in x1 only
// (x2 weights are exactly zero); the hidden layer is zero-padded to width
// 4K to match the trained architecture. Any r points of S_eps x [0, 1] then
// have summed cross-entropy below eta.
Network build_stable_network(const Problem& p, double eta, std::size_t r);

// The architecture trained in experiment I: dense(2 -> 4K), ReLU,
// dense(4K -> 1), all weights zero.
Network make_interval_network(const Problem& p);

}  // namespace fslab::case1
