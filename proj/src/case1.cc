#include "fslab/case1.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fslab/errors.h"

namespace fslab::case1 {

double Problem::epsilon_bound() const {
  const double bb = b();
  return bb * bb / (2.0 * (a - bb));
}

std::vector<std::string> Problem::violations() const {
  std::vector<std::string> out;
  auto fmt = [](double v) {
    std::ostringstream s;
    s.precision(8);
    s << v;
    return s.str();
  };
  if (a < 1) out.push_back("a >= 1 (a is a natural number), got a = " + std::to_string(a));
  if (K < 1) out.push_back("K >= 1 (K is a natural number), got K = " + std::to_string(K));
  if (a >= K) {
    out.push_back("a < K, got a = " + std::to_string(a) + ", K = " + std::to_string(K));
  }
  if (!(epsilon > 0)) out.push_back("epsilon > 0, got epsilon = " + fmt(epsilon));
  if (a >= 1 && a < K && !(epsilon < epsilon_bound())) {
    out.push_back("epsilon < b^2/(2(a-b)) = " + fmt(epsilon_bound()) +
                  ", got epsilon = " + fmt(epsilon));
  }
  if (!(delta > 0 && delta < epsilon)) {
    out.push_back("0 < delta < epsilon, got delta = " + fmt(delta) +
                  ", epsilon = " + fmt(epsilon));
  }
  return out;
}

void Problem::validate() const {
  const auto v = violations();
  if (v.empty()) return;
  std::string msg = "invalid interval problem:";
  for (const auto& s : v) msg += "\n  " + s;
  throw ConstructionError(msg);
}

IntervalUnion::IntervalUnion(std::vector<Interval> intervals)
    : intervals_(std::move(intervals)) {
  std::sort(intervals_.begin(), intervals_.end(),
            [](const Interval& l, const Interval& r) { return l.lo < r.lo; });
  for (std::size_t i = 0; i < intervals_.size(); ++i) {
    if (!(intervals_[i].lo < intervals_[i].hi)) {
      throw ConstructionError("empty interval in union");
    }
    if (i && intervals_[i - 1].hi > intervals_[i].lo) {
      throw ConstructionError("overlapping intervals in union");
    }
  }
}

std::size_t IntervalUnion::locate(double x) const {
  auto it = std::upper_bound(intervals_.begin(), intervals_.end(), x,
                             [](double v, const Interval& iv) { return v < iv.lo; });
  if (it == intervals_.begin()) return size();
  --it;
  return it->contains(x) ? static_cast<std::size_t>(it - intervals_.begin()) : size();
}

bool IntervalUnion::contains(double x) const { return locate(x) != size(); }

int f_a(const Problem& p, double x1) {
  if (!(x1 > 0)) throw DomainError("f_a: x1 must be positive, got " + std::to_string(x1));
  const double q = std::ceil(static_cast<double>(p.a) / x1);
  return static_cast<int>(std::fmod(q, 2.0));
}

IntervalUnion stable_region(const Problem& p) {
  p.validate();
  std::vector<Interval> out;
  for (int k = p.K; k >= p.a; --k) {
    const double lo = static_cast<double>(p.a) / (k + 1) + p.epsilon;
    const double hi = static_cast<double>(p.a) / k - p.epsilon;
    out.push_back({lo, hi, k, (k + 1) % 2});
  }
  return IntervalUnion(std::move(out));
}

double distance_to_jump(const Problem& p, double x1) {
  double best = std::numeric_limits<double>::infinity();
  for (int k = p.a; k <= p.K + 1; ++k) {
    best = std::min(best, std::abs(x1 - static_cast<double>(p.a) / k));
  }
  return best;
}

std::vector<LabeledPoint> sample_training_set(const Problem& p, std::size_t r, Lift lift,
                                              Rng& rng, Allocation alloc) {
  const IntervalUnion region = stable_region(p);
  const std::size_t m = region.size();
  if (r == 0) throw ParameterError("training set size must be at least 1");
  if (alloc == Allocation::kOnePerInterval && r != m) {
    throw ParameterError("one sample per interval needs r = " + std::to_string(m) +
                         ", got r = " + std::to_string(r));
  }
  std::vector<LabeledPoint> out;
  out.reserve(r);
  for (std::size_t i = 0; i < m; ++i) {
    const Interval& iv = region[i];
    const std::size_t count = r / m + (i < r % m ? 1 : 0);
    for (std::size_t j = 0; j < count; ++j) {
      double x1;
      do {
        x1 = iv.lo + iv.length() * rng.uniform_open();
      } while (!iv.contains(x1));
      const int label = f_a(p, x1);
      const double x2 = lift == Lift::kDelta ? p.delta * label : 0.0;
      out.push_back({x1, x2, label});
    }
  }
  return out;
}

std::vector<Point> sample_stable_inputs(const Problem& p, std::size_t n, Rng& rng) {
  const IntervalUnion region = stable_region(p);
  double total = 0.0;
  for (const Interval& iv : region.intervals()) total += iv.length();
  std::vector<Point> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double x1;
    do {
      double u = total * rng.uniform();
      std::size_t k = 0;
      while (k + 1 < region.size() && u >= region[k].length()) u -= region[k++].length();
      x1 = region[k].lo + u;
    } while (!region.contains(x1));
    out.push_back({x1, rng.uniform()});
  }
  return out;
}

std::size_t DiagnosticSets::stable_count() const {
  return static_cast<std::size_t>(std::count(in_stable.begin(), in_stable.end(), true));
}

DiagnosticSets diagnostic_sets(const Problem& p, std::size_t grid_n) {
  if (grid_n < 2) throw ParameterError("diagnostic grid needs at least 2 points");
  const IntervalUnion region = stable_region(p);
  const double b = p.b();
  DiagnosticSets d;
  d.x1.resize(grid_n);
  d.c0.resize(grid_n);
  d.cdelta.resize(grid_n);
  d.in_stable.resize(grid_n);
  for (std::size_t i = 0; i < grid_n; ++i) {
    const double x1 = i + 1 == grid_n
                          ? 1.0
                          : b + (1.0 - b) * static_cast<double>(i) / static_cast<double>(grid_n - 1);
    d.x1[i] = x1;
    d.c0[i] = {x1, 0.0};
    d.cdelta[i] = {x1, p.delta * f_a(p, x1)};
    d.in_stable[i] = region.contains(x1);
  }
  return d;
}

Tensor to_tensor(const std::vector<Point>& points) {
  Tensor t({points.size(), 2});
  for (std::size_t i = 0; i < points.size(); ++i) {
    t[2 * i] = points[i].x1;
    t[2 * i + 1] = points[i].x2;
  }
  return t;
}

Dataset to_dataset(const std::vector<LabeledPoint>& points) {
  Dataset d{Tensor({points.size(), 2}), std::vector<double>(points.size())};
  for (std::size_t i = 0; i < points.size(); ++i) {
    d.inputs[2 * i] = points[i].x1;
    d.inputs[2 * i + 1] = points[i].x2;
    d.labels[i] = points[i].label;
  }
  return d;
}

double logit_scale(double eta, std::size_t r) {
  if (!(eta > 0) || r == 0) throw ParameterError("logit scale needs eta > 0 and r >= 1");
  const double t = eta / static_cast<double>(r);
  return -std::log(std::expm1(t)) * (1.0 + 1e-12);
}

Network make_interval_network(const Problem& p) {
  const std::size_t width = 4 * static_cast<std::size_t>(p.K);
  return Network({2}, {Dense(2, width), Relu{}, Dense(width, 1)});
}

Network build_stable_network(const Problem& p, double eta, std::size_t r) {
  p.validate();
  const double n_scale = logit_scale(eta, r);
  const std::size_t width = 4 * static_cast<std::size_t>(p.K);
  Tensor w1({width, 2}), b1({width}), w2({1, width}), b2({1}, {-n_scale});
  const double eps = p.epsilon;
  const double slope = 1.0 / eps;
  std::size_t unit = 0;
  for (int k = p.a; k <= p.K; ++k) {
    const double c = static_cast<double>(p.a) / (k + 1) + eps;
    const double d = static_cast<double>(p.a) / k - eps;
    // Bump in x1: 0 below c - eps, ramps to 1 on [c - eps, c], equals 1 on
    // [c, d], ramps back to 0 on [d, d + eps].
    const double offsets[4] = {1.0 - c / eps, -c / eps, -d / eps, -d / eps - 1.0};
    const double signs[4] = {1.0, -1.0, -1.0, 1.0};
    const double coef = k % 2 == 0 ? 1.0 : 0.0;  // f_a = (k + 1) mod 2 here
    for (int j = 0; j < 4; ++j, ++unit) {
      w1[2 * unit] = slope;
      w1[2 * unit + 1] = 0.0;
      b1[unit] = offsets[j];
      w2[unit] = 2.0 * n_scale * coef * signs[j];
    }
  }
  return Network({2}, {Dense(std::move(w1), std::move(b1)), Relu{},
                       Dense(std::move(w2), std::move(b2))});
}

}  // namespace fslab::case1
