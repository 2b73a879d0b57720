#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "rpde/errors.hpp"

// Time grids, one/two-parameter maps, the increment operators delta1/delta2,
// control functions, discrete p-variation norms and roughness diagnostics.

namespace rpde {

class TimeGrid {
 public:
  TimeGrid() = default;
  explicit TimeGrid(std::vector<double> times);

  static TimeGrid uniform(double horizon, int steps);

  const std::vector<double>& times() const { return times_; }
  double horizon() const { return times_.back(); }
  int size() const { return static_cast<int>(times_.size()); }
  int intervals() const { return size() - 1; }
  double t(int i) const { return times_[static_cast<std::size_t>(i)]; }
  double dt(int i) const { return t(i + 1) - t(i); }

  // Grid refined by inserting 2^level - 1 equispaced points per interval.
  TimeGrid refine_dyadic(int level) const;

  bool operator==(const TimeGrid& o) const { return times_ == o.times_; }

 private:
  std::vector<double> times_;
};

using IndexPair = std::pair<int, int>;

// Payload vector-space hooks. Two payloads are used throughout: scalars and
// node-value arrays.
inline double payload_sub(double a, double b) { return a - b; }
inline double payload_add(double a, double b) { return a + b; }
inline double payload_scale(double a, double c) { return a * c; }
inline double payload_zero(const double&) { return 0.0; }

inline std::vector<double> payload_sub(const std::vector<double>& a,
                                       const std::vector<double>& b) {
  std::vector<double> r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}
inline std::vector<double> payload_add(const std::vector<double>& a,
                                       const std::vector<double>& b) {
  std::vector<double> r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}
inline std::vector<double> payload_scale(const std::vector<double>& a,
                                         double c) {
  std::vector<double> r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] * c;
  return r;
}
inline std::vector<double> payload_zero(const std::vector<double>& a) {
  return std::vector<double>(a.size(), 0.0);
}

inline double abs_norm(const double& v) { return std::abs(v); }
inline double max_norm(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Two-index family g_{st} on grid pairs i <= j. Only i < j entries are
// materialized; the diagonal is implicitly zero.
template <class P>
class TwoParamField {
 public:
  using Norm = std::function<double(const P&)>;

  TwoParamField() = default;
  TwoParamField(TimeGrid grid, Norm norm)
      : grid_(std::move(grid)), norm_(std::move(norm)) {}

  const TimeGrid& grid() const { return grid_; }
  const Norm& norm_fn() const { return norm_; }
  const std::map<IndexPair, P>& entries() const { return vals_; }

  void set(int i, int j, P v) {
    if (i < j) vals_[{i, j}] = std::move(v);
  }
  bool has(int i, int j) const {
    return i == j || vals_.count({i, j}) > 0;
  }
  // value at a pair; diagonal pairs return a zero payload shaped like some
  // stored entry.
  P at(int i, int j) const {
    if (i == j) {
      if (vals_.empty()) return P{};
      return payload_zero(vals_.begin()->second);
    }
    auto it = vals_.find({i, j});
    if (it == vals_.end())
      throw InsufficientDataError("TwoParamField: missing pair (" +
                                  std::to_string(i) + "," + std::to_string(j) +
                                  ")");
    return it->second;
  }
  double norm_at(int i, int j) const {
    if (i == j) return 0.0;
    return norm_(at(i, j));
  }

 private:
  TimeGrid grid_;
  std::map<IndexPair, P> vals_;
  Norm norm_;
};

using ScalarTwoParam = TwoParamField<double>;
using FieldTwoParam = TwoParamField<std::vector<double>>;

// delta1: path -> two-parameter increments on all grid pairs.
template <class P>
TwoParamField<P> delta1(const TimeGrid& grid, const std::vector<P>& path,
                        typename TwoParamField<P>::Norm norm) {
  if (static_cast<int>(path.size()) != grid.size())
    throw ValidationError("delta1: path length does not match grid");
  TwoParamField<P> g(grid, std::move(norm));
  for (int i = 0; i < grid.size(); ++i)
    for (int j = i + 1; j < grid.size(); ++j)
      g.set(i, j, payload_sub(path[static_cast<std::size_t>(j)],
                              path[static_cast<std::size_t>(i)]));
  return g;
}

// Restricted variant for heavy payloads: increments only on the given pairs.
template <class P>
TwoParamField<P> delta1_on(const TimeGrid& grid, const std::vector<P>& path,
                           const std::vector<IndexPair>& pairs,
                           typename TwoParamField<P>::Norm norm) {
  if (static_cast<int>(path.size()) != grid.size())
    throw ValidationError("delta1: path length does not match grid");
  TwoParamField<P> g(grid, std::move(norm));
  for (auto [i, j] : pairs)
    g.set(i, j, payload_sub(path[static_cast<std::size_t>(j)],
                            path[static_cast<std::size_t>(i)]));
  return g;
}

// delta2 at one triple: g_{st} - g_{s theta} - g_{theta t}.
template <class P>
P delta2_at(const TwoParamField<P>& g, int i, int k, int j) {
  return payload_sub(payload_sub(g.at(i, j), g.at(i, k)), g.at(k, j));
}

// delta2 over all triples with materialized pairs.
template <class P>
std::map<std::tuple<int, int, int>, P> delta2(const TwoParamField<P>& g) {
  std::map<std::tuple<int, int, int>, P> out;
  const int n = g.grid().size();
  for (int i = 0; i < n; ++i)
    for (int k = i; k < n; ++k)
      for (int j = k; j < n; ++j)
        if (g.has(i, j) && g.has(i, k) && g.has(k, j))
          out[{i, k, j}] = delta2_at(g, i, k, j);
  return out;
}

// Control function omega(s,t) evaluated on grid pairs (by index).
struct ControlFn {
  TimeGrid grid;
  std::function<double(int, int)> eval;

  double operator()(int i, int j) const { return eval(i, j); }

  // omega(s,t) = c * (t - s)^kappa
  static ControlFn power_gap(const TimeGrid& g, double c = 1.0,
                             double kappa = 1.0);
};

struct ControlCheckReport {
  bool is_control = true;
  std::tuple<int, int, int> worst_triple{0, 0, 0};
  double defect = 0.0;  // max over triples of omega(s,m)+omega(m,t)-omega(s,t)
};

ControlCheckReport control_check(const ControlFn& omega, const TimeGrid& grid,
                                 double tol);

// All dyadic-gap index pairs of a window: j - i = 2^k.
std::vector<IndexPair> dyadic_pairs(int lo, int hi);

// Exact discrete q-variation norm (q = 1/alpha) over the window, by dynamic
// programming over grid partitions. Coincides with the infimum-of-controls
// characterization restricted to the grid.
template <class P>
double pvar_norm(const TwoParamField<P>& g, double alpha, IndexPair window) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw ValidationError("pvar_norm: alpha must lie in (0,1]");
  auto [lo, hi] = window;
  if (lo < 0 || hi >= g.grid().size() || lo > hi)
    throw ValidationError("pvar_norm: window outside grid");
  const double q = 1.0 / alpha;
  // partitions are restricted to materialized pairs; the DP skips the rest
  std::vector<double> best(static_cast<std::size_t>(hi - lo + 1),
                           -std::numeric_limits<double>::infinity());
  best[0] = 0.0;
  for (int j = lo + 1; j <= hi; ++j) {
    double b = -std::numeric_limits<double>::infinity();
    for (int i = lo; i < j; ++i) {
      if (!g.has(i, j)) continue;
      const double prev = best[static_cast<std::size_t>(i - lo)];
      if (prev == -std::numeric_limits<double>::infinity()) continue;
      b = std::max(b, prev + std::pow(g.norm_at(i, j), q));
    }
    best[static_cast<std::size_t>(j - lo)] = b;
  }
  if (best.back() == -std::numeric_limits<double>::infinity())
    throw InsufficientDataError("pvar_norm: window is not chainable");
  return std::pow(best.back(), alpha);
}

// The minimal control dominating ||g||^{1/alpha} on the grid, as a table.
// Superadditive by construction; pvar_norm(g, alpha, w) == fitted(w)^alpha.
template <class P>
ControlFn fitted_control(const TwoParamField<P>& g, double alpha) {
  const int n = g.grid().size();
  const double q = 1.0 / alpha;
  auto table = std::make_shared<std::vector<double>>(
      static_cast<std::size_t>(n) * n, 0.0);
  for (int lo = 0; lo < n; ++lo) {
    std::vector<double> best(static_cast<std::size_t>(n - lo),
                             -std::numeric_limits<double>::infinity());
    best[0] = 0.0;
    for (int j = lo + 1; j < n; ++j) {
      double b = -std::numeric_limits<double>::infinity();
      for (int i = lo; i < j; ++i) {
        if (!g.has(i, j)) continue;
        const double prev = best[static_cast<std::size_t>(i - lo)];
        if (prev == -std::numeric_limits<double>::infinity()) continue;
        b = std::max(b, prev + std::pow(g.norm_at(i, j), q));
      }
      best[static_cast<std::size_t>(j - lo)] = b;
      (*table)[static_cast<std::size_t>(lo) * n + j] =
          (b == -std::numeric_limits<double>::infinity()) ? 0.0 : b;
    }
  }
  return ControlFn{g.grid(), [table, n](int i, int j) {
                     return (*table)[static_cast<std::size_t>(i) * n + j];
                   }};
}

struct HolderFit {
  double exponent = 0.0;
  double r2 = 0.0;
};

// Least-squares slope of log ||g_{st}|| against log(t-s) over dyadic pairs.
template <class P>
HolderFit holder_fit(const TwoParamField<P>& g, IndexPair window) {
  auto [lo, hi] = window;
  std::vector<double> xs, ys;
  std::map<long long, bool> gap_sizes;
  for (auto [i, j] : dyadic_pairs(lo, hi)) {
    if (!g.has(i, j)) continue;
    const double nrm = g.norm_at(i, j);
    const double gap = g.grid().t(j) - g.grid().t(i);
    if (nrm <= 0.0 || gap <= 0.0) continue;
    xs.push_back(std::log(gap));
    ys.push_back(std::log(nrm));
    gap_sizes[j - i] = true;
  }
  if (gap_sizes.size() < 4)
    throw InsufficientDataError(
        "holder_fit: fewer than 4 distinct gap sizes with nonzero payloads");
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sx += xs[k];
    sy += ys[k];
    sxx += xs[k] * xs[k];
    sxy += xs[k] * ys[k];
    syy += ys[k] * ys[k];
  }
  const double denom = n * sxx - sx * sx;
  HolderFit fit;
  fit.exponent = (n * sxy - sx * sy) / denom;
  const double ss_tot = syy - sy * sy / n;
  const double intercept = (sy - fit.exponent * sx) / n;
  double ss_res = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double e = ys[k] - (intercept + fit.exponent * xs[k]);
    ss_res += e * e;
  }
  fit.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

// Ratio sequence |Z_{st}| / omega_Z(s,t)^{2 alpha} for s -> t over dyadic
// left neighbors of t. omega_Z is the path's own minimal control at its
// fitted variation exponent. Diagnostic only.
std::vector<double> roughness_ratio(const TimeGrid& grid,
                                    const std::vector<double>& path,
                                    double alpha, int t_index);

}  // namespace rpde
