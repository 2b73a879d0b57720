#include "rpde/temporal.hpp"

#include <algorithm>
#include <cmath>

namespace rpde {

TimeGrid::TimeGrid(std::vector<double> times) : times_(std::move(times)) {
  if (times_.size() < 2)
    throw ValidationError("TimeGrid: need at least 2 points");
  if (times_.front() != 0.0)
    throw ValidationError("TimeGrid: times[0] must be 0");
  for (std::size_t i = 0; i + 1 < times_.size(); ++i)
    if (!(times_[i] < times_[i + 1]))
      throw ValidationError("TimeGrid: times must be strictly increasing");
}

TimeGrid TimeGrid::uniform(double horizon, int steps) {
  if (steps < 1 || horizon <= 0)
    throw ValidationError("TimeGrid::uniform: bad horizon/steps");
  std::vector<double> ts(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i)
    ts[static_cast<std::size_t>(i)] = horizon * i / steps;
  ts.back() = horizon;
  return TimeGrid(std::move(ts));
}

TimeGrid TimeGrid::refine_dyadic(int level) const {
  if (level <= 0) return *this;
  const int sub = 1 << level;
  std::vector<double> ts;
  ts.reserve(static_cast<std::size_t>(intervals()) * sub + 1);
  for (int i = 0; i < intervals(); ++i)
    for (int k = 0; k < sub; ++k)
      ts.push_back(t(i) + (t(i + 1) - t(i)) * k / sub);
  ts.push_back(times_.back());
  return TimeGrid(std::move(ts));
}

ControlFn ControlFn::power_gap(const TimeGrid& g, double c, double kappa) {
  return ControlFn{g, [g, c, kappa](int i, int j) {
                     return c * std::pow(g.t(j) - g.t(i), kappa);
                   }};
}

ControlCheckReport control_check(const ControlFn& omega, const TimeGrid& grid,
                                 double tol) {
  ControlCheckReport rep;
  const int n = grid.size();
  for (int i = 0; i < n; ++i) {
    for (int k = i; k < n; ++k) {
      for (int j = k; j < n; ++j) {
        const double defect = omega(i, k) + omega(k, j) - omega(i, j);
        if (defect > rep.defect) {
          rep.defect = defect;
          rep.worst_triple = {i, k, j};
        }
      }
    }
  }
  rep.is_control = rep.defect <= tol;
  return rep;
}

std::vector<IndexPair> dyadic_pairs(int lo, int hi) {
  std::vector<IndexPair> out;
  for (int gap = 1; gap <= hi - lo; gap *= 2)
    for (int i = lo; i + gap <= hi; ++i) out.push_back({i, i + gap});
  return out;
}

std::vector<double> roughness_ratio(const TimeGrid& grid,
                                    const std::vector<double>& path,
                                    double alpha, int t_index) {
  if (t_index <= 0 || t_index >= grid.size())
    throw InsufficientDataError(
        "roughness_ratio: t has no left neighbors on the grid");
  auto incs = delta1<double>(grid, path, abs_norm);

  // Variation exponent of the path itself; linear paths fit 1, Brownian 1/2.
  double alpha_fit;
  try {
    alpha_fit = std::clamp(
        holder_fit(incs, {0, grid.size() - 1}).exponent, 0.05, 1.0);
  } catch (const InsufficientDataError&) {
    alpha_fit = 1.0;  // degenerate data (constant path)
  }
  const ControlFn omega = fitted_control(incs, alpha_fit);

  std::vector<double> ratios;
  for (int gap = 1; t_index - gap >= 0; gap *= 2) {
    const int s = t_index - gap;
    const double z = std::abs(path[static_cast<std::size_t>(t_index)] -
                              path[static_cast<std::size_t>(s)]);
    const double w = std::pow(omega(s, t_index), 2.0 * alpha);
    if (w > 0)
      ratios.push_back(z / w);
    else
      ratios.push_back(z > 0 ? std::numeric_limits<double>::infinity() : 0.0);
  }
  std::reverse(ratios.begin(), ratios.end());  // shrinking gap order
  return ratios;
}

}  // namespace rpde
