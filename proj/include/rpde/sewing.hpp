#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "rpde/temporal.hpp"

// Executable Sewing Lemma: a coherent two-parameter germ is integrated into a
// path plus a quantified remainder via dyadic Riemann sums. Also houses the
// Rough Gronwall bound as a numeric calculator/verifier.

namespace rpde {

// A germ is an evaluable two-parameter map H(s,t); dyadic refinement inserts
// midpoints in time, so H must be defined off the ambient grid as well.
template <class P>
struct Germ {
  TimeGrid grid;
  std::function<P(double, double)> eval;
  double declared_a = 2.0;              // coherence exponent, > 1
  ControlFn control;                    // omega used in the coherence bound
  std::function<double(const P&)> norm;
};

template <class P>
struct SewResult {
  std::vector<P> integral;      // I_t at ambient grid nodes, I_0 = 0
  TwoParamField<P> remainder;   // I^natural_{st} = delta I_{st} - H_{st}
  bool converged = false;
  double last_delta = 0.0;      // norm of the last successive-level update
  int levels_used = 0;
};

struct CoherenceFit {
  double c_fit = 0.0;  // best constant at the declared exponent
  double a_fit = 0.0;  // regression exponent of ||delta H|| against omega
};

// Fits ||delta H_{s theta t}|| <= C omega(s,t)^a over ambient grid triples
// (midpoint theta). Returns the best constant at the declared a and the
// fitted exponent; an additive germ reports c_fit = 0 and a_fit = +inf.
template <class P>
CoherenceFit coherence_defect(const Germ<P>& g) {
  if (g.grid.size() < 3)
    throw InsufficientDataError("coherence_defect: need >= 3 grid points");
  CoherenceFit fit;
  std::vector<double> lx, ly;
  const int n = g.grid.size();
  for (int i = 0; i < n; ++i) {
    for (int k = i + 1; k < n; ++k) {
      for (int j = k + 1; j < n; ++j) {
        const double s = g.grid.t(i), m = g.grid.t(k), t = g.grid.t(j);
        P d = payload_sub(payload_sub(g.eval(s, t), g.eval(s, m)),
                          g.eval(m, t));
        const double nd = g.norm(d);
        const double w = g.control(i, j);
        if (w > 0)
          fit.c_fit = std::max(fit.c_fit, nd / std::pow(w, g.declared_a));
        if (nd > 0 && w > 0) {
          lx.push_back(std::log(w));
          ly.push_back(std::log(nd));
        }
      }
    }
  }
  if (lx.size() < 3) {
    fit.a_fit = std::numeric_limits<double>::infinity();
    return fit;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    sx += lx[k];
    sy += ly[k];
    sxx += lx[k] * lx[k];
    sxy += lx[k] * ly[k];
  }
  const double nn = static_cast<double>(lx.size());
  fit.a_fit = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
  return fit;
}

// Riemann-sum integral of the germ over [s,t] at dyadic level k
// (2^k equal subintervals).
template <class P>
P riemann_level(const Germ<P>& g, double s, double t, int level) {
  const int m = 1 << level;
  P acc = payload_scale(g.eval(s, t), 0.0);
  for (int k = 0; k < m; ++k) {
    const double a = s + (t - s) * k / m;
    const double b = (k + 1 == m) ? t : s + (t - s) * (k + 1) / m;
    acc = payload_add(acc, g.eval(a, b));
  }
  return acc;
}

// Sewing: per ambient interval, run the dyadic ladder and complete the
// geometric tail from the measured level-to-level contraction. Accumulated
// interval integrals give I at every grid node; the remainder table holds
// delta I - H on all dyadic pairs.
template <class P>
SewResult<P> sew(const Germ<P>& g, int refinement_levels,
                 double rel_tol = 1e-10) {
  const int n = g.grid.size();
  SewResult<P> out;
  out.remainder = TwoParamField<P>(g.grid, g.norm);

  std::vector<P> interval(static_cast<std::size_t>(n - 1),
                          payload_scale(g.eval(0.0, g.grid.horizon()), 0.0));
  out.converged = true;
  double worst_a = std::numeric_limits<double>::infinity();

  for (int i = 0; i < n - 1; ++i) {
    const double s = g.grid.t(i), t = g.grid.t(i + 1);
    P prev = g.eval(s, t);
    P cur = prev;
    double d_prev = 0.0, d_cur = 0.0, ratio = 0.0;
    bool cauchy = false;
    int lev = 0;
    for (lev = 1; lev <= refinement_levels; ++lev) {
      cur = riemann_level(g, s, t, lev);
      d_prev = d_cur;
      d_cur = g.norm(payload_sub(cur, prev));
      const double scale = 1.0 + g.norm(cur);
      if (d_prev > 0 && d_cur > 0) ratio = d_cur / d_prev;
      if (d_cur <= rel_tol * scale) {
        cauchy = true;
        break;
      }
      prev = cur;
    }
    // Geometric tail completion: if successive updates contract with a
    // stable ratio r < 1, the remaining levels sum to ~ last_update * r/(1-r)
    // in the direction of the last update.
    if (!cauchy && d_prev > 0 && ratio > 0 && ratio < 0.95) {
      P last_update = payload_sub(cur, prev);
      cur = payload_add(cur, payload_scale(last_update, ratio / (1 - ratio)));
      cauchy = true;
      // implied coherence exponent from the contraction: r = 2^{1-a}
      worst_a = std::min(worst_a, 1.0 - std::log2(ratio));
    } else if (!cauchy) {
      out.converged = false;
    }
    out.levels_used = std::max(out.levels_used, lev);
    out.last_delta = std::max(out.last_delta, d_cur);
    interval[static_cast<std::size_t>(i)] = cur;
  }

  if (!out.converged) {
    const CoherenceFit fit = coherence_defect(g);
    throw GuardError(
        "sew: Riemann sums did not converge; measured coherence exponent " +
        std::to_string(fit.a_fit) + " (need > 1)");
  }

  out.integral.resize(static_cast<std::size_t>(n),
                      payload_scale(interval[0], 0.0));
  for (int i = 1; i < n; ++i)
    out.integral[static_cast<std::size_t>(i)] =
        payload_add(out.integral[static_cast<std::size_t>(i - 1)],
                    interval[static_cast<std::size_t>(i - 1)]);

  for (auto [i, j] : dyadic_pairs(0, n - 1)) {
    P di = payload_sub(out.integral[static_cast<std::size_t>(j)],
                       out.integral[static_cast<std::size_t>(i)]);
    out.remainder.set(i, j, payload_sub(di, g.eval(g.grid.t(i), g.grid.t(j))));
  }
  (void)worst_a;
  return out;
}

// Rough Gronwall. The increment premise
//   delta G_{st} <= (sup_{[s,t]} G) omega(s,t)^kappa + phi(s,t)
// on pairs with omega(s,t) <= L implies
//   sup G <= exp(omega(0,T)/tau) [G_0 + sup |phi(0,t)|].
// tau is not pinned down by the statement; the default follows the
// interval-splitting proof: tau = L^kappa / (2 ln 2).
struct GronwallProblem {
  TimeGrid grid;
  std::vector<double> G;
  ControlFn omega;
  double kappa = 1.0;
  double L = 1.0;
  std::function<double(int, int)> phi;  // superadditive, checked separately
  double tau = 0.0;                     // 0 -> default formula

  double tau_effective() const {
    return tau > 0 ? tau : std::pow(L, kappa) / (2.0 * std::log(2.0));
  }
};

double gronwall_bound(const GronwallProblem& p);

struct GronwallReport {
  bool premise_holds = true;
  bool conclusion_holds = true;
  IndexPair worst_pair{0, 0};
  double worst_violation = 0.0;  // premise excess at the worst pair
  double sup_G = 0.0;
  double bound = 0.0;
};

GronwallReport gronwall_verify(const GronwallProblem& p, double tol);

}  // namespace rpde
