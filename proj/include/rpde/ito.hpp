#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rpde/solver.hpp"

// Numerical verification of the chain rules: composition F(u), the product
// formula, and L^p-norm evolution under shifted drivers. All checks are weak
// formulations tested against the fixed probe suite (the constant probe is
// the theorem-level one).

namespace rpde {

struct AdmissibleF {
  std::function<double(double)> f;    // F
  std::function<double(double)> df;   // F'
  std::function<double(double)> ddf;  // F''
  std::string name;

  // F(0) = 0, F'(0) = 0, F'' bounded on [-range, range], checked numerically
  bool admissible_on(double range) const;
};

// Admissible truncation of |z|^p: exactly |z|^p for |z| <= R, second
// derivative capped by p(p-1)(2R)^{p-2}, constant slope beyond 2R.
AdmissibleF truncate_power(double p, double R);

struct WeakFormReport {
  std::vector<ScalarTwoParam> residuals;  // one table per probe
  std::vector<HolderFit> fits;            // per probe
  double slope = 0.0;                     // worst finite fitted exponent
  double max_residual = 0.0;
  double phi1_max_residual = 0.0;         // constant-probe row
};

// Chain-rule defect for F(u): the weak form of d F(u) = F'(u)(Au+f) dt
// + dB F(u) on dyadic pairs. Requires a transport driver (no zero-order
// part); F must be admissible on the solution range unless the solution is
// compactly supported inside the box.
WeakFormReport chain_defect(const ControlledSolution& sol, const Scenario& sc,
                            const DifferentialRoughDriver& d,
                            const AdmissibleF& F);

// Product-formula defect for two solutions driven by the same driver:
// d(uv) = [u g + f v] dt + dB^{(2)}(uv) with B^{(2)} = shift(B, 2).
WeakFormReport product_defect(const ControlledSolution& u_sol,
                              const ControlledSolution& v_sol,
                              const Scenario& sc_u, const Scenario& sc_v,
                              const DifferentialRoughDriver& d);

struct LpReport {
  std::vector<double> lp_pow;  // |u_t|_{L^p}^p
  WeakFormReport identity;     // weak form with the shifted driver
  bool monotone = false;       // f = 0 transport: non-increasing L^p norm
  double max_increase = 0.0;   // worst per-step increase observed
};

// L^p evolution d(|u|^p) = p u |u|^{p-2} (Au+f) dt + dB^{(p)} (|u|^p).
LpReport lp_evolution(const ControlledSolution& sol, const Scenario& sc,
                      const DifferentialRoughDriver& d, double p);

}  // namespace rpde
