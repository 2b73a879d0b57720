#include "rpde/sewing.hpp"

#include <algorithm>
#include <cmath>

namespace rpde {

double gronwall_bound(const GronwallProblem& p) {
  const int n = p.grid.size();
  double sup_phi = 0.0;
  for (int t = 1; t < n; ++t) sup_phi = std::max(sup_phi, std::abs(p.phi(0, t)));
  const double w = p.omega(0, n - 1);
  return std::exp(w / p.tau_effective()) * (p.G.front() + sup_phi);
}

GronwallReport gronwall_verify(const GronwallProblem& p, double tol) {
  GronwallReport rep;
  const int n = p.grid.size();
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double w = p.omega(i, j);
      if (w > p.L) continue;
      double sup = 0.0;
      for (int r = i; r <= j; ++r)
        sup = std::max(sup, p.G[static_cast<std::size_t>(r)]);
      const double rhs = sup * std::pow(w, p.kappa) + p.phi(i, j);
      const double lhs = p.G[static_cast<std::size_t>(j)] -
                         p.G[static_cast<std::size_t>(i)];
      const double excess = lhs - rhs;
      if (excess > rep.worst_violation) {
        rep.worst_violation = excess;
        rep.worst_pair = {i, j};
      }
    }
  }
  rep.premise_holds = rep.worst_violation <= tol;
  rep.sup_G = *std::max_element(p.G.begin(), p.G.end());
  rep.bound = gronwall_bound(p);
  rep.conclusion_holds = rep.sup_G <= rep.bound + tol;
  return rep;
}

}  // namespace rpde
