#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "rpde/driver.hpp"
#include "rpde/operators.hpp"
#include "rpde/sewing.hpp"

// Davie time stepping for du = (Au + f) dt + dB u: theta-implicit on the
// elliptic part, the two driver levels applied explicitly at u_s. Controlled
// decompositions (R^u, u^natural), remainder scaling fits, energy monitoring,
// Dirichlet extension, maximum-principle checks, Moser sup-norm estimation
// and Wong-Zakai stability sweeps.

namespace rpde {

struct SchemeParams {
  double theta = 1.0;              // implicitness on A (1 = backward Euler)
  bool allow_nongeometric = false;
  double cfl_limit = 0.5;          // probe amplification guard per step
  double mp_tol_factor = 10.0;     // tol_mp = factor * (dt + h^2)
  double cg_tol = 1e-13;
};

// How the scenario's driver is built.
enum class LiftKind { pl_rough_path, canonical, ito_bm };

struct DriverSpec {
  LiftKind lift = LiftKind::pl_rough_path;
  PathRecipe path;
  // channel operators sigma^mu . grad + rho^mu on the scenario grid
  std::vector<FirstOrderOp> channels;
  int refine_level = 0;   // dyadic path refinement before lifting
  int quad_refine = 16;   // canonical lift quadrature per driver interval
  double alpha = 0.45;
};

struct DirichletEmbedding {
  SpatialGrid domain;      // original dirichlet grid
  int offset0 = 0;         // index offset of domain node (0,0) in the box
  int offset1 = 0;
};

struct Scenario {
  TimeGrid time;
  SpatialGrid space;
  std::vector<std::vector<ScalarField>> a;  // elliptic samples (>=1)
  double lambda = 1.0;
  std::vector<ScalarField> f;               // 0, 1 or time-node many fields
  ScalarField u0;
  DriverSpec driver_spec;
  SchemeParams scheme;
  double r = 2.0, q = 2.0;                  // forcing integrability exponents
  double p = 2.0;                           // L^p runs
  std::optional<DirichletEmbedding> embedding;

  const ScalarField& forcing(int time_node) const;
  bool has_forcing() const { return !f.empty(); }
};

// Materialize the scenario's driver; fine path grid = time grid refined by
// the spec'd amounts. Refuses non-geometric lifts unless allowed.
DifferentialRoughDriver build_driver(const Scenario& sc);

struct EnergyReport {
  std::vector<double> energy;        // E_t = |u|^2 + int lambda |grad u|^2
  std::vector<double> l2_sq;         // |u_t|^2
  double bound = 0.0;                // frozen-constant right side
  bool satisfied = false;            // E_T <= bound
  ScalarTwoParam identity_residual;  // phi = 1 weak identity on dyadic pairs
  GronwallReport monitor;            // rough Gronwall run on E
  double omega_total = 0.0;
  double window_L = 0.0;
};

struct ControlledSolution {
  TimeGrid time;
  std::vector<ScalarField> u;
  FieldTwoParam Ru;        // delta u - B^1 u_s on dyadic pairs
  FieldTwoParam u_sharp;   // delta u - int(Au+f) - (B^1+B^2) u_s
  HolderFit fit_Ru;
  HolderFit fit_sharp;
  int window_gap = 1;      // dyadic gap of the omega-small fit window
  double window_coverage = 0.0;  // fraction of dyadic pairs inside the window
  EnergyReport energy;
};

ScalarField step(const ScalarField& u_s, int interval, const Scenario& sc,
                 const DifferentialRoughDriver& d);

ControlledSolution solve(const Scenario& sc, const DifferentialRoughDriver& d);
ControlledSolution solve(const Scenario& sc);  // builds the driver

struct RemainderReport {
  double slope_Ru = 0.0;
  double slope_sharp = 0.0;
  double c_measured = 0.0;  // best constant against the remainder estimate
  double window_L = 0.0;
};

RemainderReport remainder_report(const ControlledSolution& sol,
                                 const DifferentialRoughDriver& d,
                                 const Scenario& sc, double alpha);

EnergyReport energy_report(const std::vector<ScalarField>& u,
                           const Scenario& sc,
                           const DifferentialRoughDriver& d);

// Extend a dirichlet scenario to an enclosing periodic box: elliptic
// coefficients continued by the identity, driver channels and data extended
// by zero. Channels must vanish on a 2h collar of the boundary.
Scenario dirichlet_extend(const Scenario& sc, int margin_nodes = 0);

// Restrict a box field to the embedded dirichlet domain.
ScalarField restrict_to_domain(const ScalarField& box_field,
                               const DirichletEmbedding& emb);

struct MaxPrincipleReport {
  double lower = 0.0, upper = 0.0;  // admissible band from u0
  double tol = 0.0;
  double worst_excess = 0.0;
  long long violations = 0;
  double outside_max = 0.0;  // largest |u| outside the domain window
};

MaxPrincipleReport max_principle_check(const ControlledSolution& sol,
                                       const Scenario& sc);

// Closed-form right side of the recursive moment estimate:
// Phi_n <= gamma^{((1+eps)^n - 1)/eps} tau^{((1+eps)^n - 1)/eps^2 - n/eps}
//          Phi_0^{(1+eps)^n}.
double moser_recursion_bound(double gamma, double tau, double eps, double phi0,
                             int n);

struct MoserReport {
  std::vector<double> phi;       // moments Phi_n
  std::vector<double> kappa;     // moment exponents kappa_n = 2(1+eps)^n
  std::vector<double> sup_seq;   // Phi_n^{(1+eps)^{-n}}
  double sup_estimate = 0.0;
  double gamma_measured = 0.0;
  double tau_used = 0.0;
  std::vector<double> formula_bound;
};

MoserReport moser_bound(const ControlledSolution& sol, const Scenario& sc,
                        double epsilon);

struct WongZakaiRow {
  int level = 0;
  double rho_to_prev = 0.0;       // driver distance to the previous level
  double sup_diff_to_prev = 0.0;  // max over shared nodes of L2 differences
};

std::vector<WongZakaiRow> wong_zakai_sweep(const Scenario& sc,
                                           const std::vector<int>& levels);

// Weighted dissipation pairing sum_axes h^d sum_half a (D+ u)(D+ v) wbar
// plus the central cross term; w = nullptr means weight 1. For weight 1 this
// equals -<Au, v> exactly.
double dissipation_pairing(const EllipticOp& A, const ScalarField& u,
                           const ScalarField& v, const ScalarField* w,
                           int time_sample);

}  // namespace rpde
