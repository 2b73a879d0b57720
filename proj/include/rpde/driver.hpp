#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "rpde/operators.hpp"
#include "rpde/paths.hpp"
#include "rpde/temporal.hpp"

// Differential rough drivers: a two-level family (B^1_{st}, B^2_{st}) of
// first/second-order operators stored through coefficient fields on adjacent
// grid intervals and reconstructed on arbitrary pairs by Chen composition.
//
// Storage per adjacent interval:
//   x[axis], x0      level-1 coefficients (first order, zero order)
//   l[axis], l0      level-2 first/zero-order corrections
//   kxx (optional)   additive second-order defect; zero for geometric
//                    drivers, carries the bracket of non-geometric lifts
// Level 2 on a pair is
//   B^2 = 1/2 X (x) X d_ij + (L + X0 X) d_i + L0 + 1/2 X0^2 + K d_ij.

namespace rpde {

// Time-sampled first-order operator coefficients (the path t -> B_t).
struct CoefficientPath {
  TimeGrid grid;  // fine sampling grid
  SpatialGrid spatial;
  std::vector<std::vector<ScalarField>> sigma;  // [time][axis]
  std::vector<ScalarField> c;                   // [time] zero-order

  int samples() const { return grid.size(); }
};

// Reconstructed coefficient bundle for one pair.
struct DriverLevels {
  std::vector<ScalarField> x;
  ScalarField x0;
  std::vector<ScalarField> l;
  ScalarField l0;
  std::vector<ScalarField> kxx;  // packed symmetric; empty means zero
};

class DifferentialRoughDriver {
 public:
  DifferentialRoughDriver() = default;

  const TimeGrid& grid() const { return grid_; }
  const SpatialGrid& spatial() const { return spatial_; }
  double alpha() const { return alpha_; }
  bool geometric() const { return geometric_flag_; }
  bool is_zero_order_free() const;  // X0 == 0 on every interval (transport)

  // adjacent-interval storage access (k = interval index)
  const std::vector<ScalarField>& x_adj(int k) const {
    return x_[static_cast<std::size_t>(k)];
  }
  const ScalarField& x0_adj(int k) const {
    return x0_[static_cast<std::size_t>(k)];
  }
  const std::vector<ScalarField>& l_adj(int k) const {
    return l_[static_cast<std::size_t>(k)];
  }
  const ScalarField& l0_adj(int k) const {
    return l0_[static_cast<std::size_t>(k)];
  }
  bool has_kxx() const { return !kxx_.empty(); }

  // Chen reconstruction on an arbitrary grid pair (cached).
  DriverLevels levels(IndexPair pair) const;

  FirstOrderOp level1_op(IndexPair pair) const;
  SecondOrderOp level2_op(IndexPair pair) const;

  // Levels recomputed from the construction source, bypassing the stored
  // adjacent fields; used by the defect probes. Falls back to the cached
  // reconstruction when no source was retained.
  DriverLevels direct_levels(IndexPair pair) const;
  bool has_source() const { return source_ != nullptr; }

  // testing hook: additively perturb the stored l[component] on interval k
  void perturb_l(int k, int component, double c);

  struct Builder;

 private:
  friend struct Builder;
  TimeGrid grid_;
  SpatialGrid spatial_;
  double alpha_ = 0.5;
  bool geometric_flag_ = true;
  std::vector<std::vector<ScalarField>> x_;
  std::vector<ScalarField> x0_;
  std::vector<std::vector<ScalarField>> l_;
  std::vector<ScalarField> l0_;
  std::vector<std::vector<ScalarField>> kxx_;
  std::shared_ptr<const CoefficientPath> source_;
  double source_x0_scale_ = 1.0;  // shift(p) rescales the zero-order source

  // lock-protected per-pair reconstruction cache; reads are safe from
  // concurrent solver workers
  struct Cache {
    std::mutex mutex;
    std::map<IndexPair, DriverLevels> map;
  };
  std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

// Canonical lift of a smooth operator path: X_{st} = X_t - X_s and
// L^i_{st} = int_s^t dX^mu_r d_mu X^i_{sr}, midpoint quadrature on the fine
// mesh (the geometric limit of piecewise-linear data). The driver grid keeps
// every quad_refine-th sample of the path grid.
DifferentialRoughDriver canonical_lift(const CoefficientPath& path,
                                       int quad_refine, double alpha = 0.5);

// Driver built from an m-channel rough path and coefficient fields:
// B^1 = Z^{1,mu} (sigma^mu . grad + rho^mu); the level-2 contraction pairs
// Z^{2,mu nu} with the composition applying channel mu first, which is the
// order the operator Chen relation requires.
DifferentialRoughDriver from_rough_path(const ScalarRoughPath& z,
                                        const std::vector<FirstOrderOp>& chans,
                                        double alpha = 0.5);

struct ChenDefect {
  double op_defect = 0.0;     // operator-level defect on probe fields
  double coeff_defect = 0.0;  // node-wise defect of the L-coefficients
};

ChenDefect chen_defect(const DifferentialRoughDriver& d);

struct BracketFamily {
  // first-order part per adjacent interval
  std::vector<FirstOrderOp> adjacent;
  double order_defect = 0.0;  // max node-wise second-order coefficient
};

BracketFamily bracket(const DifferentialRoughDriver& d);
// full symbolic bracket B^2 - 1/2 B^1 o B^1 on one pair
SecondOrderOp bracket_op(const DifferentialRoughDriver& d, IndexPair pair);

// Shifted driver B^{(p)}: level 1 gains p X0, level 2 becomes
// 1/2 XX d_ij + (L + p X0 X) d_i + p L0 + p^2/2 X0^2.
DifferentialRoughDriver shift(const DifferentialRoughDriver& d, double p);

// Field on the product grid (pairs of base-grid nodes), row-major.
struct ProductField {
  SpatialGrid base;
  std::vector<double> values;  // size nodes^2, index a * nodes + b

  static ProductField outer(const ScalarField& u, const ScalarField& v);
  double l2_norm() const;
  ProductField& operator+=(const ProductField& o);
  ProductField& operator-=(const ProductField& o);
  ProductField& operator*=(double s);
};

// Tensorized driver on the product grid:
//   Gamma^1 = B^1 (x) id + id (x) B^1,
//   Gamma^2 = B^2 (x) id + B^1 (x) B^1 + id (x) B^2.
// Guard: nodes^2 <= 10^6.
struct TensorizedDriver {
  const DifferentialRoughDriver* driver;
  ProductField gamma1(IndexPair pair, const ProductField& w) const;
  ProductField gamma2(IndexPair pair, const ProductField& w) const;
};

TensorizedDriver tensorize(const DifferentialRoughDriver& d);

// Discrete surrogate of the driver distance rho_alpha: sup-over-time probe
// operator norm of the level-1 path difference, plus p-variation norms of
// the level differences at exponents alpha and 2 alpha.
double rho_alpha(const DifferentialRoughDriver& a,
                 const DifferentialRoughDriver& b, double alpha);

// Fitted driver control: the minimal control of the level-1 probe-norm field
// at exponent alpha, as used in remainder windows and energy bounds.
ControlFn driver_control(const DifferentialRoughDriver& d);

// CSV import of raw sampled coefficient paths
// (columns: t, channel, node values in row-major grid order; channel 0 is
// first-order axis 0, ..., channel d is the zero-order coefficient).
CoefficientPath read_coeff_csv(const std::string& file, const SpatialGrid& g);

}  // namespace rpde
