#pragma once

#include <algorithm>
#include <array>
#include <functional>
#include <string>
#include <vector>

#include "rpde/errors.hpp"
#include "rpde/kernels.hpp"

// Spatial grids, scalar fields, first/second-order differential operators as
// finite-difference stencils, symbolic composition, discrete adjoints, and
// divergence-form elliptic assembly.
//
// Stencil policy: central differences everywhere (the implicit elliptic step
// supplies stability). Pure second derivatives use the compact three-point
// stencil; mixed derivatives compose central first differences, which keeps
// every operator exactly symmetric or antisymmetric under the grid inner
// product h^d sum(u v) on periodic grids.

namespace rpde {

enum class Boundary { periodic, dirichlet };

class SpatialGrid {
 public:
  SpatialGrid() = default;
  // Box [origin, origin + length) per axis; `extents` nodes per axis.
  // Periodic grids treat the right edge as wrapped, dirichlet grids store
  // boundary nodes (fields vanish there).
  SpatialGrid(int dim, std::array<int, 2> extents,
              std::array<double, 2> lengths, Boundary boundary,
              std::array<double, 2> origin = {0.0, 0.0});

  static SpatialGrid line(int n, double length, Boundary b,
                          double origin = 0.0);
  static SpatialGrid square(int n, double length, Boundary b);

  int dim() const { return dim_; }
  int extent(int axis) const { return extents_[static_cast<std::size_t>(axis)]; }
  double spacing(int axis) const { return h_[static_cast<std::size_t>(axis)]; }
  Boundary boundary() const { return boundary_; }
  double origin(int axis) const { return origin_[static_cast<std::size_t>(axis)]; }
  double length(int axis) const { return lengths_[static_cast<std::size_t>(axis)]; }
  std::size_t nodes() const { return nodes_; }
  double cell_volume() const {
    return dim_ == 1 ? h_[0] : h_[0] * h_[1];
  }
  double domain_volume() const {
    return dim_ == 1 ? lengths_[0] : lengths_[0] * lengths_[1];
  }

  // node index <-> coordinates (row-major, axis 0 slow)
  std::size_t index(int i, int j = 0) const {
    return static_cast<std::size_t>(i) * (dim_ == 2 ? extents_[1] : 1) +
           static_cast<std::size_t>(dim_ == 2 ? j : 0);
  }
  double coord(int axis, int i) const {
    return origin_[static_cast<std::size_t>(axis)] +
           h_[static_cast<std::size_t>(axis)] * i;
  }
  // extents as (n0, n1) with n1 = 1 in 1d, for the kernel sweeps
  std::size_t n0() const { return static_cast<std::size_t>(extents_[0]); }
  std::size_t n1() const {
    return dim_ == 2 ? static_cast<std::size_t>(extents_[1]) : 1;
  }
  bool is_node_on_boundary(int i, int j = 0) const;

  bool operator==(const SpatialGrid& o) const {
    return dim_ == o.dim_ && extents_ == o.extents_ && lengths_ == o.lengths_ &&
           boundary_ == o.boundary_ && origin_ == o.origin_;
  }

 private:
  int dim_ = 1;
  std::array<int, 2> extents_{4, 1};
  std::array<double, 2> lengths_{1.0, 1.0};
  std::array<double, 2> h_{0.25, 1.0};
  std::array<double, 2> origin_{0.0, 0.0};
  Boundary boundary_ = Boundary::periodic;
  std::size_t nodes_ = 4;
};

class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(SpatialGrid grid, double fill = 0.0)
      : grid_(std::move(grid)),
        values_(grid_.nodes(), fill) {}
  ScalarField(SpatialGrid grid, std::vector<double> values);

  static ScalarField sample(const SpatialGrid& g,
                            const std::function<double(double, double)>& f);

  const SpatialGrid& grid() const { return grid_; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }

  ScalarField& operator+=(const ScalarField& o);
  ScalarField& operator-=(const ScalarField& o);
  ScalarField& operator*=(double a);
  friend ScalarField operator+(ScalarField a, const ScalarField& b) {
    a += b;
    return a;
  }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) {
    a -= b;
    return a;
  }
  friend ScalarField operator*(double a, ScalarField f) {
    f *= a;
    return f;
  }

  double l2_norm() const;   // sqrt(h^d sum u^2)
  double max_norm() const;
  double integral() const;  // h^d sum u
  // L^p norm under the normalized grid measure (h^d / |domain|)
  double lp_norm_normalized(double p) const;

  void zero_boundary();  // dirichlet tidy-up

 private:
  SpatialGrid grid_;
  std::vector<double> values_;
};

ScalarField derivative(const ScalarField& u, int axis);          // central
ScalarField second_derivative(const ScalarField& u, int axis);   // compact
ScalarField cross_derivative(const ScalarField& u);              // d1 o d1
double inner(const ScalarField& a, const ScalarField& b);        // h^d <a,b>
ScalarField pointwise(const ScalarField& a, const ScalarField& b);

// sigma^i(x) d_i + c(x)
struct FirstOrderOp {
  std::vector<ScalarField> sigma;  // d components
  ScalarField c;

  const SpatialGrid& grid() const { return c.grid(); }
  static FirstOrderOp zero(const SpatialGrid& g);
  FirstOrderOp& operator+=(const FirstOrderOp& o);
  FirstOrderOp& operator*=(double a);
  double coeff_max_norm() const;
};

// XX^{ij}(x) d_ij + Y^i(x) d_i + Z(x), XX symmetric
struct SecondOrderOp {
  std::vector<ScalarField> xx;  // packed upper triangle: 1d {xx}, 2d {xx,xy,yy}
  std::vector<ScalarField> y;   // d components
  ScalarField z;

  const SpatialGrid& grid() const { return z.grid(); }
  static SecondOrderOp zero(const SpatialGrid& g);
  SecondOrderOp& operator+=(const SecondOrderOp& o);
  SecondOrderOp& operator*=(double a);
  double coeff_max_norm() const;
  int xx_count() const { return grid().dim() == 1 ? 1 : 3; }
};

ScalarField apply_first(const FirstOrderOp& op, const ScalarField& u);
ScalarField apply_second(const SecondOrderOp& op, const ScalarField& u);

// Symbolic composition by the product rule; coefficient derivatives use the
// same stencils as operator application.
SecondOrderOp compose_first(const FirstOrderOp& p, const FirstOrderOp& q);

// Type-erased linear field map (adjoints are divergence-form stencils, not
// FirstOrderOp/SecondOrderOp shapes).
struct LinearOp {
  std::function<ScalarField(const ScalarField&)> apply;
  ScalarField operator()(const ScalarField& u) const { return apply(u); }
};

// Discrete adjoints with respect to h^d sum(u v): <op u, v> = <u, op* v> to
// machine precision on periodic grids.
LinearOp adjoint_first(const FirstOrderOp& op);
LinearOp adjoint_second(const SecondOrderOp& op);

// Divergence-form elliptic operator d_i(a^{ij} d_j .) with flux differencing
// (a at half nodes by arithmetic averaging). a may be sampled per time node;
// a single sample means time-constant coefficients.
class EllipticOp {
 public:
  EllipticOp() = default;
  // a_fields: per time sample, packed symmetric {a11} (1d) or {a11,a12,a22}.
  EllipticOp(std::vector<std::vector<ScalarField>> a_fields, double lambda);

  const SpatialGrid& grid() const { return a_[0][0].grid(); }
  double lambda() const { return lambda_; }
  int time_samples() const { return static_cast<int>(a_.size()); }

  ScalarField apply(const ScalarField& u, int time_sample = 0) const;
  // y = (I - coef * A) u, fused for the implicit solves
  void apply_shifted(const ScalarField& u, double coef, int time_sample,
                     ScalarField& out) const;
  // packed coefficient fields of one time sample (clamped index)
  const std::vector<ScalarField>& coeffs(int time_sample) const {
    return a_[static_cast<std::size_t>(
        std::min<int>(time_sample, static_cast<int>(a_.size()) - 1))];
  }

 private:
  std::vector<std::vector<ScalarField>> a_;
  double lambda_ = 1.0;
};

// Verifies node-wise eigenvalue bounds lambda <= eig(a) <= 1/lambda before
// constructing; names the worst node on failure.
EllipticOp assemble_elliptic(std::vector<std::vector<ScalarField>> a_fields,
                             double lambda_declared);

// Smooth probe fields used for operator-norm surrogates; fixed suite
// (low-frequency trigonometric modes and a gaussian bump), versioned here.
std::vector<ScalarField> probe_suite(const SpatialGrid& g);

// max over probes of ||op(probe)||_2 / ||probe||_2
double probe_op_norm(const std::function<ScalarField(const ScalarField&)>& op,
                     const std::vector<ScalarField>& probes);

}  // namespace rpde
