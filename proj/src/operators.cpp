#include "rpde/operators.hpp"

#include <algorithm>
#include <cmath>

namespace rpde {

SpatialGrid::SpatialGrid(int dim, std::array<int, 2> extents,
                         std::array<double, 2> lengths, Boundary boundary,
                         std::array<double, 2> origin)
    : dim_(dim),
      extents_(extents),
      lengths_(lengths),
      origin_(origin),
      boundary_(boundary) {
  if (dim != 1 && dim != 2) throw ValidationError("SpatialGrid: dim must be 1 or 2");
  for (int a = 0; a < dim; ++a) {
    if (extents_[static_cast<std::size_t>(a)] < 4)
      throw ValidationError("SpatialGrid: need >= 4 nodes per axis");
    if (lengths_[static_cast<std::size_t>(a)] <= 0)
      throw ValidationError("SpatialGrid: axis length must be positive");
  }
  if (dim == 1) {
    extents_[1] = 1;
    lengths_[1] = 1.0;
  }
  for (int a = 0; a < 2; ++a) {
    const int n = extents_[static_cast<std::size_t>(a)];
    // periodic: nodes at k*h, h = L/n (right edge wraps);
    // dirichlet: nodes at k*h including both edges, h = L/(n-1)
    if (a < dim)
      h_[static_cast<std::size_t>(a)] =
          boundary_ == Boundary::periodic
              ? lengths_[static_cast<std::size_t>(a)] / n
              : lengths_[static_cast<std::size_t>(a)] / (n - 1);
    else
      h_[static_cast<std::size_t>(a)] = 1.0;
  }
  nodes_ = static_cast<std::size_t>(extents_[0]) *
           static_cast<std::size_t>(extents_[1]);
}

SpatialGrid SpatialGrid::line(int n, double length, Boundary b, double origin) {
  return SpatialGrid(1, {n, 1}, {length, 1.0}, b, {origin, 0.0});
}
SpatialGrid SpatialGrid::square(int n, double length, Boundary b) {
  return SpatialGrid(2, {n, n}, {length, length}, b);
}

bool SpatialGrid::is_node_on_boundary(int i, int j) const {
  if (boundary_ == Boundary::periodic) return false;
  if (i == 0 || i == extents_[0] - 1) return true;
  if (dim_ == 2 && (j == 0 || j == extents_[1] - 1)) return true;
  return false;
}

ScalarField::ScalarField(SpatialGrid grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.nodes())
    throw ValidationError("ScalarField: value count does not match grid");
}

ScalarField ScalarField::sample(const SpatialGrid& g,
                                const std::function<double(double, double)>& f) {
  ScalarField out(g);
  for (int i = 0; i < g.extent(0); ++i)
    for (int j = 0; j < (g.dim() == 2 ? g.extent(1) : 1); ++j)
      out[g.index(i, j)] = f(g.coord(0, i), g.dim() == 2 ? g.coord(1, j) : 0.0);
  return out;
}

ScalarField& ScalarField::operator+=(const ScalarField& o) {
  if (!(grid_ == o.grid_)) throw ValidationError("field grids do not match");
  kern::axpy(1.0, o.values_, values_);
  return *this;
}
ScalarField& ScalarField::operator-=(const ScalarField& o) {
  if (!(grid_ == o.grid_)) throw ValidationError("field grids do not match");
  kern::axpy(-1.0, o.values_, values_);
  return *this;
}
ScalarField& ScalarField::operator*=(double a) {
  kern::scale(values_, a);
  return *this;
}

double ScalarField::l2_norm() const {
  return std::sqrt(grid_.cell_volume() * kern::dot(values_, values_));
}
double ScalarField::max_norm() const { return kern::max_abs(values_); }
double ScalarField::integral() const {
  return grid_.cell_volume() * kern::block_sum(values_);
}
double ScalarField::lp_norm_normalized(double p) const {
  std::vector<double> pw(values_.size());
  for (std::size_t i = 0; i < values_.size(); ++i)
    pw[i] = std::pow(std::abs(values_[i]), p);
  const double mean =
      grid_.cell_volume() * kern::block_sum(pw) / grid_.domain_volume();
  return std::pow(mean, 1.0 / p);
}

void ScalarField::zero_boundary() {
  if (grid_.boundary() == Boundary::periodic) return;
  for (int i = 0; i < grid_.extent(0); ++i)
    for (int j = 0; j < (grid_.dim() == 2 ? grid_.extent(1) : 1); ++j)
      if (grid_.is_node_on_boundary(i, j)) values_[grid_.index(i, j)] = 0.0;
}

ScalarField derivative(const ScalarField& u, int axis) {
  ScalarField out(u.grid());
  kern::diff1(u.values(), out.values(), u.grid().n0(), u.grid().n1(), axis,
              u.grid().spacing(axis),
              u.grid().boundary() == Boundary::periodic);
  return out;
}
ScalarField second_derivative(const ScalarField& u, int axis) {
  ScalarField out(u.grid());
  kern::diff2(u.values(), out.values(), u.grid().n0(), u.grid().n1(), axis,
              u.grid().spacing(axis),
              u.grid().boundary() == Boundary::periodic);
  return out;
}
ScalarField cross_derivative(const ScalarField& u) {
  if (u.grid().dim() != 2)
    throw ValidationError("cross_derivative: needs a 2-d grid");
  return derivative(derivative(u, 1), 0);
}

double inner(const ScalarField& a, const ScalarField& b) {
  if (!(a.grid() == b.grid())) throw ValidationError("inner: grid mismatch");
  return a.grid().cell_volume() * kern::dot(a.values(), b.values());
}

ScalarField pointwise(const ScalarField& a, const ScalarField& b) {
  if (!(a.grid() == b.grid()))
    throw ValidationError("pointwise: grid mismatch");
  ScalarField out(a.grid());
  kern::hadamard(a.values(), b.values(), out.values());
  return out;
}

FirstOrderOp FirstOrderOp::zero(const SpatialGrid& g) {
  FirstOrderOp op;
  for (int a = 0; a < g.dim(); ++a) op.sigma.emplace_back(g);
  op.c = ScalarField(g);
  return op;
}
FirstOrderOp& FirstOrderOp::operator+=(const FirstOrderOp& o) {
  for (std::size_t a = 0; a < sigma.size(); ++a) sigma[a] += o.sigma[a];
  c += o.c;
  return *this;
}
FirstOrderOp& FirstOrderOp::operator*=(double a) {
  for (auto& s : sigma) s *= a;
  c *= a;
  return *this;
}
double FirstOrderOp::coeff_max_norm() const {
  double m = c.max_norm();
  for (const auto& s : sigma) m = std::max(m, s.max_norm());
  return m;
}

SecondOrderOp SecondOrderOp::zero(const SpatialGrid& g) {
  SecondOrderOp op;
  const int nxx = g.dim() == 1 ? 1 : 3;
  for (int k = 0; k < nxx; ++k) op.xx.emplace_back(g);
  for (int a = 0; a < g.dim(); ++a) op.y.emplace_back(g);
  op.z = ScalarField(g);
  return op;
}
SecondOrderOp& SecondOrderOp::operator+=(const SecondOrderOp& o) {
  for (std::size_t k = 0; k < xx.size(); ++k) xx[k] += o.xx[k];
  for (std::size_t a = 0; a < y.size(); ++a) y[a] += o.y[a];
  z += o.z;
  return *this;
}
SecondOrderOp& SecondOrderOp::operator*=(double a) {
  for (auto& f : xx) f *= a;
  for (auto& f : y) f *= a;
  z *= a;
  return *this;
}
double SecondOrderOp::coeff_max_norm() const {
  double m = z.max_norm();
  for (const auto& f : xx) m = std::max(m, f.max_norm());
  for (const auto& f : y) m = std::max(m, f.max_norm());
  return m;
}

ScalarField apply_first(const FirstOrderOp& op, const ScalarField& u) {
  if (!(op.grid() == u.grid()))
    throw ValidationError("apply_first: grid mismatch");
  ScalarField out = pointwise(op.c, u);
  for (int a = 0; a < u.grid().dim(); ++a) {
    ScalarField du = derivative(u, a);
    kern::hadamard(op.sigma[static_cast<std::size_t>(a)].values(), du.values(),
                   du.values());
    out += du;
  }
  return out;
}

ScalarField apply_second(const SecondOrderOp& op, const ScalarField& u) {
  if (!(op.grid() == u.grid()))
    throw ValidationError("apply_second: grid mismatch");
  ScalarField out = pointwise(op.z, u);
  const int d = u.grid().dim();
  // pure second derivatives
  for (int a = 0; a < d; ++a) {
    const ScalarField& coeff = op.xx[static_cast<std::size_t>(d == 1 ? 0 : (a == 0 ? 0 : 2))];
    ScalarField dd = second_derivative(u, a);
    kern::hadamard(coeff.values(), dd.values(), dd.values());
    out += dd;
  }
  // mixed derivative (coefficient stored once; d_xy and d_yx coincide)
  if (d == 2) {
    ScalarField dxy = cross_derivative(u);
    kern::hadamard(op.xx[1].values(), dxy.values(), dxy.values());
    out += dxy;
    out += dxy;  // XX^{12} d_12 + XX^{21} d_21 with XX symmetric
  }
  for (int a = 0; a < d; ++a) {
    ScalarField du = derivative(u, a);
    kern::hadamard(op.y[static_cast<std::size_t>(a)].values(), du.values(),
                   du.values());
    out += du;
  }
  return out;
}

SecondOrderOp compose_first(const FirstOrderOp& p, const FirstOrderOp& q) {
  if (!(p.grid() == q.grid()))
    throw ValidationError("compose_first: grid mismatch");
  const SpatialGrid& g = p.grid();
  const int d = g.dim();
  SecondOrderOp out = SecondOrderOp::zero(g);

  // second order: sym(sigma_p (x) sigma_q)
  if (d == 1) {
    out.xx[0] = pointwise(p.sigma[0], q.sigma[0]);
  } else {
    out.xx[0] = pointwise(p.sigma[0], q.sigma[0]);
    ScalarField cross = pointwise(p.sigma[0], q.sigma[1]);
    cross += pointwise(p.sigma[1], q.sigma[0]);
    cross *= 0.5;
    out.xx[1] = cross;
    out.xx[2] = pointwise(p.sigma[1], q.sigma[1]);
  }
  // first order: sigma_p . grad sigma_q^j + c_p sigma_q^j + sigma_p^j c_q
  for (int j = 0; j < d; ++j) {
    ScalarField yj(g);
    for (int a = 0; a < d; ++a)
      yj += pointwise(p.sigma[static_cast<std::size_t>(a)],
                      derivative(q.sigma[static_cast<std::size_t>(j)], a));
    yj += pointwise(p.c, q.sigma[static_cast<std::size_t>(j)]);
    yj += pointwise(p.sigma[static_cast<std::size_t>(j)], q.c);
    out.y[static_cast<std::size_t>(j)] = yj;
  }
  // zero order: sigma_p . grad c_q + c_p c_q
  ScalarField z(g);
  for (int a = 0; a < d; ++a)
    z += pointwise(p.sigma[static_cast<std::size_t>(a)], derivative(q.c, a));
  z += pointwise(p.c, q.c);
  out.z = z;
  return out;
}

namespace {

void require_adjoint_supported(const SpatialGrid& g, double boundary_coeff_max) {
  if (g.boundary() == Boundary::periodic) return;
  if (boundary_coeff_max > 1e-14)
    throw ValidationError(
        "adjoint: dirichlet grid requires coefficients vanishing on the "
        "boundary");
}

// max |f| over a collar of width 2 along the dirichlet boundary (one-sided
// stencil rows must never see nonzero derivative coefficients)
double boundary_max(const ScalarField& f) {
  if (f.grid().boundary() == Boundary::periodic) return 0.0;
  double m = 0.0;
  const SpatialGrid& g = f.grid();
  auto near_edge = [](int k, int n) { return k < 2 || k >= n - 2; };
  for (int i = 0; i < g.extent(0); ++i)
    for (int j = 0; j < (g.dim() == 2 ? g.extent(1) : 1); ++j)
      if (near_edge(i, g.extent(0)) ||
          (g.dim() == 2 && near_edge(j, g.extent(1))))
        m = std::max(m, std::abs(f[g.index(i, j)]));
  return m;
}

}  // namespace

LinearOp adjoint_first(const FirstOrderOp& op) {
  double bmax = 0.0;
  for (const auto& s : op.sigma) bmax = std::max(bmax, boundary_max(s));
  require_adjoint_supported(op.grid(), bmax);
  FirstOrderOp cop = op;  // value copy keeps the closure self-contained
  return LinearOp{[cop](const ScalarField& v) {
    // (M_sigma D + M_c)^T = -D(sigma .) + c .
    ScalarField out = pointwise(cop.c, v);
    for (int a = 0; a < v.grid().dim(); ++a) {
      ScalarField sv = pointwise(cop.sigma[static_cast<std::size_t>(a)], v);
      out -= derivative(sv, a);
    }
    return out;
  }};
}

LinearOp adjoint_second(const SecondOrderOp& op) {
  double bmax = 0.0;
  for (const auto& f : op.xx) bmax = std::max(bmax, boundary_max(f));
  for (const auto& f : op.y) bmax = std::max(bmax, boundary_max(f));
  require_adjoint_supported(op.grid(), bmax);
  SecondOrderOp cop = op;
  return LinearOp{[cop](const ScalarField& v) {
    const int d = v.grid().dim();
    // (M_XX D_ij)^T = D_ij (XX .): compact stencils are symmetric, the mixed
    // stencil is a product of commuting antisymmetric differences.
    ScalarField out = pointwise(cop.z, v);
    for (int a = 0; a < d; ++a) {
      const ScalarField& coeff =
          cop.xx[static_cast<std::size_t>(d == 1 ? 0 : (a == 0 ? 0 : 2))];
      out += second_derivative(pointwise(coeff, v), a);
    }
    if (d == 2) {
      ScalarField cv = pointwise(cop.xx[1], v);
      ScalarField dxy = cross_derivative(cv);
      out += dxy;
      out += dxy;
    }
    for (int a = 0; a < d; ++a)
      out -= derivative(pointwise(cop.y[static_cast<std::size_t>(a)], v), a);
    return out;
  }};
}

EllipticOp::EllipticOp(std::vector<std::vector<ScalarField>> a_fields,
                       double lambda)
    : a_(std::move(a_fields)), lambda_(lambda) {
  if (a_.empty() || a_[0].empty())
    throw ValidationError("EllipticOp: no coefficient fields");
}

namespace {

// flux-form second difference along one axis:
// out += [a_{i+1/2}(u_{i+1}-u_i) - a_{i-1/2}(u_i-u_{i-1})] / h^2
void add_flux_term(const ScalarField& a, const ScalarField& u, int axis,
                   ScalarField& out) {
  const SpatialGrid& g = u.grid();
  const bool periodic = g.boundary() == Boundary::periodic;
  const int n0 = g.extent(0);
  const int n1 = g.dim() == 2 ? g.extent(1) : 1;
  const double invh2 = 1.0 / (g.spacing(axis) * g.spacing(axis));
  const long long total = static_cast<long long>(g.nodes());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long long idx = 0; idx < total; ++idx) {
    const int i = static_cast<int>(idx / n1);
    const int j = static_cast<int>(idx % n1);
    const int ni = axis == 0 ? n0 : n1;
    const int pos = axis == 0 ? i : j;
    int up = pos + 1, dn = pos - 1;
    if (periodic) {
      up = (up + ni) % ni;
      dn = (dn + ni) % ni;
    } else if (up >= ni || dn < 0) {
      // dirichlet boundary rows belong to the constraint, not the operator
      continue;
    }
    const std::size_t c = g.index(i, j);
    const std::size_t cu = axis == 0 ? g.index(up, j) : g.index(i, up);
    const std::size_t cd = axis == 0 ? g.index(dn, j) : g.index(i, dn);
    const double ap = 0.5 * (a[c] + a[cu]);
    const double am = 0.5 * (a[c] + a[cd]);
    out[c] += (ap * (u[cu] - u[c]) - am * (u[c] - u[cd])) * invh2;
  }
}

}  // namespace

ScalarField EllipticOp::apply(const ScalarField& u, int time_sample) const {
  const auto& a = a_[static_cast<std::size_t>(
      std::min<int>(time_sample, static_cast<int>(a_.size()) - 1))];
  const int d = u.grid().dim();
  ScalarField out(u.grid());
  add_flux_term(a[0], u, 0, out);
  if (d == 2) {
    add_flux_term(a[2], u, 1, out);
    // cross part: d_x(a12 d_y u) + d_y(a12 d_x u), central differences
    ScalarField du = derivative(u, 1);
    kern::hadamard(a[1].values(), du.values(), du.values());
    out += derivative(du, 0);
    du = derivative(u, 0);
    kern::hadamard(a[1].values(), du.values(), du.values());
    out += derivative(du, 1);
  }
  if (u.grid().boundary() == Boundary::dirichlet) out.zero_boundary();
  return out;
}

void EllipticOp::apply_shifted(const ScalarField& u, double coef,
                               int time_sample, ScalarField& out) const {
  out = apply(u, time_sample);
  out *= -coef;
  out += u;
}

EllipticOp assemble_elliptic(std::vector<std::vector<ScalarField>> a_fields,
                             double lambda_declared) {
  if (lambda_declared <= 0)
    throw ValidationError("assemble_elliptic: lambda must be positive");
  for (std::size_t ts = 0; ts < a_fields.size(); ++ts) {
    const auto& a = a_fields[ts];
    const SpatialGrid& g = a[0].grid();
    const int d = g.dim();
    if ((d == 1 && a.size() != 1) || (d == 2 && a.size() != 3))
      throw ValidationError("assemble_elliptic: wrong coefficient count");
    const double lo = lambda_declared - 1e-12;
    const double hi = 1.0 / lambda_declared + 1e-12;
    for (std::size_t n = 0; n < g.nodes(); ++n) {
      double emin, emax;
      if (d == 1) {
        emin = emax = a[0][n];
      } else {
        const double tr = a[0][n] + a[2][n];
        const double det = a[0][n] * a[2][n] - a[1][n] * a[1][n];
        const double disc = std::sqrt(std::max(0.0, tr * tr / 4 - det));
        emin = tr / 2 - disc;
        emax = tr / 2 + disc;
      }
      if (emin < lo || emax > hi)
        throw ValidationError(
            "assemble_elliptic: ellipticity violated at node " +
            std::to_string(n) + " (time sample " + std::to_string(ts) +
            "): eig range [" + std::to_string(emin) + "," +
            std::to_string(emax) + "] vs [" + std::to_string(lambda_declared) +
            "," + std::to_string(1.0 / lambda_declared) + "]");
    }
  }
  return EllipticOp(std::move(a_fields), lambda_declared);
}

std::vector<ScalarField> probe_suite(const SpatialGrid& g) {
  // Fixed suite, version 1. Low-frequency modes and a gaussian bump; for
  // dirichlet grids modes vanish on the boundary.
  std::vector<ScalarField> probes;
  const double pi = 3.14159265358979323846;
  const bool per = g.boundary() == Boundary::periodic;
  auto wave1 = [&](double kx, bool cos_mode) {
    return ScalarField::sample(g, [&](double x, double) {
      const double sx = (x - g.origin(0)) / g.length(0);
      return per ? (cos_mode ? std::cos(2 * pi * kx * sx)
                             : std::sin(2 * pi * kx * sx))
                 : std::sin(pi * kx * sx);
    });
  };
  if (g.dim() == 1) {
    probes.push_back(wave1(1, false));
    probes.push_back(wave1(1, true));
    probes.push_back(wave1(2, false));
    probes.push_back(wave1(2, true));
    probes.push_back(wave1(3, false));
    probes.push_back(ScalarField::sample(g, [&](double x, double) {
      const double cx = g.origin(0) + 0.5 * g.length(0);
      const double w = 0.1 * g.length(0);
      return std::exp(-(x - cx) * (x - cx) / (2 * w * w));
    }));
    probes.push_back(ScalarField::sample(g, [&](double x, double) {
      const double sx = (x - g.origin(0)) / g.length(0);
      return per ? std::sin(2 * pi * sx) * std::cos(4 * pi * sx)
                 : std::sin(pi * sx) * std::sin(2 * pi * sx);
    }));
    probes.push_back(ScalarField(g, 1.0));
    if (!per)
      for (auto& p : probes) p.zero_boundary();
    return probes;
  }
  auto wave2 = [&](double kx, double ky, bool cos_mode) {
    return ScalarField::sample(g, [&](double x, double y) {
      const double sx = (x - g.origin(0)) / g.length(0);
      const double sy = (y - g.origin(1)) / g.length(1);
      if (per)
        return cos_mode ? std::cos(2 * pi * (kx * sx + ky * sy))
                        : std::sin(2 * pi * (kx * sx + ky * sy));
      return std::sin(pi * kx * sx) * std::sin(pi * ky * sy);
    });
  };
  probes.push_back(wave2(1, 0, false));
  probes.push_back(wave2(0, 1, false));
  probes.push_back(wave2(1, 1, false));
  probes.push_back(wave2(1, 1, true));
  probes.push_back(wave2(2, 1, false));
  probes.push_back(wave2(1, 2, true));
  probes.push_back(ScalarField::sample(g, [&](double x, double y) {
    const double cx = g.origin(0) + 0.5 * g.length(0);
    const double cy = g.origin(1) + 0.5 * g.length(1);
    const double w = 0.1 * std::min(g.length(0), g.length(1));
    return std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) /
                    (2 * w * w));
  }));
  probes.push_back(ScalarField(g, 1.0));
  if (!per)
    for (auto& p : probes) p.zero_boundary();
  return probes;
}

double probe_op_norm(const std::function<ScalarField(const ScalarField&)>& op,
                     const std::vector<ScalarField>& probes) {
  double m = 0.0;
  for (const auto& p : probes) {
    const double pn = p.l2_norm();
    if (pn <= 0) continue;
    m = std::max(m, op(p).l2_norm() / pn);
  }
  return m;
}

}  // namespace rpde
