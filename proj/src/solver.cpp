#include "rpde/solver.hpp"

#include <algorithm>
#include <cmath>

namespace rpde {

namespace {

constexpr double kTiny = 1e-300;

std::function<double(const std::vector<double>&)> l2_payload_norm(
    const SpatialGrid& g) {
  const double cv = g.cell_volume();
  return [cv](const std::vector<double>& v) {
    return std::sqrt(cv * kern::dot(v, v));
  };
}

// squared half-node gradient sum_axes h^d sum (D+ u)^2
double grad_sq_half(const ScalarField& u) {
  const SpatialGrid& g = u.grid();
  const bool per = g.boundary() == Boundary::periodic;
  double acc = 0.0;
  for (int axis = 0; axis < g.dim(); ++axis) {
    const int n = g.extent(axis);
    const double invh = 1.0 / g.spacing(axis);
    const int other = g.dim() == 2 ? g.extent(1 - axis) : 1;
    double s = 0.0;
    for (int o = 0; o < other; ++o) {
      const int edges = per ? n : n - 1;
      for (int k = 0; k < edges; ++k) {
        const int kp = per ? (k + 1) % n : k + 1;
        std::size_t i0, i1;
        if (axis == 0) {
          i0 = g.index(k, o);
          i1 = g.index(kp, o);
        } else {
          i0 = g.index(o, k);
          i1 = g.index(o, kp);
        }
        const double d = (u[i1] - u[i0]) * invh;
        s += d * d;
      }
    }
    acc += s * g.cell_volume();
  }
  return acc;
}

double trapezoid(const TimeGrid& tg, int i, int j,
                 const std::function<double(int)>& fval) {
  double acc = 0.0;
  for (int k = i; k < j; ++k)
    acc += 0.5 * tg.dt(k) * (fval(k) + fval(k + 1));
  return acc;
}

// level-1 probe norms on dyadic pairs; basis for omega-small windows
ScalarTwoParam level1_norm_field(const DifferentialRoughDriver& d) {
  const auto probes = probe_suite(d.spatial());
  ScalarTwoParam g1(d.grid(), abs_norm);
  for (auto [i, j] : dyadic_pairs(0, d.grid().size() - 1)) {
    FirstOrderOp op = d.level1_op({i, j});
    g1.set(i, j,
           probe_op_norm(
               [&](const ScalarField& u) { return apply_first(op, u); },
               probes));
  }
  return g1;
}

int small_window_gap(const ScalarTwoParam& g1, double threshold) {
  const int n = g1.grid().size();
  int best = 1;
  for (int gap = 1; gap < n; gap *= 2) {
    double worst = 0.0;
    for (int i = 0; i + gap < n; i += 1)
      if (g1.has(i, i + gap)) worst = std::max(worst, g1.norm_at(i, i + gap));
    if (worst <= threshold)
      best = gap;
    else
      break;
  }
  return best;
}

template <class P>
TwoParamField<P> window_restrict(const TwoParamField<P>& f, int max_gap) {
  TwoParamField<P> out(f.grid(), f.norm_fn());
  for (const auto& [key, val] : f.entries())
    if (key.second - key.first <= max_gap) out.set(key.first, key.second, val);
  return out;
}

template <class P>
HolderFit robust_fit(const TwoParamField<P>& f, int max_gap) {
  // fits need >= 4 dyadic gap classes; widen the window if the omega-small
  // one is too short, and treat an identically-zero table as "infinite order"
  const int n = f.grid().size();
  int gap = std::max(max_gap, 8);
  gap = std::min(gap, n - 1);
  try {
    return holder_fit(window_restrict(f, gap), {0, n - 1});
  } catch (const InsufficientDataError&) {
    double worst = 0.0;
    for (const auto& [key, val] : f.entries())
      worst = std::max(worst, f.norm_fn()(val));
    if (worst <= 1e-13)
      return HolderFit{std::numeric_limits<double>::infinity(), 1.0};
    throw;
  }
}

}  // namespace

const ScalarField& Scenario::forcing(int time_node) const {
  if (f.empty()) throw ValidationError("scenario has no forcing");
  if (f.size() == 1) return f[0];
  return f[static_cast<std::size_t>(
      std::min<int>(time_node, static_cast<int>(f.size()) - 1))];
}

DifferentialRoughDriver build_driver(const Scenario& sc) {
  const DriverSpec& spec = sc.driver_spec;
  if (spec.channels.empty())
    throw ValidationError("driver spec: no channel operators");
  DifferentialRoughDriver d;
  switch (spec.lift) {
    case LiftKind::pl_rough_path: {
      MultiPath base = sample(spec.path, sc.time);
      MultiPath fine = refine(base, spec.path, spec.refine_level);
      ScalarRoughPath rp = coarsen(pl_level2(fine), sc.time);
      d = from_rough_path(rp, spec.channels, spec.alpha);
      break;
    }
    case LiftKind::canonical: {
      int lev = 0;
      while ((1 << lev) < spec.quad_refine) ++lev;
      if ((1 << lev) != spec.quad_refine)
        throw ValidationError("driver spec: quad_refine must be a power of 2");
      TimeGrid fine_grid = sc.time.refine_dyadic(lev);
      MultiPath z = sample(spec.path, fine_grid);
      CoefficientPath cp;
      cp.grid = fine_grid;
      cp.spatial = sc.space;
      const int m = spec.path.channels;
      for (int t = 0; t < fine_grid.size(); ++t) {
        std::vector<ScalarField> sig;
        for (int a = 0; a < sc.space.dim(); ++a) {
          ScalarField acc(sc.space);
          for (int mu = 0; mu < m; ++mu) {
            ScalarField tmp = spec.channels[static_cast<std::size_t>(mu)]
                                  .sigma[static_cast<std::size_t>(a)];
            tmp *= z.at(mu, t);
            acc += tmp;
          }
          sig.push_back(std::move(acc));
        }
        cp.sigma.push_back(std::move(sig));
        ScalarField c0(sc.space);
        for (int mu = 0; mu < m; ++mu) {
          ScalarField tmp = spec.channels[static_cast<std::size_t>(mu)].c;
          tmp *= z.at(mu, t);
          c0 += tmp;
        }
        cp.c.push_back(std::move(c0));
      }
      d = canonical_lift(cp, spec.quad_refine, spec.alpha);
      break;
    }
    case LiftKind::ito_bm: {
      PathRecipe rec = spec.path;
      rec.kind = PathKind::bm;
      MultiPath w = sample(rec, sc.time);
      ScalarRoughPath rp = pl_level2(w);
      // replace level 2 by its Ito value: sym part 1/2[(dW)^2 - dt]
      for (int k = 0; k < rp.intervals(); ++k)
        for (int mu = 0; mu < rp.channels; ++mu)
          rp.z2[static_cast<std::size_t>(k)]
               [static_cast<std::size_t>(mu) * rp.channels + mu] -=
              0.5 * sc.time.dt(k);
      d = from_rough_path(rp, spec.channels, spec.alpha);
      break;
    }
  }
  if (!d.geometric() && !sc.scheme.allow_nongeometric)
    throw GateError(
        "driver is not geometric; pass allow-nongeometric to run anyway");
  return d;
}

ScalarField step(const ScalarField& u_s, int interval, const Scenario& sc,
                 const DifferentialRoughDriver& d) {
  const double dt = sc.time.dt(interval);
  EllipticOp A = assemble_elliptic(sc.a, sc.lambda);

  FirstOrderOp b1 = d.level1_op({interval, interval + 1});
  SecondOrderOp b2 = d.level2_op({interval, interval + 1});

  // probe amplification guard on the explicit rough increment
  const auto probes = probe_suite(sc.space);
  const double amp = probe_op_norm(
      [&](const ScalarField& phi) {
        ScalarField r = apply_first(b1, phi);
        r += apply_second(b2, phi);
        return r;
      },
      probes);
  if (amp > sc.scheme.cfl_limit)
    throw GuardError("step: rough increment amplification " +
                     std::to_string(amp) + " exceeds limit " +
                     std::to_string(sc.scheme.cfl_limit) +
                     "; refine the time grid");

  ScalarField rhs = u_s;
  if (sc.scheme.theta < 1.0) {
    ScalarField au = A.apply(u_s, interval);
    au *= (1.0 - sc.scheme.theta) * dt;
    rhs += au;
  }
  if (sc.has_forcing()) {
    ScalarField fbar = sc.forcing(interval);
    fbar += sc.forcing(interval + 1);
    fbar *= 0.5 * dt;
    rhs += fbar;
  }
  rhs += apply_first(b1, u_s);
  rhs += apply_second(b2, u_s);
  if (sc.space.boundary() == Boundary::dirichlet) rhs.zero_boundary();

  ScalarField u_t = u_s;  // warm start
  const double coef = sc.scheme.theta * dt;
  if (coef == 0.0) return rhs;
  ScalarField tmp(sc.space);
  auto matvec = [&](std::span<const double> in, std::span<double> out) {
    ScalarField uin(sc.space,
                    std::vector<double>(in.begin(), in.end()));
    A.apply_shifted(uin, coef, interval + 1, tmp);
    std::copy(tmp.values().begin(), tmp.values().end(), out.begin());
  };
  auto res = kern::cg_solve(matvec, rhs.values(),
                            std::span<double>(u_t.values()),
                            sc.scheme.cg_tol,
                            static_cast<int>(10 * sc.space.nodes()) + 100);
  if (!res.converged)
    throw GuardError("step: implicit elliptic solve stalled (residual " +
                     std::to_string(res.residual) + ")");
  if (sc.space.boundary() == Boundary::dirichlet) u_t.zero_boundary();
  return u_t;
}

ControlledSolution solve(const Scenario& sc) {
  return solve(sc, build_driver(sc));
}

ControlledSolution solve(const Scenario& sc, const DifferentialRoughDriver& d) {
  if (!d.geometric() && !sc.scheme.allow_nongeometric)
    throw GateError(
        "driver is not geometric; pass allow-nongeometric to run anyway");
  if (!(sc.time == d.grid()))
    throw ValidationError("solve: scenario and driver time grids differ");

  ControlledSolution sol;
  sol.time = sc.time;
  sol.u.reserve(static_cast<std::size_t>(sc.time.size()));
  sol.u.push_back(sc.u0);
  for (int k = 0; k < sc.time.intervals(); ++k)
    sol.u.push_back(step(sol.u.back(), k, sc, d));

  EllipticOp A = assemble_elliptic(sc.a, sc.lambda);
  auto norm = l2_payload_norm(sc.space);
  sol.Ru = FieldTwoParam(sc.time, norm);
  sol.u_sharp = FieldTwoParam(sc.time, norm);

  // drift values at the nodes once
  std::vector<ScalarField> drift;
  drift.reserve(sol.u.size());
  for (int k = 0; k < sc.time.size(); ++k) {
    ScalarField g = A.apply(sol.u[static_cast<std::size_t>(k)], k);
    if (sc.has_forcing()) g += sc.forcing(k);
    drift.push_back(std::move(g));
  }

  for (auto [i, j] : dyadic_pairs(0, sc.time.size() - 1)) {
    ScalarField du = sol.u[static_cast<std::size_t>(j)];
    du -= sol.u[static_cast<std::size_t>(i)];
    FirstOrderOp b1 = d.level1_op({i, j});
    ScalarField ru = du;
    ru -= apply_first(b1, sol.u[static_cast<std::size_t>(i)]);
    sol.Ru.set(i, j, ru.values());

    ScalarField sharp = du;
    for (int k = i; k < j; ++k) {
      ScalarField seg = drift[static_cast<std::size_t>(k)];
      seg += drift[static_cast<std::size_t>(k + 1)];
      seg *= 0.5 * sc.time.dt(k);
      sharp -= seg;
    }
    sharp -= apply_first(b1, sol.u[static_cast<std::size_t>(i)]);
    sharp -= apply_second(d.level2_op({i, j}),
                          sol.u[static_cast<std::size_t>(i)]);
    sol.u_sharp.set(i, j, sharp.values());
  }

  ScalarTwoParam g1 = level1_norm_field(d);
  sol.window_gap = small_window_gap(g1, 0.1);
  {
    int total = 0, inside = 0;
    for (const auto& [key, val] : sol.Ru.entries()) {
      (void)val;
      ++total;
      if (key.second - key.first <= sol.window_gap) ++inside;
    }
    sol.window_coverage = total ? static_cast<double>(inside) / total : 0.0;
  }
  sol.fit_Ru = robust_fit(sol.Ru, sol.window_gap);
  sol.fit_sharp = robust_fit(sol.u_sharp, sol.window_gap);
  sol.energy = energy_report(sol.u, sc, d);
  return sol;
}

EnergyReport energy_report(const std::vector<ScalarField>& u,
                           const Scenario& sc,
                           const DifferentialRoughDriver& d) {
  EnergyReport rep;
  const int n = sc.time.size();
  EllipticOp A = assemble_elliptic(sc.a, sc.lambda);

  rep.l2_sq.resize(static_cast<std::size_t>(n));
  std::vector<double> gsq(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double l2 = u[static_cast<std::size_t>(k)].l2_norm();
    rep.l2_sq[static_cast<std::size_t>(k)] = l2 * l2;
    gsq[static_cast<std::size_t>(k)] =
        grad_sq_half(u[static_cast<std::size_t>(k)]);
  }
  // E_t = |u_t|^2 + lambda int_0^t |grad u|^2, trapezoid in time
  rep.energy.resize(static_cast<std::size_t>(n));
  rep.energy[0] = rep.l2_sq[0];
  double acc = 0.0;
  for (int k = 1; k < n; ++k) {
    acc += sc.lambda * 0.5 * sc.time.dt(k - 1) *
           (gsq[static_cast<std::size_t>(k - 1)] +
            gsq[static_cast<std::size_t>(k)]);
    rep.energy[static_cast<std::size_t>(k)] =
        rep.l2_sq[static_cast<std::size_t>(k)] + acc;
  }

  // phi = 1 weak identity residual with the order-2 shifted driver
  DifferentialRoughDriver d2 = shift(d, 2.0);
  rep.identity_residual = ScalarTwoParam(sc.time, abs_norm);
  const ScalarField ones(sc.space, 1.0);
  auto drift_pair = [&](int k) {
    double v = 2.0 * inner(u[static_cast<std::size_t>(k)],
                           A.apply(u[static_cast<std::size_t>(k)], k));
    if (sc.has_forcing())
      v += 2.0 * inner(u[static_cast<std::size_t>(k)], sc.forcing(k));
    return v;
  };
  for (auto [i, j] : dyadic_pairs(0, n - 1)) {
    ScalarField usq = pointwise(u[static_cast<std::size_t>(i)],
                                u[static_cast<std::size_t>(i)]);
    LinearOp adj1 = adjoint_first(d2.level1_op({i, j}));
    LinearOp adj2 = adjoint_second(d2.level2_op({i, j}));
    ScalarField adj_ones = adj1(ones);
    adj_ones += adj2(ones);
    const double res = (rep.l2_sq[static_cast<std::size_t>(j)] -
                        rep.l2_sq[static_cast<std::size_t>(i)]) -
                       trapezoid(sc.time, i, j, drift_pair) -
                       inner(usq, adj_ones);
    rep.identity_residual.set(i, j, res);
  }

  // frozen-constant a priori bound
  ScalarTwoParam g1 = level1_norm_field(d);
  const ControlFn omega = fitted_control(g1, d.alpha());
  rep.omega_total = omega(0, n - 1);
  const int wgap = small_window_gap(g1, 0.1);
  double wl = 0.0;
  for (int i = 0; i + wgap < n; ++i) wl = std::max(wl, omega(i, i + wgap));
  rep.window_L = wl;
  double f_sq = 0.0;
  if (sc.has_forcing())
    f_sq = trapezoid(sc.time, 0, n - 1, [&](int k) {
      const double fn = sc.forcing(k).l2_norm();
      return fn * fn;
    });
  const double u0_sq = rep.l2_sq[0];
  const double c_lambda = 4.0 * std::max(1.0, 1.0 / sc.lambda);
  double factor = 1.0;
  if (rep.omega_total > kTiny) {
    const double tau =
        std::pow(std::max(wl, 1e-8), d.alpha()) / (2.0 * std::log(2.0));
    factor = std::exp(rep.omega_total / tau);
  }
  rep.bound = c_lambda * factor * (u0_sq + f_sq);
  rep.satisfied =
      *std::max_element(rep.energy.begin(), rep.energy.end()) <= rep.bound;

  // rough Gronwall monitor on E
  GronwallProblem gp;
  gp.grid = sc.time;
  gp.G = rep.energy;
  gp.omega = omega;
  gp.kappa = d.alpha();
  gp.L = std::max(wl, 1e-8);
  const TimeGrid tg = sc.time;
  const bool has_f = sc.has_forcing();
  std::vector<double> fsq_nodes(static_cast<std::size_t>(n), 0.0);
  if (has_f)
    for (int k = 0; k < n; ++k) {
      const double fn = sc.forcing(k).l2_norm();
      fsq_nodes[static_cast<std::size_t>(k)] = fn * fn;
    }
  gp.phi = [tg, fsq_nodes](int i, int j) {
    double acc = 0.0;
    for (int k = i; k < j; ++k)
      acc += 0.5 * tg.dt(k) *
             (fsq_nodes[static_cast<std::size_t>(k)] +
              fsq_nodes[static_cast<std::size_t>(k + 1)]);
    return acc + 1e-12;
  };
  rep.monitor = gronwall_verify(gp, 1e-9);
  return rep;
}

RemainderReport remainder_report(const ControlledSolution& sol,
                                 const DifferentialRoughDriver& d,
                                 const Scenario& sc, double alpha) {
  RemainderReport rep;
  ScalarTwoParam g1 = level1_norm_field(d);
  const int wgap = small_window_gap(g1, 0.1);
  rep.slope_Ru = robust_fit(sol.Ru, wgap).exponent;
  rep.slope_sharp = robust_fit(sol.u_sharp, wgap).exponent;

  const ControlFn omega = fitted_control(g1, alpha);
  double sup_u = 0.0;
  for (const auto& f : sol.u) sup_u = std::max(sup_u, f.l2_norm());
  double worst = 0.0, wl = 0.0;
  for (const auto& [key, val] : sol.u_sharp.entries()) {
    if (key.second - key.first > wgap) continue;
    const double w = omega(key.first, key.second);
    wl = std::max(wl, w);
    double f_int = 0.0;
    if (sc.has_forcing())
      f_int = trapezoid(sol.time, key.first, key.second,
                        [&](int k) { return sc.forcing(k).l2_norm(); });
    const double rhs = std::pow(w, 3 * alpha) * sup_u +
                       std::pow(w, alpha) * f_int + kTiny;
    worst = std::max(worst, sol.u_sharp.norm_fn()(val) / rhs);
  }
  rep.c_measured = worst;
  rep.window_L = wl;
  return rep;
}

Scenario dirichlet_extend(const Scenario& sc, int margin_nodes) {
  if (sc.space.boundary() != Boundary::dirichlet)
    throw ValidationError("dirichlet_extend: scenario is not dirichlet");
  const SpatialGrid& gd = sc.space;
  const int d = gd.dim();

  // support check: channel coefficients vanish on a 2h collar
  for (const auto& ch : sc.driver_spec.channels) {
    auto check = [&](const ScalarField& f, const char* what) {
      for (int i = 0; i < gd.extent(0); ++i)
        for (int j = 0; j < (d == 2 ? gd.extent(1) : 1); ++j) {
          const bool collar =
              i < 2 || i >= gd.extent(0) - 2 ||
              (d == 2 && (j < 2 || j >= gd.extent(1) - 2));
          if (collar && std::abs(f[gd.index(i, j)]) > 1e-14)
            throw ValidationError(
                std::string("dirichlet_extend: driver coefficient (") + what +
                ") does not vanish on the boundary collar");
        }
    };
    for (const auto& s : ch.sigma) check(s, "sigma");
    check(ch.c, "rho");
  }

  const int m = margin_nodes > 0
                    ? margin_nodes
                    : std::max(4, gd.extent(0) / 2);
  std::array<int, 2> ext{gd.extent(0) - 1 + 2 * m, 1};
  std::array<double, 2> len{ext[0] * gd.spacing(0), 1.0};
  std::array<double, 2> org{gd.origin(0) - m * gd.spacing(0), 0.0};
  if (d == 2) {
    ext[1] = gd.extent(1) - 1 + 2 * m;
    len[1] = ext[1] * gd.spacing(1);
    org[1] = gd.origin(1) - m * gd.spacing(1);
  }
  SpatialGrid gp(d, ext, len, Boundary::periodic, org);

  auto extend_zero = [&](const ScalarField& f) {
    ScalarField out(gp);
    for (int i = 0; i < gd.extent(0); ++i)
      for (int j = 0; j < (d == 2 ? gd.extent(1) : 1); ++j)
        out[gp.index(i + m, d == 2 ? j + m : 0)] = f[gd.index(i, j)];
    return out;
  };

  Scenario out;
  out.time = sc.time;
  out.space = gp;
  out.lambda = sc.lambda;
  out.scheme = sc.scheme;
  out.r = sc.r;
  out.q = sc.q;
  out.p = sc.p;
  // elliptic coefficients: original inside the domain, identity outside
  for (const auto& sample : sc.a) {
    std::vector<ScalarField> ea;
    if (d == 1) {
      ScalarField a11(gp, 1.0);
      for (int i = 0; i < gd.extent(0); ++i)
        a11[gp.index(i + m)] = sample[0][gd.index(i)];
      ea.push_back(std::move(a11));
    } else {
      ScalarField a11(gp, 1.0), a12(gp, 0.0), a22(gp, 1.0);
      for (int i = 0; i < gd.extent(0); ++i)
        for (int j = 0; j < gd.extent(1); ++j) {
          a11[gp.index(i + m, j + m)] = sample[0][gd.index(i, j)];
          a12[gp.index(i + m, j + m)] = sample[1][gd.index(i, j)];
          a22[gp.index(i + m, j + m)] = sample[2][gd.index(i, j)];
        }
      ea.push_back(std::move(a11));
      ea.push_back(std::move(a12));
      ea.push_back(std::move(a22));
    }
    out.a.push_back(std::move(ea));
  }
  for (const auto& fk : sc.f) out.f.push_back(extend_zero(fk));
  out.u0 = extend_zero(sc.u0);
  out.driver_spec = sc.driver_spec;
  out.driver_spec.channels.clear();
  for (const auto& ch : sc.driver_spec.channels) {
    FirstOrderOp ech;
    for (const auto& s : ch.sigma) ech.sigma.push_back(extend_zero(s));
    ech.c = extend_zero(ch.c);
    out.driver_spec.channels.push_back(std::move(ech));
  }
  out.embedding = DirichletEmbedding{gd, m, d == 2 ? m : 0};
  return out;
}

ScalarField restrict_to_domain(const ScalarField& box_field,
                               const DirichletEmbedding& emb) {
  const SpatialGrid& gd = emb.domain;
  const SpatialGrid& gp = box_field.grid();
  ScalarField out(gd);
  for (int i = 0; i < gd.extent(0); ++i)
    for (int j = 0; j < (gd.dim() == 2 ? gd.extent(1) : 1); ++j)
      out[gd.index(i, j)] = box_field[gp.index(
          i + emb.offset0, gd.dim() == 2 ? j + emb.offset1 : 0)];
  return out;
}

MaxPrincipleReport max_principle_check(const ControlledSolution& sol,
                                       const Scenario& sc) {
  MaxPrincipleReport rep;
  const bool embedded = sc.embedding.has_value();
  const SpatialGrid& gd = embedded ? sc.embedding->domain : sc.space;

  ScalarField u0d =
      embedded ? restrict_to_domain(sc.u0, *sc.embedding) : sc.u0;
  double mn = 0.0, mx = 0.0;
  for (std::size_t k = 0; k < u0d.size(); ++k) {
    mn = std::min(mn, u0d[k]);
    mx = std::max(mx, u0d[k]);
  }
  rep.lower = std::min(0.0, mn);
  rep.upper = std::max(0.0, mx);
  double dt_max = 0.0;
  for (int k = 0; k < sol.time.intervals(); ++k)
    dt_max = std::max(dt_max, sol.time.dt(k));
  double h_sq = gd.spacing(0) * gd.spacing(0);
  if (gd.dim() == 2) h_sq += gd.spacing(1) * gd.spacing(1);
  rep.tol = sc.scheme.mp_tol_factor * (dt_max + h_sq);

  for (const auto& ut : sol.u) {
    ScalarField ud = embedded ? restrict_to_domain(ut, *sc.embedding) : ut;
    for (std::size_t k = 0; k < ud.size(); ++k) {
      const double ex =
          std::max(ud[k] - (rep.upper + rep.tol), (rep.lower - rep.tol) - ud[k]);
      if (ex > 0) {
        ++rep.violations;
        rep.worst_excess = std::max(rep.worst_excess, ex);
      }
    }
    if (embedded) {
      // outside the domain the zero-extended data should stay near zero
      const SpatialGrid& gp = sc.space;
      for (int i = 0; i < gp.extent(0); ++i)
        for (int j = 0; j < (gp.dim() == 2 ? gp.extent(1) : 1); ++j) {
          const bool inside =
              i >= sc.embedding->offset0 &&
              i < sc.embedding->offset0 + gd.extent(0) &&
              (gp.dim() == 1 ||
               (j >= sc.embedding->offset1 &&
                j < sc.embedding->offset1 + gd.extent(1)));
          if (!inside)
            rep.outside_max =
                std::max(rep.outside_max, std::abs(ut[gp.index(i, j)]));
        }
    }
  }
  return rep;
}

double moser_recursion_bound(double gamma, double tau, double eps, double phi0,
                             int n) {
  const double gn = std::pow(1.0 + eps, n);
  const double log_bound = ((gn - 1.0) / eps) * std::log(gamma) +
                           ((gn - 1.0) / (eps * eps) - n / eps) * std::log(tau) +
                           gn * std::log(phi0);
  return log_bound > 700 ? std::numeric_limits<double>::infinity()
                         : std::exp(log_bound);
}

MoserReport moser_bound(const ControlledSolution& sol, const Scenario& sc,
                        double epsilon) {
  const int d = sc.space.dim();
  if (!(1.0 / sc.r + d / (2.0 * sc.q) < 1.0))
    throw ValidationError(
        "moser_bound: forcing exponents must satisfy 1/r + d/(2q) < 1");
  if (1.0 / sc.r + d * (1.0 + epsilon * sc.q) / (2.0 * sc.q) > 1.0 + 1e-12)
    throw ValidationError(
        "moser_bound: epsilon too large, need 1/r + d(1+eps q)/(2q) <= 1");

  const double rho0 = 2.0 * sc.r / (sc.r - 1.0);
  const double sig0 = 2.0 * sc.q / (sc.q - 1.0);
  const double rho = rho0 * (1.0 + epsilon);
  const double sig = sig0 * (1.0 + epsilon);

  MoserReport rep;
  rep.tau_used = 1.0 + epsilon;
  const int n_max = 8;
  const double T = sol.time.horizon();
  for (int n = 0; n <= n_max; ++n) {
    const double gn = std::pow(1.0 + epsilon, n);
    const double rho_n = rho * gn;
    const double sig_n = sig * gn;
    // normalized-in-time L^{rho_n} of normalized-in-space L^{sig_n}
    double acc = 0.0;
    for (int k = 0; k < sol.time.size(); ++k) {
      const double sx =
          sol.u[static_cast<std::size_t>(k)].lp_norm_normalized(sig_n);
      const double w =
          (k == 0 ? 0.5 * sol.time.dt(0)
                  : (k == sol.time.size() - 1
                         ? 0.5 * sol.time.dt(k - 1)
                         : 0.5 * (sol.time.dt(k - 1) + sol.time.dt(k)))) /
          T;
      acc += w * std::pow(sx, rho_n);
    }
    const double nu = std::pow(acc, 1.0 / rho_n);
    const double log_phi = gn * std::log(std::max(nu, kTiny));
    const double phi =
        (log_phi > 700 ? std::numeric_limits<double>::infinity()
                       : std::exp(log_phi)) +
        1.0;
    rep.phi.push_back(phi);
    rep.kappa.push_back(2.0 * gn);
    rep.sup_seq.push_back(std::pow(phi, 1.0 / gn));
  }
  rep.sup_estimate = rep.sup_seq.back();
  for (std::size_t n = 1; n < rep.phi.size(); ++n) {
    const double denom = std::pow(rep.tau_used, static_cast<double>(n) - 1) *
                         std::pow(rep.phi[n - 1], 1.0 + epsilon);
    rep.gamma_measured = std::max(rep.gamma_measured, rep.phi[n] / denom);
  }
  for (std::size_t n = 0; n < rep.phi.size(); ++n)
    rep.formula_bound.push_back(moser_recursion_bound(
        rep.gamma_measured, rep.tau_used, epsilon, rep.phi[0],
        static_cast<int>(n)));
  return rep;
}

std::vector<WongZakaiRow> wong_zakai_sweep(const Scenario& sc,
                                           const std::vector<int>& levels) {
  if (sc.driver_spec.lift != LiftKind::pl_rough_path)
    throw ValidationError("wong_zakai_sweep: needs a piecewise-linear lift");
  if (sc.f.size() > 1)
    throw ValidationError(
        "wong_zakai_sweep: time-varying forcing is not resampled across "
        "levels");

  std::vector<WongZakaiRow> rows;
  MultiPath base = sample(sc.driver_spec.path, sc.time);

  std::vector<ScalarField> prev_u;
  DifferentialRoughDriver prev_lift_on_base;
  bool have_prev = false;
  int prev_level = 0;

  for (int lev : levels) {
    MultiPath fine = refine(base, sc.driver_spec.path, lev);
    ScalarRoughPath rp_fine = pl_level2(fine);

    Scenario sck = sc;
    sck.time = fine.grid;
    DifferentialRoughDriver dk =
        from_rough_path(rp_fine, sc.driver_spec.channels,
                        sc.driver_spec.alpha);
    ControlledSolution uk = solve(sck, dk);

    DifferentialRoughDriver lift_on_base = from_rough_path(
        coarsen(rp_fine, sc.time), sc.driver_spec.channels,
        sc.driver_spec.alpha);

    WongZakaiRow row;
    row.level = lev;
    if (have_prev) {
      row.rho_to_prev =
          rho_alpha(lift_on_base, prev_lift_on_base, sc.driver_spec.alpha);
      const int stride = 1 << lev;
      const int stride_prev = 1 << prev_level;
      double worst = 0.0;
      for (int i = 0; i < sc.time.size(); ++i) {
        ScalarField diff = uk.u[static_cast<std::size_t>(i * stride)];
        diff -= prev_u[static_cast<std::size_t>(i * stride_prev)];
        worst = std::max(worst, diff.l2_norm());
      }
      row.sup_diff_to_prev = worst;
    }
    rows.push_back(row);
    prev_u = uk.u;
    prev_lift_on_base = lift_on_base;
    have_prev = true;
    prev_level = lev;
  }
  return rows;
}

double dissipation_pairing(const EllipticOp& A, const ScalarField& u,
                           const ScalarField& v, const ScalarField* w,
                           int time_sample) {
  const SpatialGrid& g = u.grid();
  const auto& a = A.coeffs(time_sample);
  const bool per = g.boundary() == Boundary::periodic;
  const int d = g.dim();
  double acc = 0.0;
  for (int axis = 0; axis < d; ++axis) {
    const ScalarField& aa =
        a[static_cast<std::size_t>(d == 1 ? 0 : (axis == 0 ? 0 : 2))];
    const int n = g.extent(axis);
    const int other = d == 2 ? g.extent(1 - axis) : 1;
    const double invh = 1.0 / g.spacing(axis);
    double s = 0.0;
    for (int o = 0; o < other; ++o) {
      const int edges = per ? n : n - 1;
      for (int k = 0; k < edges; ++k) {
        const int kp = per ? (k + 1) % n : k + 1;
        std::size_t i0, i1;
        if (axis == 0) {
          i0 = g.index(k, o);
          i1 = g.index(kp, o);
        } else {
          i0 = g.index(o, k);
          i1 = g.index(o, kp);
        }
        const double du = (u[i1] - u[i0]) * invh;
        const double dv = (v[i1] - v[i0]) * invh;
        const double ah = 0.5 * (aa[i0] + aa[i1]);
        const double wh = w ? 0.5 * ((*w)[i0] + (*w)[i1]) : 1.0;
        s += ah * du * dv * wh;
      }
    }
    acc += s * g.cell_volume();
  }
  if (d == 2) {
    // central cross term: a12 [ (Dx u)(Dy v) + (Dy u)(Dx v) ] w
    const ScalarField& a12 = a[1];
    ScalarField dxu = derivative(u, 0), dyu = derivative(u, 1);
    ScalarField dxv = derivative(v, 0), dyv = derivative(v, 1);
    double s = 0.0;
    for (std::size_t k = 0; k < g.nodes(); ++k) {
      const double wk = w ? (*w)[k] : 1.0;
      s += a12[k] * (dxu[k] * dyv[k] + dyu[k] * dxv[k]) * wk;
    }
    acc += s * g.cell_volume();
  }
  return acc;
}

}  // namespace rpde
