#include "rpde/ito.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace rpde {

namespace {

double trapezoid(const TimeGrid& tg, int i, int j,
                 const std::function<double(int)>& fval) {
  double acc = 0.0;
  for (int k = i; k < j; ++k)
    acc += 0.5 * tg.dt(k) * (fval(k) + fval(k + 1));
  return acc;
}

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
    for (int i = 0; i + gap < n; ++i)
      if (g1.has(i, i + gap)) worst = std::max(worst, g1.norm_at(i, i + gap));
    if (worst <= threshold)
      best = gap;
    else
      break;
  }
  return best;
}

HolderFit fit_or_degenerate(const ScalarTwoParam& f, int max_gap) {
  const int n = f.grid().size();
  ScalarTwoParam win(f.grid(), f.norm_fn());
  const int gap = std::min(std::max(max_gap, 8), n - 1);
  for (const auto& [key, val] : f.entries())
    if (key.second - key.first <= gap) win.set(key.first, key.second, val);
  try {
    return holder_fit(win, {0, n - 1});
  } catch (const InsufficientDataError&) {
    double worst = 0.0;
    for (const auto& [key, val] : f.entries())
      worst = std::max(worst, std::abs(val));
    if (worst <= 1e-13)
      return HolderFit{std::numeric_limits<double>::infinity(), 1.0};
    throw;
  }
}

bool compactly_supported(const std::vector<ScalarField>& u) {
  // node-wise support strictly interior to the index box (collar width 2)
  for (const auto& f : u) {
    const SpatialGrid& g = f.grid();
    const double scale = std::max(1.0, f.max_norm());
    for (int i = 0; i < g.extent(0); ++i)
      for (int j = 0; j < (g.dim() == 2 ? g.extent(1) : 1); ++j) {
        const bool collar = i < 2 || i >= g.extent(0) - 2 ||
                            (g.dim() == 2 &&
                             (j < 2 || j >= g.extent(1) - 2));
        if (collar && std::abs(f[g.index(i, j)]) > 1e-12 * scale) return false;
      }
  }
  return true;
}

// generic weak-form residual builder over dyadic pairs and probes
WeakFormReport build_report(
    const TimeGrid& time, const SpatialGrid& space,
    const std::vector<ScalarField>& probes,
    const std::function<double(int, int, const ScalarField&, std::size_t)>&
        residual,
    int window_gap) {
  WeakFormReport rep;
  for (std::size_t pi = 0; pi < probes.size(); ++pi) {
    ScalarTwoParam table(time, abs_norm);
    for (auto [i, j] : dyadic_pairs(0, time.size() - 1)) {
      const double r = residual(i, j, probes[pi], pi);
      table.set(i, j, r);
      rep.max_residual = std::max(rep.max_residual, std::abs(r));
    }
    rep.residuals.push_back(std::move(table));
  }
  rep.slope = std::numeric_limits<double>::infinity();
  for (std::size_t pi = 0; pi < probes.size(); ++pi) {
    HolderFit fit = fit_or_degenerate(rep.residuals[pi], window_gap);
    rep.fits.push_back(fit);
    if (std::isfinite(fit.exponent))
      rep.slope = std::min(rep.slope, fit.exponent);
  }
  // constant probe is last in the suite
  const auto& phi1 = rep.residuals.back();
  for (const auto& [key, val] : phi1.entries())
    rep.phi1_max_residual = std::max(rep.phi1_max_residual, std::abs(val));
  (void)space;
  return rep;
}

}  // namespace

bool AdmissibleF::admissible_on(double range) const {
  if (std::abs(f(0.0)) > 1e-12) return false;
  if (std::abs(df(0.0)) > 1e-10 * std::max(1.0, range)) return false;
  const int n = 1001;
  for (int k = 0; k < n; ++k) {
    const double z = -range + 2.0 * range * k / (n - 1);
    const double v = ddf(z);
    if (!std::isfinite(v)) return false;
  }
  return true;
}

AdmissibleF truncate_power(double p, double R) {
  if (p < 2.0) throw ValidationError("truncate_power: p must be >= 2");
  if (R <= 0.0) throw ValidationError("truncate_power: R must be positive");

  // smooth cutoff: 1 on [0,1], 0 on [2,inf)
  auto theta = [](double x) {
    if (x <= 1.0) return 1.0;
    if (x >= 2.0) return 0.0;
    auto q = [](double t) { return t > 0 ? std::exp(-1.0 / t) : 0.0; };
    const double a = q(2.0 - x), b = q(x - 1.0);
    return a / (a + b);
  };
  auto d2 = [theta, p, R](double z) {
    const double az = std::abs(z);
    return theta(az / R) * p * (p - 1.0) *
           (az == 0.0 && p == 2.0 ? 1.0 : std::pow(az, p - 2.0));
  };

  // cumulative tables on [R, 2R] (Simpson on a fine fixed mesh)
  struct Table {
    double R, p;
    std::vector<double> c1;  // int_R^{y_k} theta p(p-1) tau^{p-2}
    std::vector<double> c0;  // int_R^{y_k} F'(y) dy
    double slope_inf;        // F' beyond 2R
    int panels = 1024;
    double y(int k) const { return R * (1.0 + static_cast<double>(k) / panels); }
  };
  auto tab = std::make_shared<Table>();
  tab->R = R;
  tab->p = p;
  tab->c1.resize(static_cast<std::size_t>(tab->panels) + 1, 0.0);
  tab->c0.resize(static_cast<std::size_t>(tab->panels) + 1, 0.0);
  // first pass: c1 via Simpson per panel
  for (int k = 0; k < tab->panels; ++k) {
    const double a = tab->y(k), b = tab->y(k + 1), m = 0.5 * (a + b);
    const double s = (b - a) / 6.0 * (d2(a) + 4.0 * d2(m) + d2(b));
    tab->c1[static_cast<std::size_t>(k) + 1] =
        tab->c1[static_cast<std::size_t>(k)] + s;
  }
  const double fprime_R = p * std::pow(R, p - 1.0);
  auto fprime_pos = [tab, fprime_R](double y) {
    if (y <= tab->R) return tab->p * std::pow(y, tab->p - 1.0);
    if (y >= 2.0 * tab->R) return fprime_R + tab->c1.back();
    const double s = (y - tab->R) / tab->R * tab->panels;
    const int k = std::min(static_cast<int>(s), tab->panels - 1);
    // local correction within the panel by one Simpson step
    const double a = tab->y(k);
    const double m = 0.5 * (a + y);
    auto theta_l = [tab](double x) {
      if (x <= 1.0) return 1.0;
      if (x >= 2.0) return 0.0;
      auto q = [](double t) { return t > 0 ? std::exp(-1.0 / t) : 0.0; };
      const double qa = q(2.0 - x), qb = q(x - 1.0);
      return qa / (qa + qb);
    };
    auto dd = [&](double z) {
      return theta_l(z / tab->R) * tab->p * (tab->p - 1.0) *
             std::pow(z, tab->p - 2.0);
    };
    const double local = (y - a) / 6.0 * (dd(a) + 4.0 * dd(m) + dd(y));
    return fprime_R + tab->c1[static_cast<std::size_t>(k)] + local;
  };
  // second pass: c0 via Simpson on F'
  for (int k = 0; k < tab->panels; ++k) {
    const double a = tab->y(k), b = tab->y(k + 1), m = 0.5 * (a + b);
    const double s =
        (b - a) / 6.0 * (fprime_pos(a) + 4.0 * fprime_pos(m) + fprime_pos(b));
    tab->c0[static_cast<std::size_t>(k) + 1] =
        tab->c0[static_cast<std::size_t>(k)] + s;
  }
  tab->slope_inf = fprime_R + tab->c1.back();

  auto fval = [tab, fprime_pos](double z) {
    const double az = std::abs(z);
    if (az <= tab->R) return std::pow(az, tab->p);
    const double r_p = std::pow(tab->R, tab->p);
    if (az >= 2.0 * tab->R)
      return r_p + tab->c0.back() + tab->slope_inf * (az - 2.0 * tab->R);
    const double s = (az - tab->R) / tab->R * tab->panels;
    const int k = std::min(static_cast<int>(s), tab->panels - 1);
    const double a = tab->y(k), m = 0.5 * (a + az);
    const double local = (az - a) / 6.0 *
                         (fprime_pos(a) + 4.0 * fprime_pos(m) +
                          fprime_pos(az));
    return r_p + tab->c0[static_cast<std::size_t>(k)] + local;
  };
  auto fder = [tab, fprime_pos](double z) {
    const double v = fprime_pos(std::abs(z));
    return z >= 0 ? v : -v;
  };

  AdmissibleF out;
  out.f = fval;
  out.df = fder;
  out.ddf = d2;
  out.name = "truncated |z|^" + std::to_string(p) + " at R=" +
             std::to_string(R);
  return out;
}

WeakFormReport chain_defect(const ControlledSolution& sol, const Scenario& sc,
                            const DifferentialRoughDriver& d,
                            const AdmissibleF& F) {
  if (!d.is_zero_order_free())
    throw ValidationError(
        "chain_defect: requires a transport driver (no zero-order part)");
  double sup_u = 0.0;
  for (const auto& f : sol.u) sup_u = std::max(sup_u, f.max_norm());
  if (!F.admissible_on(1.25 * std::max(sup_u, 1e-12)) &&
      !compactly_supported(sol.u))
    throw GateError("chain_defect: F is not admissible on the solution range "
                    "and the solution is not compactly supported");

  EllipticOp A = assemble_elliptic(sc.a, sc.lambda);
  const auto probes = probe_suite(sc.space);
  const int n = sc.time.size();

  // precompute composition fields
  std::vector<ScalarField> Fu, dFu, ddFu;
  for (const auto& uk : sol.u) {
    ScalarField a_(sc.space), b_(sc.space), c_(sc.space);
    for (std::size_t k = 0; k < uk.size(); ++k) {
      a_[k] = F.f(uk[k]);
      b_[k] = F.df(uk[k]);
      c_[k] = F.ddf(uk[k]);
    }
    Fu.push_back(std::move(a_));
    dFu.push_back(std::move(b_));
    ddFu.push_back(std::move(c_));
  }

  ScalarTwoParam g1 = level1_norm_field(d);
  const int wgap = small_window_gap(g1, 0.1);

  // adjoint levels per dyadic pair, applied to each probe once
  std::map<IndexPair, std::vector<ScalarField>> adj_probe;
  for (auto [i, j] : dyadic_pairs(0, n - 1)) {
    LinearOp a1 = adjoint_first(d.level1_op({i, j}));
    LinearOp a2 = adjoint_second(d.level2_op({i, j}));
    std::vector<ScalarField> rows;
    rows.reserve(probes.size());
    for (const auto& phi : probes) {
      ScalarField r = a1(phi);
      r += a2(phi);
      rows.push_back(std::move(r));
    }
    adj_probe.emplace(IndexPair{i, j}, std::move(rows));
  }

  auto residual = [&](int i, int j, const ScalarField& phi,
                      std::size_t pi) -> double {
    auto drift = [&](int k) {
      const ScalarField w1 = pointwise(ddFu[static_cast<std::size_t>(k)], phi);
      double v = dissipation_pairing(A, sol.u[static_cast<std::size_t>(k)],
                                     sol.u[static_cast<std::size_t>(k)], &w1,
                                     k);
      v += dissipation_pairing(A, sol.u[static_cast<std::size_t>(k)], phi,
                               &dFu[static_cast<std::size_t>(k)], k);
      if (sc.has_forcing())
        v -= inner(pointwise(dFu[static_cast<std::size_t>(k)], sc.forcing(k)),
                   phi);
      return v;
    };
    const double lhs = inner(Fu[static_cast<std::size_t>(j)], phi) -
                       inner(Fu[static_cast<std::size_t>(i)], phi);
    const double rough =
        inner(Fu[static_cast<std::size_t>(i)],
              adj_probe.at(IndexPair{i, j})[pi]);
    return lhs + trapezoid(sc.time, i, j, drift) - rough;
  };
  return build_report(sc.time, sc.space, probes, residual, wgap);
}

WeakFormReport product_defect(const ControlledSolution& u_sol,
                              const ControlledSolution& v_sol,
                              const Scenario& sc_u, const Scenario& sc_v,
                              const DifferentialRoughDriver& d) {
  if (!(sc_u.space == sc_v.space) || !(sc_u.time == sc_v.time))
    throw ValidationError("product_defect: scenario grids differ");
  EllipticOp A = assemble_elliptic(sc_u.a, sc_u.lambda);
  EllipticOp Av = assemble_elliptic(sc_v.a, sc_v.lambda);
  const auto probes = probe_suite(sc_u.space);
  const int n = sc_u.time.size();

  DifferentialRoughDriver d2 = shift(d, 2.0);
  ScalarTwoParam g1 = level1_norm_field(d);
  const int wgap = small_window_gap(g1, 0.1);

  std::map<IndexPair, std::vector<ScalarField>> adj_probe;
  for (auto [i, j] : dyadic_pairs(0, n - 1)) {
    LinearOp a1 = adjoint_first(d2.level1_op({i, j}));
    LinearOp a2 = adjoint_second(d2.level2_op({i, j}));
    std::vector<ScalarField> rows;
    for (const auto& phi : probes) {
      ScalarField r = a1(phi);
      r += a2(phi);
      rows.push_back(std::move(r));
    }
    adj_probe.emplace(IndexPair{i, j}, std::move(rows));
  }

  // elliptic drifts enter through the same dissipation quadrature as the
  // chain rule, so product(u, u) reproduces chain_defect at F = z^2 and the
  // residual table is symmetric under swapping the factors
  auto residual = [&](int i, int j, const ScalarField& phi,
                      std::size_t pi) -> double {
    const ScalarField uv_i = pointwise(u_sol.u[static_cast<std::size_t>(i)],
                                       v_sol.u[static_cast<std::size_t>(i)]);
    const ScalarField uv_j = pointwise(u_sol.u[static_cast<std::size_t>(j)],
                                       v_sol.u[static_cast<std::size_t>(j)]);
    const double lhs = inner(uv_j, phi) - inner(uv_i, phi);
    auto drift = [&](int k) {
      const ScalarField& uk = u_sol.u[static_cast<std::size_t>(k)];
      const ScalarField& vk = v_sol.u[static_cast<std::size_t>(k)];
      double acc = dissipation_pairing(A, uk, vk, &phi, k) +
                   dissipation_pairing(Av, vk, uk, &phi, k);
      acc += dissipation_pairing(A, uk, phi, &vk, k) +
             dissipation_pairing(Av, vk, phi, &uk, k);
      if (sc_v.has_forcing())
        acc -= inner(pointwise(uk, sc_v.forcing(k)), phi);
      if (sc_u.has_forcing())
        acc -= inner(pointwise(sc_u.forcing(k), vk), phi);
      return acc;
    };
    const double rough = inner(uv_i, adj_probe.at(IndexPair{i, j})[pi]);
    return lhs + trapezoid(sc_u.time, i, j, drift) - rough;
  };
  return build_report(sc_u.time, sc_u.space, probes, residual, wgap);
}

LpReport lp_evolution(const ControlledSolution& sol, const Scenario& sc,
                      const DifferentialRoughDriver& d, double p) {
  if (p < 2.0) throw ValidationError("lp_evolution: p must be >= 2");
  if (!d.geometric())
    throw GateError("lp_evolution: driver must be geometric");

  EllipticOp A = assemble_elliptic(sc.a, sc.lambda);
  const auto probes = probe_suite(sc.space);
  const int n = sc.time.size();
  DifferentialRoughDriver dp = shift(d, p);

  LpReport rep;
  std::vector<ScalarField> up;     // |u|^p
  std::vector<ScalarField> drift;  // p u |u|^{p-2} (Au + f)
  for (int k = 0; k < n; ++k) {
    const ScalarField& uk = sol.u[static_cast<std::size_t>(k)];
    ScalarField pw(sc.space), g(sc.space);
    ScalarField au = A.apply(uk, k);
    if (sc.has_forcing()) au += sc.forcing(k);
    for (std::size_t idx = 0; idx < uk.size(); ++idx) {
      const double z = uk[idx];
      pw[idx] = std::pow(std::abs(z), p);
      g[idx] = p * z * std::pow(std::abs(z), p - 2.0) * au[idx];
    }
    rep.lp_pow.push_back(pw.integral());
    up.push_back(std::move(pw));
    drift.push_back(std::move(g));
  }

  ScalarTwoParam g1 = level1_norm_field(d);
  const int wgap = small_window_gap(g1, 0.1);

  std::map<IndexPair, std::vector<ScalarField>> adj_probe;
  for (auto [i, j] : dyadic_pairs(0, n - 1)) {
    LinearOp a1 = adjoint_first(dp.level1_op({i, j}));
    LinearOp a2 = adjoint_second(dp.level2_op({i, j}));
    std::vector<ScalarField> rows;
    for (const auto& phi : probes) {
      ScalarField r = a1(phi);
      r += a2(phi);
      rows.push_back(std::move(r));
    }
    adj_probe.emplace(IndexPair{i, j}, std::move(rows));
  }

  auto residual = [&](int i, int j, const ScalarField& phi,
                      std::size_t pi) -> double {
    const double lhs = inner(up[static_cast<std::size_t>(j)], phi) -
                       inner(up[static_cast<std::size_t>(i)], phi);
    const double dr = trapezoid(sc.time, i, j, [&](int k) {
      return inner(drift[static_cast<std::size_t>(k)], phi);
    });
    const double rough =
        inner(up[static_cast<std::size_t>(i)], adj_probe.at(IndexPair{i, j})[pi]);
    return lhs - dr - rough;
  };
  rep.identity = build_report(sc.time, sc.space, probes, residual, wgap);

  rep.max_increase = 0.0;
  for (int k = 0; k + 1 < n; ++k)
    rep.max_increase = std::max(
        rep.max_increase, rep.lp_pow[static_cast<std::size_t>(k + 1)] -
                              rep.lp_pow[static_cast<std::size_t>(k)]);
  const double scale = *std::max_element(rep.lp_pow.begin(), rep.lp_pow.end());
  rep.monotone = rep.max_increase <= 1e-7 * std::max(scale, 1e-12);
  return rep;
}

}  // namespace rpde
