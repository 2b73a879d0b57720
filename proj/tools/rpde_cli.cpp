// Command-line front end: scenario configs in, CSV tables + plot scripts +
// a reproducibility manifest out. Subcommands map one-to-one onto library
// operations. Exit codes: 0 ok, 2 validation error, 3 geometricity or
// admissibility gate, 4 numerical guard.

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#ifdef _OPENMP
#include <omp.h>
#endif
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rpde/config.hpp"
#include "rpde/ito.hpp"
#include "rpde/solver.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct RunContext {
  std::string config_path;
  rpde::Config cfg;
  fs::path out_dir;
  std::string prefix;
  std::vector<std::string> outputs;
  std::string command;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_csv(RunContext& ctx, const std::string& name) {
  fs::create_directories(ctx.out_dir);
  fs::path p = ctx.out_dir / (ctx.prefix + "_" + name);
  std::ofstream os(p, std::ios::binary);
  if (!os) throw rpde::ValidationError("cannot open output " + p.string());
  ctx.outputs.push_back(p.filename().string());
  return os;
}

void write_manifest(RunContext& ctx, std::uint64_t seed) {
  json m;
  m["version"] = kVersion;
  m["command"] = ctx.command;
  m["config_path"] = ctx.config_path;
  m["config_digest"] = rpde::config_digest(ctx.cfg);
  m["config_text"] = ctx.cfg.text();
  m["seed"] = seed;
  m["timestamp"] = static_cast<long long>(std::time(nullptr));
  m["outputs"] = ctx.outputs;
  fs::path p = ctx.out_dir / (ctx.prefix + "_manifest.json");
  std::ofstream os(p, std::ios::binary);
  os << m.dump(2) << "\n";
}

void write_plot_script(RunContext& ctx, const std::string& name,
                       const std::string& csv, const std::string& title,
                       int xcol, int ycol) {
  auto os = open_csv(ctx, name);
  os << "set datafile separator ','\n"
     << "set key autotitle columnhead\n"
     << "set title '" << title << "'\n"
     << "plot '" << csv << "' using " << xcol << ":" << ycol
     << " with lines\n";
}

rpde::Scenario scenario_with_overrides(RunContext& ctx, long long seed_flag,
                                       bool allow_ng) {
  if (seed_flag >= 0)
    ctx.cfg.set("run.seed", std::to_string(seed_flag));
  if (allow_ng) ctx.cfg.set("scheme.allow_nongeometric", "true");
  return rpde::build_scenario(ctx.cfg);
}

void emit_solution_csv(RunContext& ctx, const rpde::ControlledSolution& sol,
                       const rpde::Scenario& sc) {
  auto os = open_csv(ctx, "solution.csv");
  const rpde::SpatialGrid& g = sc.space;
  os << "t (time),x (length)";
  if (g.dim() == 2) os << ",y (length)";
  os << ",u (solution value)\n";
  for (int k = 0; k < sol.time.size(); ++k) {
    for (int i = 0; i < g.extent(0); ++i) {
      for (int j = 0; j < (g.dim() == 2 ? g.extent(1) : 1); ++j) {
        os << fmt(sol.time.t(k)) << "," << fmt(g.coord(0, i));
        if (g.dim() == 2) os << "," << fmt(g.coord(1, j));
        os << ","
           << fmt(sol.u[static_cast<std::size_t>(k)][g.index(i, j)]) << "\n";
      }
    }
  }
  // binary dump + sidecar describing the shape
  {
    fs::path p = ctx.out_dir / (ctx.prefix + "_u.bin");
    std::ofstream bs(p, std::ios::binary);
    for (const auto& f : sol.u)
      bs.write(reinterpret_cast<const char*>(f.values().data()),
               static_cast<std::streamsize>(f.values().size() *
                                            sizeof(double)));
    ctx.outputs.push_back(p.filename().string());
    json side;
    side["dtype"] = "float64";
    side["order"] = {"time", "node"};
    side["shape"] = {sol.time.size(), static_cast<long long>(g.nodes())};
    side["grid"] = {{"dim", g.dim()},
                    {"extent0", g.extent(0)},
                    {"extent1", g.dim() == 2 ? g.extent(1) : 1},
                    {"spacing0", g.spacing(0)},
                    {"boundary", g.boundary() == rpde::Boundary::periodic
                                     ? "periodic"
                                     : "dirichlet"}};
    fs::path sp = ctx.out_dir / (ctx.prefix + "_u.json");
    std::ofstream ss(sp, std::ios::binary);
    ss << side.dump(2) << "\n";
    ctx.outputs.push_back(sp.filename().string());
  }
}

void emit_weakform_csv(RunContext& ctx, const std::string& name,
                       const rpde::WeakFormReport& rep,
                       const rpde::TimeGrid& tg) {
  auto os = open_csv(ctx, name);
  os << "s (time),t (time),probe_id,residual (weak-form defect),"
     << "fitted_slope (per probe)\n";
  for (std::size_t pi = 0; pi < rep.residuals.size(); ++pi) {
    for (const auto& [key, val] : rep.residuals[pi].entries()) {
      os << fmt(tg.t(key.first)) << "," << fmt(tg.t(key.second)) << "," << pi
         << "," << fmt(val) << "," << fmt(rep.fits[pi].exponent) << "\n";
    }
  }
}

int cmd_lift(RunContext& ctx, long long seed_flag, bool allow_ng) {
  ctx.command = "lift";
  rpde::Scenario sc = scenario_with_overrides(ctx, seed_flag, allow_ng);
  rpde::DifferentialRoughDriver d = rpde::build_driver(sc);
  rpde::ChenDefect cd = rpde::chen_defect(d);
  rpde::BracketFamily br = rpde::bracket(d);
  const auto probes = rpde::probe_suite(sc.space);

  auto os = open_csv(ctx, "driver_summary.csv");
  os << "s (time),t (time),level1_norm (probe op norm of first level),"
     << "level2_norm (probe op norm of second level),"
     << "chen_coeff_defect (generalized Chen residual),"
     << "chen_op_defect (operator Chen residual),"
     << "bracket_order_defect (second-order bracket coefficient)\n";
  for (int k = 0; k < d.grid().intervals(); ++k) {
    rpde::FirstOrderOp b1 = d.level1_op({k, k + 1});
    rpde::SecondOrderOp b2 = d.level2_op({k, k + 1});
    const double n1 = rpde::probe_op_norm(
        [&](const rpde::ScalarField& u) { return rpde::apply_first(b1, u); },
        probes);
    const double n2 = rpde::probe_op_norm(
        [&](const rpde::ScalarField& u) { return rpde::apply_second(b2, u); },
        probes);
    os << fmt(d.grid().t(k)) << "," << fmt(d.grid().t(k + 1)) << "," << fmt(n1)
       << "," << fmt(n2) << "," << fmt(cd.coeff_defect) << ","
       << fmt(cd.op_defect) << "," << fmt(br.order_defect) << "\n";
  }
  write_manifest(ctx, sc.driver_spec.path.seed);
  std::cout << "lift: chen coeff defect " << cd.coeff_defect << ", op defect "
            << cd.op_defect << ", bracket order defect " << br.order_defect
            << (d.geometric() ? " (geometric)" : " (non-geometric)") << "\n";
  return 0;
}

int cmd_solve(RunContext& ctx, long long seed_flag, bool allow_ng) {
  ctx.command = "solve";
  rpde::Scenario sc = scenario_with_overrides(ctx, seed_flag, allow_ng);
  rpde::DifferentialRoughDriver d = rpde::build_driver(sc);
  rpde::ControlledSolution sol = rpde::solve(sc, d);
  emit_solution_csv(ctx, sol, sc);

  {
    auto os = open_csv(ctx, "energy.csv");
    os << "t (time),l2_sq (squared L2 norm of u),"
       << "energy (L2 sq plus accumulated dissipation),"
       << "bound (a priori energy bound)\n";
    for (int k = 0; k < sol.time.size(); ++k)
      os << fmt(sol.time.t(k)) << ","
         << fmt(sol.energy.l2_sq[static_cast<std::size_t>(k)]) << ","
         << fmt(sol.energy.energy[static_cast<std::size_t>(k)]) << ","
         << fmt(sol.energy.bound) << "\n";
  }
  {
    auto os = open_csv(ctx, "remainder.csv");
    os << "s (time),t (time),Ru_norm (controlled-path remainder),"
       << "u_sharp_norm (two-level remainder)\n";
    for (const auto& [key, val] : sol.Ru.entries()) {
      os << fmt(sol.time.t(key.first)) << "," << fmt(sol.time.t(key.second))
         << "," << fmt(sol.Ru.norm_fn()(val)) << ","
         << fmt(sol.u_sharp.norm_at(key.first, key.second)) << "\n";
    }
    rpde::RemainderReport rr =
        rpde::remainder_report(sol, d, sc, sc.driver_spec.alpha);
    std::cout << "solve: Ru slope " << rr.slope_Ru << ", u_sharp slope "
              << rr.slope_sharp << ", energy bound "
              << (sol.energy.satisfied ? "satisfied" : "NOT satisfied")
              << "\n";
  }
  if (sc.embedding) {
    rpde::MaxPrincipleReport mp = rpde::max_principle_check(sol, sc);
    auto os = open_csv(ctx, "max_principle.csv");
    os << "lower (admissible min),upper (admissible max),tol (band widening),"
       << "violations (node count),worst_excess,outside_max\n";
    os << fmt(mp.lower) << "," << fmt(mp.upper) << "," << fmt(mp.tol) << ","
       << mp.violations << "," << fmt(mp.worst_excess) << ","
       << fmt(mp.outside_max) << "\n";
    std::cout << "solve: max principle violations " << mp.violations << "\n";
  }
  write_plot_script(ctx, "plot.gp", ctx.prefix + "_energy.csv",
                    "energy evolution", 1, 3);
  write_manifest(ctx, sc.driver_spec.path.seed);
  return 0;
}

int cmd_ito(RunContext& ctx, long long seed_flag, bool allow_ng) {
  ctx.command = "ito";
  rpde::Scenario sc = scenario_with_overrides(ctx, seed_flag, allow_ng);
  rpde::DifferentialRoughDriver d = rpde::build_driver(sc);
  rpde::ControlledSolution sol = rpde::solve(sc, d);

  const double power = ctx.cfg.get_double("ito.power", 2.0);
  double sup_u = 0.0;
  for (const auto& f : sol.u) sup_u = std::max(sup_u, f.max_norm());
  const double R = ctx.cfg.get_double("ito.trunc_R", 2.0 * sup_u + 1.0);
  rpde::AdmissibleF F = rpde::truncate_power(power, R);
  rpde::WeakFormReport rep = rpde::chain_defect(sol, sc, d, F);
  emit_weakform_csv(ctx, "chain_defect.csv", rep, sol.time);
  write_plot_script(ctx, "chain_plot.gp", ctx.prefix + "_chain_defect.csv",
                    "chain-rule residuals", 2, 4);
  write_manifest(ctx, sc.driver_spec.path.seed);
  std::cout << "ito: slope " << rep.slope << ", max residual "
            << rep.max_residual << ", phi=1 residual "
            << rep.phi1_max_residual << "\n";
  return 0;
}

int cmd_lp(RunContext& ctx, long long seed_flag, bool allow_ng) {
  ctx.command = "lp";
  rpde::Scenario sc = scenario_with_overrides(ctx, seed_flag, allow_ng);
  rpde::DifferentialRoughDriver d = rpde::build_driver(sc);
  rpde::ControlledSolution sol = rpde::solve(sc, d);
  rpde::LpReport rep = rpde::lp_evolution(sol, sc, d, sc.p);
  {
    auto os = open_csv(ctx, "lp.csv");
    os << "t (time),lp_pow (p-th power of the Lp norm)\n";
    for (int k = 0; k < sol.time.size(); ++k)
      os << fmt(sol.time.t(k)) << ","
         << fmt(rep.lp_pow[static_cast<std::size_t>(k)]) << "\n";
  }
  emit_weakform_csv(ctx, "lp_identity.csv", rep.identity, sol.time);
  write_plot_script(ctx, "lp_plot.gp", ctx.prefix + "_lp.csv",
                    "Lp norm evolution", 1, 2);
  write_manifest(ctx, sc.driver_spec.path.seed);
  std::cout << "lp: p=" << sc.p << " slope " << rep.identity.slope
            << (rep.monotone ? " (monotone)" : "") << "\n";
  return 0;
}

int cmd_moser(RunContext& ctx, long long seed_flag, bool allow_ng) {
  ctx.command = "moser";
  rpde::Scenario sc = scenario_with_overrides(ctx, seed_flag, allow_ng);
  rpde::DifferentialRoughDriver d = rpde::build_driver(sc);
  rpde::ControlledSolution sol = rpde::solve(sc, d);
  const double eps = ctx.cfg.get_double("moser.epsilon", 0.5);
  rpde::MoserReport rep = rpde::moser_bound(sol, sc, eps);
  auto os = open_csv(ctx, "moser.csv");
  os << "n (iteration),kappa (moment exponent),phi (moment value),"
     << "sup_seq (extrapolated sup estimate),formula_bound (recursion bound)"
     << "\n";
  for (std::size_t n = 0; n < rep.phi.size(); ++n)
    os << n << "," << fmt(rep.kappa[n]) << "," << fmt(rep.phi[n]) << ","
       << fmt(rep.sup_seq[n]) << "," << fmt(rep.formula_bound[n]) << "\n";
  write_manifest(ctx, sc.driver_spec.path.seed);
  std::cout << "moser: sup estimate " << rep.sup_estimate << "\n";
  return 0;
}

int cmd_wz(RunContext& ctx, long long seed_flag, bool allow_ng) {
  ctx.command = "wz";
  rpde::Scenario sc = scenario_with_overrides(ctx, seed_flag, allow_ng);
  const std::vector<int> levels =
      ctx.cfg.get_int_list("wz.levels", {0, 1, 2, 3});
  auto rows = rpde::wong_zakai_sweep(sc, levels);
  auto os = open_csv(ctx, "wz.csv");
  os << "level (dyadic refinement),rho_to_prev (driver distance),"
     << "sup_diff_to_prev (solution sup difference)\n";
  for (const auto& r : rows)
    os << r.level << "," << fmt(r.rho_to_prev) << ","
       << fmt(r.sup_diff_to_prev) << "\n";
  write_plot_script(ctx, "wz_plot.gp", ctx.prefix + "_wz.csv",
                    "Wong-Zakai convergence", 1, 3);
  write_manifest(ctx, sc.driver_spec.path.seed);
  std::cout << "wz: " << rows.size() << " levels\n";
  return 0;
}

int cmd_dist(RunContext& ctx, const std::string& config_b, long long seed_flag,
             bool allow_ng) {
  ctx.command = "dist";
  rpde::Scenario sa = scenario_with_overrides(ctx, seed_flag, allow_ng);
  rpde::Config cfg_b = rpde::Config::load(config_b);
  if (seed_flag >= 0) cfg_b.set("run.seed", std::to_string(seed_flag));
  if (allow_ng) cfg_b.set("scheme.allow_nongeometric", "true");
  rpde::Scenario sb = rpde::build_scenario(cfg_b);
  rpde::DifferentialRoughDriver da = rpde::build_driver(sa);
  rpde::DifferentialRoughDriver db = rpde::build_driver(sb);
  const double rho = rpde::rho_alpha(da, db, sa.driver_spec.alpha);
  auto os = open_csv(ctx, "dist.csv");
  os << "alpha (variation exponent),rho (driver distance)\n";
  os << fmt(sa.driver_spec.alpha) << "," << fmt(rho) << "\n";
  write_manifest(ctx, sa.driver_spec.path.seed);
  std::cout << "dist: rho_alpha = " << rho << "\n";
  return 0;
}

int cmd_rerun(const std::string& manifest_path, const std::string& out_dir) {
  std::ifstream is(manifest_path);
  if (!is)
    throw rpde::ValidationError("rerun: cannot open " + manifest_path);
  json m = json::parse(is);
  RunContext ctx;
  ctx.cfg = rpde::Config::from_text(m.at("config_text").get<std::string>());
  ctx.config_path = m.value("config_path", "<manifest>");
  ctx.out_dir = out_dir;
  ctx.prefix = ctx.cfg.get("output.prefix", "run");
  const std::string cmd = m.at("command").get<std::string>();
  if (cmd == "lift") return cmd_lift(ctx, -1, false);
  if (cmd == "solve") return cmd_solve(ctx, -1, false);
  if (cmd == "ito") return cmd_ito(ctx, -1, false);
  if (cmd == "lp") return cmd_lp(ctx, -1, false);
  if (cmd == "moser") return cmd_moser(ctx, -1, false);
  if (cmd == "wz") return cmd_wz(ctx, -1, false);
  throw rpde::ValidationError("rerun: manifest command '" + cmd +
                              "' is not re-runnable");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rough parabolic PDE toolkit"};
  app.require_subcommand(1);

  std::string config_path, config_b, out_dir = "out", manifest_path;
  long long seed_flag = -1;
  bool allow_ng = false;
  int workers = 0;

  app.add_option("--seed", seed_flag, "override run.seed");
  app.add_option("--out-dir", out_dir, "output directory");
  app.add_flag("--allow-nongeometric", allow_ng,
               "run non-geometric drivers anyway");
  app.add_option("--workers", workers,
                 "worker threads (default: RPDE_WORKERS or all cores)");

  auto add_cfg = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "scenario config file")
        ->required();
  };
  CLI::App* lift = app.add_subcommand("lift", "build a driver, summarize it");
  add_cfg(lift);
  CLI::App* solve = app.add_subcommand("solve", "run the Davie scheme");
  add_cfg(solve);
  CLI::App* ito = app.add_subcommand("ito", "chain-rule residuals for F(u)");
  add_cfg(ito);
  CLI::App* lp = app.add_subcommand("lp", "Lp-norm evolution identity");
  add_cfg(lp);
  CLI::App* moser = app.add_subcommand("moser", "Moser moment iteration");
  add_cfg(moser);
  CLI::App* wz = app.add_subcommand("wz", "Wong-Zakai refinement sweep");
  add_cfg(wz);
  CLI::App* dist = app.add_subcommand("dist", "driver distance rho_alpha");
  add_cfg(dist);
  dist->add_option("config_b", config_b, "second config")->required();
  CLI::App* rerun = app.add_subcommand("rerun", "re-execute a manifest");
  rerun->add_option("manifest", manifest_path, "manifest json")->required();

  CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
  if (workers > 0) omp_set_num_threads(workers);
  else if (const char* env = std::getenv("RPDE_WORKERS"))
    omp_set_num_threads(std::atoi(env));
#endif

  try {
    if (rerun->parsed()) return cmd_rerun(manifest_path, out_dir);
    RunContext ctx;
    ctx.config_path = config_path;
    ctx.cfg = rpde::Config::load(config_path);
    ctx.out_dir = out_dir;
    ctx.prefix = ctx.cfg.get("output.prefix", "run");
    if (lift->parsed()) return cmd_lift(ctx, seed_flag, allow_ng);
    if (solve->parsed()) return cmd_solve(ctx, seed_flag, allow_ng);
    if (ito->parsed()) return cmd_ito(ctx, seed_flag, allow_ng);
    if (lp->parsed()) return cmd_lp(ctx, seed_flag, allow_ng);
    if (moser->parsed()) return cmd_moser(ctx, seed_flag, allow_ng);
    if (wz->parsed()) return cmd_wz(ctx, seed_flag, allow_ng);
    if (dist->parsed()) return cmd_dist(ctx, config_b, seed_flag, allow_ng);
  } catch (const rpde::GateError& e) {
    std::cerr << "gate: " << e.what() << "\n";
    return 3;
  } catch (const rpde::GuardError& e) {
    std::cerr << "guard: " << e.what() << "\n";
    return 4;
  } catch (const rpde::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
