#pragma once

/// Command-line front end. Each subcommand reads a RunConfig (file values,
/// then flag overrides), calls into the library and writes CSV files.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "tumor/closed_form.hpp"
#include "tumor/diagnostics.hpp"
#include "tumor/errors.hpp"
#include "tumor/io.hpp"
#include "tumor/model.hpp"
#include "tumor/solver_core.hpp"
#include "tumor/stability.hpp"

namespace tumor::cli {

enum ExitCode : int { kOk = 0, kDomain = 1, kConvergence = 2, kUsage = 64 };

struct RunConfig {
  ProblemSelector sel{Dimension::D2, Regime::InVivo};
  ModelParams params;
  double L = 20.0;
  double T = 50.0;
  int M = 100;
  int N = 1000;
  double dt = 0.0;  // 0 means T / N
  std::vector<int> m{8};
  std::vector<int> l{2};
  double eps = 0.0;  // perturbation amplitude of simulate; 0 keeps the IC radial
  double R0 = 1.0;
  std::string out_dir = ".";
  double level = 1e-3;
  int n_angles = 256;
  // scans and root finding
  double rmin = 0.05;
  double rmax = 30.0;
  int n = 200;
  double bracket_lo = 0.1;
  double bracket_hi = 50.0;
  double lambda_lo = 0.5;
  double lambda_hi = 2.0;
  double tol = 1e-8;
  // simulation extras
  int snapshot_every = 100;
  double front_exponent = 1.0;
  Coupling coupling;
  double t_check = 5.0;

  double time_step() const { return dt > 0.0 ? dt : T / N; }
  const std::vector<int>& wavenumbers() const { return sel.dim == Dimension::D2 ? m : l; }

  /// Sets one key from its textual value; unknown keys are rejected.
  void set(const std::string& key, const std::string& v) {
    using io::parse_double;
    using io::parse_int;
    static const std::map<std::string, std::function<void(RunConfig&, const std::string&, const std::string&)>>
        setters = {
            {"dim", [](RunConfig& c, const std::string& k, const std::string& s) {
               const int d = parse_int(k, s);
               if (d != 2 && d != 3) throw io::ConfigError("dim must be 2 or 3");
               c.sel.dim = d == 2 ? Dimension::D2 : Dimension::D3;
             }},
            {"regime", [](RunConfig& c, const std::string&, const std::string& s) {
               if (s == "vitro") c.sel.regime = Regime::InVitro;
               else if (s == "vivo") c.sel.regime = Regime::InVivo;
               else throw io::ConfigError("regime must be 'vitro' or 'vivo'");
             }},
            {"G0", [](RunConfig& c, const std::string& k, const std::string& s) { c.params.G0 = parse_double(k, s); }},
            {"c_B", [](RunConfig& c, const std::string& k, const std::string& s) { c.params.cB = parse_double(k, s); }},
            {"lambda", [](RunConfig& c, const std::string& k, const std::string& s) { c.params.lambda = parse_double(k, s); }},
            {"tau", [](RunConfig& c, const std::string& k, const std::string& s) { c.params.tau = parse_double(k, s); }},
            {"k_pme", [](RunConfig& c, const std::string& k, const std::string& s) { c.params.k_pme = parse_double(k, s); }},
            {"kappa_smooth",
             [](RunConfig& c, const std::string& k, const std::string& s) { c.params.kappa_smooth = parse_double(k, s); }},
            {"L", [](RunConfig& c, const std::string& k, const std::string& s) { c.L = parse_double(k, s); }},
            {"T", [](RunConfig& c, const std::string& k, const std::string& s) { c.T = parse_double(k, s); }},
            {"M", [](RunConfig& c, const std::string& k, const std::string& s) { c.M = parse_int(k, s); }},
            {"N", [](RunConfig& c, const std::string& k, const std::string& s) { c.N = parse_int(k, s); }},
            {"dt", [](RunConfig& c, const std::string& k, const std::string& s) { c.dt = parse_double(k, s); }},
            {"m", [](RunConfig& c, const std::string& k, const std::string& s) { c.m = io::parse_int_list(k, s); }},
            {"l", [](RunConfig& c, const std::string& k, const std::string& s) { c.l = io::parse_int_list(k, s); }},
            {"eps", [](RunConfig& c, const std::string& k, const std::string& s) { c.eps = parse_double(k, s); }},
            {"R0", [](RunConfig& c, const std::string& k, const std::string& s) { c.R0 = parse_double(k, s); }},
            {"out_dir", [](RunConfig& c, const std::string&, const std::string& s) { c.out_dir = s; }},
            {"level", [](RunConfig& c, const std::string& k, const std::string& s) { c.level = parse_double(k, s); }},
            {"n_angles", [](RunConfig& c, const std::string& k, const std::string& s) { c.n_angles = parse_int(k, s); }},
            {"rmin", [](RunConfig& c, const std::string& k, const std::string& s) { c.rmin = parse_double(k, s); }},
            {"rmax", [](RunConfig& c, const std::string& k, const std::string& s) { c.rmax = parse_double(k, s); }},
            {"n", [](RunConfig& c, const std::string& k, const std::string& s) { c.n = parse_int(k, s); }},
            {"bracket_lo", [](RunConfig& c, const std::string& k, const std::string& s) { c.bracket_lo = parse_double(k, s); }},
            {"bracket_hi", [](RunConfig& c, const std::string& k, const std::string& s) { c.bracket_hi = parse_double(k, s); }},
            {"lambda_lo", [](RunConfig& c, const std::string& k, const std::string& s) { c.lambda_lo = parse_double(k, s); }},
            {"lambda_hi", [](RunConfig& c, const std::string& k, const std::string& s) { c.lambda_hi = parse_double(k, s); }},
            {"tol", [](RunConfig& c, const std::string& k, const std::string& s) { c.tol = parse_double(k, s); }},
            {"snapshot_every",
             [](RunConfig& c, const std::string& k, const std::string& s) { c.snapshot_every = parse_int(k, s); }},
            {"front_exponent",
             [](RunConfig& c, const std::string& k, const std::string& s) { c.front_exponent = parse_double(k, s); }},
            {"t_check", [](RunConfig& c, const std::string& k, const std::string& s) { c.t_check = parse_double(k, s); }},
            {"coupling", [](RunConfig& c, const std::string& k, const std::string& s) {
               if (s == "c-then-rho") c.coupling = {CouplingOrder::CThenRho, 1};
               else if (s == "rho-then-c") c.coupling = {CouplingOrder::RhoThenC, 1};
               else if (s.rfind("iterate-pair:", 0) == 0)
                 c.coupling = {CouplingOrder::IteratePair, parse_int(k, s.substr(13))};
               else throw io::ConfigError("coupling must be c-then-rho, rho-then-c or iterate-pair:N");
             }},
        };
    const auto it = setters.find(key);
    if (it == setters.end()) throw io::ConfigError("unknown key '" + key + "'");
    it->second(*this, key, v);
  }

  static const std::vector<std::string>& keys() {
    static const std::vector<std::string> k = {
        "dim",  "regime", "G0",     "c_B",        "lambda",     "tau",       "k_pme",     "kappa_smooth",
        "L",    "T",      "M",      "N",          "dt",         "m",         "l",         "eps",
        "R0",   "out_dir", "level", "n_angles",   "rmin",       "rmax",      "n",         "bracket_lo",
        "bracket_hi", "lambda_lo", "lambda_hi", "tol", "snapshot_every", "front_exponent", "coupling", "t_check"};
    return k;
  }

  void validate() const {
    params.validate();
    if (!(L > 0.0) || !(T >= 0.0) || M < 2 || N < 1) throw DomainError("need L > 0, T >= 0, M >= 2, N >= 1");
    if (!(rmin > 0.0) || !(rmax > rmin) || n < 2) throw DomainError("need 0 < rmin < rmax and n >= 2");
    if (!(R0 > 0.0)) throw DomainError("R0 must be positive");
    if (snapshot_every < 1) throw DomainError("snapshot_every must be >= 1");
    if (coupling.iterations < 1) throw DomainError("coupling iterations must be >= 1");
  }

  SolverConfig solver() const {
    SolverConfig s;
    s.dt = time_step();
    s.params = params;
    s.coupling = coupling;
    return s;
  }
};

inline RunConfig load_config(const std::string& path) {
  RunConfig c;
  for (const auto& [k, v] : io::parse_key_values(io::read_file(path))) c.set(k, v);
  return c;
}

// ---------------------------------------------------------------------------
// subcommands

struct Context {
  RunConfig cfg;
  std::string out_dir;
  bool svg = false;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;

  std::string path(const std::string& name) const { return (std::filesystem::path(out_dir) / name).string(); }
};

inline void maybe_svg(const Context& ctx, const std::string& name, const std::string& title, const std::string& xl,
                      const std::string& yl, const std::vector<io::Series>& s, bool logx = false) {
  if (ctx.svg) io::write_text(ctx.path(name), io::svg_plot(title, xl, yl, s, logx));
}

inline int cmd_speed(const Context& ctx) {
  const auto& c = ctx.cfg;
  const double v = boundary_speed(c.sel, c.params, c.R0);
  *ctx.out << to_string(c.sel) << " dR/dt(R0=" << io::format_double(c.R0) << ") = " << io::format_double(v)
           << "  large-R limit = " << io::format_double(boundary_speed_limit(c.sel, c.params)) << "\n";
  io::Table t{{"R", "dRdt"}, {}};
  io::Series s{"dR/dt", {}, {}};
  for (double R : log_grid(c.rmin, c.rmax, c.n)) {
    double val = std::numeric_limits<double>::quiet_NaN();
    if (std::sqrt(c.params.lambda) * R <= kMaxScaledRadius) val = boundary_speed(c.sel, c.params, R);
    t.rows.push_back({R, val});
    s.x.push_back(R);
    s.y.push_back(val);
  }
  io::write_csv(ctx.path("speed.csv"), t);
  maybe_svg(ctx, "speed.svg", "boundary speed " + to_string(c.sel), "R", "dR/dt", {s}, true);
  if (c.T > 0.0) {
    const auto path = integrate_radius(c.sel, c.params, c.R0, c.T, std::min(c.time_step(), c.T));
    io::Table r{{"t", "R"}, {}};
    io::Series rs{"R(t)", {}, {}};
    for (const auto& p : path) {
      r.rows.push_back({p.t, p.R});
      rs.x.push_back(p.t);
      rs.y.push_back(p.R);
    }
    io::write_csv(ctx.path("radius.csv"), r);
    maybe_svg(ctx, "radius.svg", "radius " + to_string(c.sel), "t", "R", {rs});
  }
  return kOk;
}

inline int cmd_profile(const Context& ctx) {
  const auto& c = ctx.cfg;
  io::Table ct{{"r", "c"}, {}}, pt{{"r", "p"}, {}};
  io::Series cs{"c0", {}, {}}, ps{"p0", {}, {}};
  const double rc = 2.0 * c.R0;
  for (int i = 0; i < c.n; ++i) {
    const double r = rc * i / (c.n - 1);
    const double v = radial_concentration(c.sel, c.params, c.R0, r);
    ct.rows.push_back({r, v});
    cs.x.push_back(r);
    cs.y.push_back(v);
    const double rp = c.R0 * i / (c.n - 1);
    const double p = radial_pressure(c.sel, c.params, c.R0, rp);
    pt.rows.push_back({rp, p});
    ps.x.push_back(rp);
    ps.y.push_back(p);
  }
  io::write_csv(ctx.path("concentration.csv"), ct);
  io::write_csv(ctx.path("pressure.csv"), pt);
  maybe_svg(ctx, "concentration.svg", "nutrient " + to_string(c.sel), "r", "c", {cs});
  maybe_svg(ctx, "pressure.svg", "pressure " + to_string(c.sel), "r", "p", {ps});
  *ctx.out << "wrote concentration.csv and pressure.csv for R0 = " << io::format_double(c.R0) << "\n";
  return kOk;
}

inline int cmd_stability(const Context& ctx) {
  const auto& c = ctx.cfg;
  const auto rows = stability_curve(c.sel, c.params, c.wavenumbers(), log_grid(c.rmin, c.rmax, c.n));
  io::Table t{{"R", "wavenumber", "rate"}, {}};
  std::map<int, io::Series> series;
  std::size_t failures = 0;
  for (const auto& r : rows) {
    t.rows.push_back({r.R, static_cast<double>(r.wavenumber), r.rate});
    auto& s = series[r.wavenumber];
    s.name = (c.sel.dim == Dimension::D2 ? "m=" : "l=") + std::to_string(r.wavenumber);
    s.x.push_back(r.R);
    s.y.push_back(r.rate);
    if (!r.error.empty()) ++failures;
  }
  io::write_csv(ctx.path("stability.csv"), t);
  std::vector<io::Series> list;
  for (auto& [w, s] : series) list.push_back(s);
  maybe_svg(ctx, "stability.svg", "evolution function " + to_string(c.sel), "R", "rate", list, true);
  *ctx.out << "wrote " << rows.size() << " rows to stability.csv";
  if (failures) *ctx.out << " (" << failures << " points failed and are NaN)";
  *ctx.out << "\n";
  return kOk;
}

inline int cmd_threshold(const Context& ctx) {
  const auto& c = ctx.cfg;
  io::Table t{{"wavenumber", "R_star"}, {}};
  int missing = 0;
  for (int w : c.wavenumbers()) {
    ThresholdQuery q{c.sel, w, {c.bracket_lo, c.bracket_hi}, c.tol};
    try {
      const double R = threshold_radius(q, c.params);
      t.rows.push_back({static_cast<double>(w), R});
      *ctx.out << "wavenumber " << w << ": R* = " << io::format_double(R) << "\n";
    } catch (const NoSignChangeError&) {
      ++missing;
      t.rows.push_back({static_cast<double>(w), std::numeric_limits<double>::quiet_NaN()});
      *ctx.err << "wavenumber " << w << ": no sign change on [" << io::format_double(c.bracket_lo) << ", "
               << io::format_double(c.bracket_hi) << "]\n";
    }
  }
  io::write_csv(ctx.path("threshold.csv"), t);
  return missing ? kDomain : kOk;
}

inline int cmd_lambda_star(const Context& ctx) {
  const auto& c = ctx.cfg;
  if (c.sel.dim != Dimension::D3 || c.sel.regime != Regime::InVivo)
    throw DomainError("lambda-star is defined for dim = 3, regime = vivo");
  io::Table t{{"l", "lambda_star"}, {}};
  int missing = 0;
  for (int l : c.l) {
    try {
      const double ls = lambda_star(l, c.params, {c.rmin, c.rmax, c.n}, {c.lambda_lo, c.lambda_hi}, c.tol);
      t.rows.push_back({static_cast<double>(l), ls});
      *ctx.out << "l = " << l << ": lambda* = " << io::format_double(ls) << "\n";
    } catch (const NoSignChangeError&) {
      ++missing;
      t.rows.push_back({static_cast<double>(l), std::numeric_limits<double>::quiet_NaN()});
      *ctx.err << "l = " << l << ": no stability change for lambda in [" << io::format_double(c.lambda_lo) << ", "
               << io::format_double(c.lambda_hi) << "]\n";
    }
  }
  io::write_csv(ctx.path("lambda_star.csv"), t);
  return missing ? kDomain : kOk;
}

inline int cmd_simulate(const Context& ctx) {
  const auto& c = ctx.cfg;
  const auto grid = Grid2D::centered_square(c.M + 1, c.L);
  const auto scfg = c.solver();
  const double k = c.params.k_pme;
  SimState ic{barenblatt_ic(k, grid), Field2D(grid, c.params.cB), 0.0};
  if (c.eps > 0.0) {
    auto p = perturbed_ic([k](double r) { return barenblatt_profile(k, r, 0.0); }, barenblatt_edge(k), c.m.front(),
                          c.eps, grid);
    if (p.linear_theory_warning) *ctx.err << "warning: eps / R0 > 0.2, linear theory does not apply\n";
    ic.rho = std::move(p.field);
  }
  TraceOptions opt;
  opt.level_fraction = c.level;
  opt.n_angles = c.n_angles;
  opt.modes = c.m;
  opt.front_exponent = c.front_exponent;
  BoundaryTrace trace;
  std::size_t index = 0;
  bool lost_front = false;
  auto observer = [&](const SimState& s) {
    char name[32];
    std::snprintf(name, sizeof name, "field_%05zu.csv", index++);
    io::write_csv(ctx.path(name), io::field_table(s, grid));
    try {
      record_snapshot(trace, s, grid, opt);
    } catch (const NoSignChangeError&) {
      lost_front = true;
      return false;
    }
    return true;
  };
  const auto traj = run_simulation(scfg, grid, ic, c.T, static_cast<std::size_t>(c.snapshot_every), observer, false);
  std::vector<double> analytic;
  if (!trace.times.empty()) {
    try {
      analytic = compare_radius(trace, {Dimension::D2, c.sel.regime}, c.params).analytic;
    } catch (const std::exception& e) {
      *ctx.err << "analytic radius unavailable: " << e.what() << "\n";
    }
  }
  io::write_csv(ctx.path("trace.csv"), io::trace_table(trace, analytic));
  io::Table steps{{"step", "t", "rho_iterations", "c_iterations", "rho_residual", "c_residual", "min_rho"}, {}};
  for (const auto& r : traj.records)
    steps.rows.push_back({static_cast<double>(r.step), r.t, static_cast<double>(r.rho_iterations),
                          static_cast<double>(r.c_iterations), r.rho_residual, r.c_residual, r.min_rho});
  io::write_csv(ctx.path("steps.csv"), steps);
  if (ctx.svg && !trace.times.empty()) {
    std::vector<io::Series> rs{{"numeric", trace.times, trace.radius_mean}};
    if (analytic.size() == trace.times.size()) rs.push_back({"analytic", trace.times, analytic});
    maybe_svg(ctx, "radius.svg", "front radius", "t", "R", rs);
    std::vector<io::Series> ds;
    for (const auto& [m, v] : trace.mode_amplitudes) ds.push_back({"delta_" + std::to_string(m), trace.times, v});
    maybe_svg(ctx, "modes.svg", "mode amplitudes", "t", "delta", ds);
  }
  *ctx.out << "simulated " << traj.records.size() << " steps, " << index << " snapshots";
  if (lost_front) *ctx.out << " (stopped: front reached the domain edge)";
  *ctx.out << "\n";
  return kOk;
}

/// pme-axisym: decay exponent of max rho for pure PME on the radial solver.
/// adi-axisym: ADI and radial solvers agree along an axis at t_check.
inline int cmd_validate(const Context& ctx, const std::string& which) {
  const auto& c = ctx.cfg;
  const double k = c.params.k_pme;
  if (which == "pme-axisym") {
    SolverConfig s = c.solver();
    s.params.G0 = 0.0;
    s.solve_nutrient = false;
    s.diffusion_coefficient = 1.0;
    auto st = make_axisym_state(0.5 * c.L, c.M / 2, [k](double r) { return barenblatt_profile(k, r, 0.0); }, 0.0);
    io::Table t{{"t", "max_rho", "exact"}, {}};
    std::vector<double> ts, mx;
    const std::size_t steps = step_count(c.T, s.dt);
    for (std::size_t i = 1; i <= steps; ++i) {
      st = step_axisym(st, s);
      st.t = static_cast<double>(i) * s.dt;
      const double peak = *std::max_element(st.rho.begin(), st.rho.end());
      t.rows.push_back({st.t, peak, barenblatt_profile(k, 0.0, st.t)});
      if (st.t >= 1.0 - 1e-12) {
        ts.push_back(st.t);
        mx.push_back(peak);
      }
    }
    io::write_csv(ctx.path("decay.csv"), t);
    const double slope = fit_decay_exponent(ts, mx);
    const double expect = -1.0 / (k + 1.0);
    const bool pass = std::abs(slope - expect) <= 0.03;
    *ctx.out << "decay slope " << io::format_double(slope) << " vs " << io::format_double(expect) << " +/- 0.03: "
             << (pass ? "PASS" : "FAIL") << "\n";
    return pass ? kOk : kDomain;
  }
  if (which == "adi-axisym") {
    if (c.M % 2 != 0) throw DomainError("adi-axisym needs even M so the centre is a grid node");
    const auto grid = Grid2D::centered_square(c.M + 1, c.L);
    const auto s = c.solver();
    SimState st{barenblatt_ic(k, grid), Field2D(grid, c.params.cB), 0.0};
    auto ax = make_axisym_state(0.5 * c.L, c.M / 2, [k](double r) { return barenblatt_profile(k, r, 0.0); },
                                c.params.cB);
    const std::size_t steps = step_count(c.t_check, s.dt);
    for (std::size_t i = 0; i < steps; ++i) {
      st = step_adi(st, grid, s);
      ax = step_axisym(ax, s);
    }
    const int mid = c.M / 2;
    io::Table t{{"r", "rho_adi", "rho_axisym"}, {}};
    double peak = 0.0, err = 0.0;
    for (int i = mid; i < grid.nx; ++i) {
      const double a = st.rho(i, mid), b = ax.rho[static_cast<std::size_t>(i - mid)];
      t.rows.push_back({ax.r[static_cast<std::size_t>(i - mid)], a, b});
      peak = std::max(peak, b);
      err = std::max(err, std::abs(a - b));
    }
    io::write_csv(ctx.path("adi_vs_axisym.csv"), t);
    const bool pass = err <= 0.02 * peak;
    *ctx.out << "max |ADI - axisym| / peak = " << io::format_double(err / peak) << " (limit 0.02): "
             << (pass ? "PASS" : "FAIL") << "\n";
    return pass ? kOk : kDomain;
  }
  throw io::ConfigError("unknown validation '" + which + "' (pme-axisym, adi-axisym)");
}

// ---------------------------------------------------------------------------

/// Parses argv, dispatches, and maps errors to exit codes.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"free-boundary tumour growth: closed forms, stability and simulation"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path, out_dir;
  bool svg = false;
  app.add_option("--config", config_path, "flat key = value configuration file");
  app.add_option("--out", out_dir, "output directory (overrides out_dir)");
  app.add_flag("--svg", svg, "also write SVG line plots");

  std::map<std::string, std::string> overrides;
  std::vector<double> bracket;
  std::string validation;
  auto add_keys = [&](CLI::App* sub) {
    for (const auto& key : RunConfig::keys()) {
      if (key == "out_dir") continue;
      sub->add_option_function<std::string>("--" + key, [&overrides, key](const std::string& v) { overrides[key] = v; },
                                            "config key " + key);
    }
    sub->add_option("--bracket", bracket, "root bracket: lo hi")->expected(2);
  };
  const std::vector<std::pair<std::string, std::string>> subs = {
      {"speed", "boundary speed dR/dt and integrated R(t)"},
      {"profile", "unperturbed nutrient and pressure profiles"},
      {"stability", "evolution function over a radius scan"},
      {"threshold", "radius where the evolution function changes sign"},
      {"lambda-star", "critical consumption rate for 3D in-vivo fronts"},
      {"simulate", "2D ADI simulation with front diagnostics"},
      {"validate", "solver validations: pme-axisym, adi-axisym"}};
  std::map<std::string, CLI::App*> handles;
  for (const auto& [name, help] : subs) {
    auto* sub = app.add_subcommand(name, help);
    add_keys(sub);
    handles[name] = sub;
  }
  handles["validate"]->add_option("name", validation, "pme-axisym or adi-axisym")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kUsage;
  }

  try {
    Context ctx;
    ctx.cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    for (const auto& [k, v] : overrides) ctx.cfg.set(k, v);
    if (!bracket.empty()) {
      ctx.cfg.bracket_lo = bracket[0];
      ctx.cfg.bracket_hi = bracket[1];
    }
    ctx.cfg.validate();
    ctx.out_dir = out_dir.empty() ? ctx.cfg.out_dir : out_dir;
    ctx.svg = svg;
    ctx.out = &out;
    ctx.err = &err;
    std::filesystem::create_directories(ctx.out_dir);
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "speed") return cmd_speed(ctx);
    if (name == "profile") return cmd_profile(ctx);
    if (name == "stability") return cmd_stability(ctx);
    if (name == "threshold") return cmd_threshold(ctx);
    if (name == "lambda-star") return cmd_lambda_star(ctx);
    if (name == "simulate") return cmd_simulate(ctx);
    return cmd_validate(ctx, validation);
  } catch (const io::ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConvergenceError& e) {
    err << "convergence failure: " << e.what() << " (last residual " << io::format_double(e.last_residual()) << ")\n";
    return kConvergence;
  } catch (const ZeroPivotError& e) {
    err << "convergence failure: " << e.what() << "\n";
    return kConvergence;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kDomain;
  }
}

}  // namespace tumor::cli
