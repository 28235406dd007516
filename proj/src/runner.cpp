#include "mel/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mel/experiments.hpp"
#include "mel/field_io.hpp"
#include "mel/parallel.hpp"
#include "mel/version.hpp"

namespace mel {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '"') c = ';';
  return s;
}

class Csv {
 public:
  Csv(const std::filesystem::path& path, const std::vector<std::string>& header)
      : os_(path) {
    if (!os_) throw std::runtime_error("cannot open output file " + path.string());
    for (std::size_t i = 0; i < header.size(); ++i)
      os_ << (i ? "," : "") << header[i];
    os_ << "\n";
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
    os_ << "\n";
  }

 private:
  std::ofstream os_;
};

class Stopwatch {
 public:
  explicit Stopwatch(bool enabled) : enabled_(enabled), t0_(clock::now()) {}
  // Timing is opt-in so that default CSV outputs stay byte-identical between
  // runs; the reported value is 0 when disabled.
  double seconds() const {
    if (!enabled_) return 0.0;
    return std::chrono::duration<double>(clock::now() - t0_).count();
  }

 private:
  using clock = std::chrono::steady_clock;
  bool enabled_;
  clock::time_point t0_;
};

DensitySpec density_from_config(const RunConfig& cfg) {
  if (cfg.density == "D1")
    return reference_density_D1(cfg.c_layout, cfg.p, cfg.s, cfg.mu0, cfg.a_layout);
  return reference_density_D2(cfg.c_layout, cfg.kappa_layout, cfg.p, cfg.s, cfg.mu0,
                              cfg.a_layout);
}

struct RunContext {
  std::filesystem::path out;
  ordered_json summary;
  std::map<std::string, bool> checks;

  void check(const std::string& name, bool pass) { checks[name] = pass; }
  bool all_pass() const {
    for (const auto& [k, v] : checks)
      if (!v) return false;
    return true;
  }
};

SweepOptions sweep_options(const RunConfig& cfg) {
  SweepOptions opt;
  opt.n_cell_ref = cfg.n_cell_ref;
  opt.pad_factor = cfg.pad;
  opt.cell.tol = cfg.tol;
  return opt;
}

ordered_json breakdown_json(const EnergyBreakdown& e) {
  return ordered_json{{"tag", e.tag},
                      {"elastic", e.elastic},
                      {"exchange", e.exchange},
                      {"magnetostatic", e.magnetostatic},
                      {"total", e.total}};
}

int run_cell_solve(const RunConfig& cfg, RunContext& ctx) {
  const DensitySpec spec = density_from_config(cfg);
  CellSolveOptions opt;
  opt.tol = cfg.tol;
  Stopwatch sw(cfg.timing);

  CorrectorSolution sol =
      cfg.problem == "exchange"
          ? solve_exchange_cell(sample_on_cell(spec.a, cfg.n), cfg.A, opt)
          : solve_elastic_cell(spec, cfg.n, cfg.A, cfg.nu.normalized(), opt);

  std::vector<std::string> header = {"problem", "n"};
  for (int i = 1; i <= 3; ++i)
    for (int j = 1; j <= 3; ++j)
      header.push_back("A" + std::to_string(i) + std::to_string(j));
  for (const char* c : {"nu1", "nu2", "nu3", "value", "residual", "iterations",
                        "wall_time_s"})
    header.push_back(c);
  Csv csv(ctx.out / "cell-solve.csv", header);
  std::vector<std::string> row = {cfg.problem, std::to_string(cfg.n)};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) row.push_back(fmt(cfg.A(i, j)));
  for (int d = 0; d < 3; ++d) row.push_back(fmt(cfg.nu[d]));
  row.push_back(fmt(sol.value));
  row.push_back(fmt(sol.residual));
  row.push_back(std::to_string(sol.iterations));
  row.push_back(fmt(sw.seconds()));
  csv.row(row);

  ctx.summary["result"] = {{"value", sol.value},
                           {"residual", sol.residual},
                           {"iterations", sol.iterations}};
  ctx.check("solver_converged", sol.residual <= cfg.tol);
  return ctx.all_pass() ? kExitOk : kExitCheckFailure;
}

int run_stray_field(const RunConfig& cfg, RunContext& ctx) {
  Field m = read_field(cfg.m_file);
  if (m.rank() != Rank::vector3 || !m.box_grid())
    throw ConfigError("stray-field: m_file must hold a vector3 box-grid field");
  if (!cfg.mask_file.empty()) {
    const Field mask_f = read_field(cfg.mask_file);
    if (!mask_f.box_grid() || mask_f.rank() != Rank::scalar)
      throw ConfigError("stray-field: mask_file must hold a scalar box-grid field");
    std::vector<std::uint8_t> in(std::size_t(mask_f.points()), 0);
    for (std::int64_t p = 0; p < mask_f.points(); ++p)
      in[std::size_t(p)] = mask_f.at(p, 0) != 0.0;
    m = extend_by_zero(m, DomainMask(*mask_f.box_grid(), std::move(in)));
  }

  Stopwatch sw(cfg.timing);
  StrayFieldOptions opt;
  opt.mu0 = cfg.mu0;
  opt.pad_factor = cfg.pad;
  const StrayFieldSolution sol = solve_stray_field(m, opt);

  double linf = 0.0;
  for (std::int64_t p = 0; p < sol.grad_psi->points(); ++p)
    linf = std::max(linf, sol.grad_psi->vec3_at(p).norm());

  const auto& n = m.box_grid()->n;
  const std::string grid = std::to_string(n[0]) + "x" + std::to_string(n[1]) + "x" +
                           std::to_string(n[2]);
  Csv csv(ctx.out / "stray-field.csv",
          {"grid", "pad", "energy", "linf_interior_field", "wall_time_s"});
  csv.row({grid, fmt(cfg.pad), fmt(sol.energy), fmt(linf), fmt(sw.seconds())});

  ctx.summary["result"] = {{"energy", sol.energy},
                           {"linf_interior_field", linf},
                           {"source_l2sq", sol.source_l2sq}};
  ctx.check("stability_bound", sol.stability_ok);
  return ctx.all_pass() ? kExitOk : kExitCheckFailure;
}

int run_energy_eval(const RunConfig& cfg, RunContext& ctx) {
  const Scenario sc = make_scenario(cfg.scenario);
  const BoxGrid box = scenario_box(cfg.n);
  const DomainMask mask = scenario_mask(cfg.n);
  const SweepOptions opt = sweep_options(cfg);
  const StrayEval stray{cfg.pad};
  const PointSampler macro = [&sc](int, int, int, std::int64_t, const Vec3& x) -> PointData {
    return {sc.grad_u(x), sc.m(x), sc.grad_m(x)};
  };

  Stopwatch sw(cfg.timing);
  EnergyBreakdown e;
  double scale = std::pow(cfg.eps, cfg.alpha);
  if (cfg.functional == "Glin") {
    e = linearized_energy_stream(box, mask, sc.density, cfg.eps, macro, stray);
  } else if (cfg.functional == "Fhom") {
    e = homogenized_reference(sc, cfg.n, opt);
  } else if (cfg.functional == "Fdelta") {
    scale = cfg.delta;
    e = rescaled_energy_stream(box, mask, sc.density, cfg.eps, scale, macro, stray,
                               "Fdelta");
  } else if (cfg.functional == "Feps") {
    e = rescaled_energy_stream(box, mask, sc.density, cfg.eps, scale, macro, stray);
  } else {  // G: stored energy, elastic term unrescaled
    e = rescaled_energy_stream(box, mask, sc.density, cfg.eps, scale, macro, stray,
                               "Feps");
    e.tag = "G";
    if (std::isfinite(e.elastic)) e.elastic *= scale * scale;
    e.finish();
  }

  const Mat3 gw = Mat3::Identity() + scale * sc.A;
  const bool admissible = gw.determinant() > 0.0 && operator_norm(scale * sc.A) < 0.9;

  Csv csv(ctx.out / "energy-eval.csv",
          {"functional", "scenario", "eps", "alpha", "delta", "n", "elastic", "exchange",
           "magnetostatic", "total", "admissible", "wall_time_s"});
  csv.row({cfg.functional, cfg.scenario, fmt(cfg.eps), fmt(cfg.alpha), fmt(cfg.delta),
           std::to_string(cfg.n), fmt(e.elastic), fmt(e.exchange), fmt(e.magnetostatic),
           fmt(e.total), admissible ? "1" : "0", fmt(sw.seconds())});

  ctx.summary["result"] = breakdown_json(e);
  ctx.check("finite_energy", std::isfinite(e.total));
  if (cfg.functional == "G" || cfg.functional == "Feps" || cfg.functional == "Fdelta")
    ctx.check("admissible", admissible);
  return ctx.all_pass() ? kExitOk : kExitCheckFailure;
}

void sweep_rows_csv(Csv& csv, const std::string& scenario, double alpha, int n,
                    const std::string& path, const std::vector<SweepRow>& rows,
                    double wall) {
  for (const SweepRow& r : rows)
    csv.row({path, scenario, fmt(alpha), std::to_string(n), fmt(r.param),
             fmt(r.energy.elastic), fmt(r.energy.exchange), fmt(r.energy.magnetostatic),
             fmt(r.energy.total), fmt(r.reference), fmt(r.gap), r.admissible ? "1" : "0",
             r.liminf_ok ? "1" : "0", fmt(wall)});
}

ordered_json sweep_json(const SweepResult& res) {
  return ordered_json{{"slope", res.slope},
                      {"intercept", res.intercept},
                      {"extrapolated", res.extrapolated},
                      {"reference", res.reference},
                      {"monotone_gap", res.monotone_gap}};
}

int run_gamma_sweep(const RunConfig& cfg, RunContext& ctx) {
  const Scenario sc = make_scenario(cfg.scenario);
  Stopwatch sw(cfg.timing);
  const SweepResult res =
      gamma_sweep(sc, cfg.eps_ladder, cfg.alpha, cfg.n, sweep_options(cfg));

  Csv csv(ctx.out / "gamma-sweep.csv",
          {"path", "scenario", "alpha", "n", "eps", "elastic", "exchange",
           "magnetostatic", "total", "reference", "gap", "admissible", "liminf_ok",
           "wall_time_s"});
  sweep_rows_csv(csv, cfg.scenario, cfg.alpha, cfg.n, "A", res.rows, sw.seconds());

  ctx.summary["sweep"] = sweep_json(res);

  bool all_admissible = true, all_liminf = true, collapse = true;
  for (const SweepRow& r : res.rows) {
    all_admissible = all_admissible && r.admissible;
    all_liminf = all_liminf && r.liminf_ok;
    collapse = collapse && r.gap < 1e-3 * std::abs(res.reference);
  }
  ctx.check("all_admissible", all_admissible);
  ctx.check("liminf_sanity", all_liminf);
  ctx.check("gap_monotone_or_collapsed", collapse || res.monotone_gap);
  ctx.check("limit_within_2pct",
            std::abs(res.extrapolated - res.reference) <= 0.02 * std::abs(res.reference));
  return ctx.all_pass() ? kExitOk : kExitCheckFailure;
}

int run_commute_check(const RunConfig& cfg, RunContext& ctx) {
  const Scenario sc = make_scenario(cfg.scenario);
  Stopwatch sw(cfg.timing);
  const CommuteReport rep = commute_check(sc, cfg.eps_ladder, cfg.delta_ladder,
                                          cfg.alpha, cfg.n, sweep_options(cfg));

  Csv csv(ctx.out / "commute-check.csv",
          {"path", "scenario", "alpha", "n", "param", "elastic", "exchange",
           "magnetostatic", "total", "reference", "gap", "admissible", "liminf_ok",
           "wall_time_s"});
  sweep_rows_csv(csv, cfg.scenario, cfg.alpha, cfg.n, "A", rep.path_a.rows, sw.seconds());
  for (const DeltaLegRow& r : rep.delta_leg.rows)
    csv.row({"delta", cfg.scenario, fmt(cfg.alpha), std::to_string(cfg.n), fmt(r.delta),
             fmt(r.energy.elastic), fmt(r.energy.exchange), fmt(r.energy.magnetostatic),
             fmt(r.energy.total), fmt(rep.delta_leg.lin.total), fmt(r.gap_rel), "1", "1",
             fmt(sw.seconds())});
  sweep_rows_csv(csv, cfg.scenario, cfg.alpha, cfg.n, "B", rep.path_b.rows, sw.seconds());

  ctx.summary["commute"] = {
      {"value_a", rep.value_a},       {"value_b", rep.value_b},
      {"reference", rep.reference},   {"rel_ab", rep.rel_ab},
      {"rel_a_ref", rep.rel_a_ref},   {"rel_b_ref", rep.rel_b_ref},
      {"path_a", sweep_json(rep.path_a)}, {"path_b", sweep_json(rep.path_b)},
      {"lin", breakdown_json(rep.delta_leg.lin)}};

  ctx.check("delta_leg_monotone", rep.delta_leg.monotone);
  ctx.check("delta_leg_final_below_1pct",
            !rep.delta_leg.rows.empty() && rep.delta_leg.rows.back().gap_rel < 0.01);
  ctx.check("paths_agree_1pct", rep.rel_ab < 0.01);
  ctx.check("path_a_within_2pct", rep.rel_a_ref <= 0.02);
  ctx.check("path_b_within_2pct", rep.rel_b_ref <= 0.02);
  return ctx.all_pass() ? kExitOk : kExitCheckFailure;
}

int run_two_scale(const RunConfig& cfg, RunContext& ctx) {
  Stopwatch sw(cfg.timing);

  // Case 1: mean-zero oscillation against a slow test (Riemann-Lebesgue).
  auto g1 = [](const Vec3& y) { return std::cos(2.0 * std::numbers::pi * y[0]); };
  // Slow factor with curvature: affine tests pair to exactly zero on
  // commensurate lattices, which would make the decay ratio meaningless.
  auto f1 = [](const Vec3& x) { return std::exp(x[0]) * (1.0 + 0.5 * x[1]); };
  const TwoScaleCheck rl = two_scale_pairing(
      "riemann-lebesgue", [&](double eps, const Vec3& x) { return g1(x / eps); }, f1,
      [](const Vec3&) { return 1.0; },
      [&](const Vec3&, const Vec3& y) { return g1(y); }, cfg.eps_ladder, cfg.n);

  // Case 2: product family against the matching separable test; the limit
  // pairing has the closed form int f^2 * int_Y g^2 = int f^2 / 2.
  const TwoScaleCheck prod = two_scale_pairing(
      "product", [&](double eps, const Vec3& x) { return f1(x) * g1(x / eps); }, f1, g1,
      [&](const Vec3& x, const Vec3& y) { return f1(x) * g1(y); }, cfg.eps_ladder, cfg.n);

  Csv csv(ctx.out / "two-scale.csv",
          {"test", "eps", "lhs", "rhs", "gap", "wall_time_s"});
  for (const TwoScaleCheck* c : {&rl, &prod})
    for (std::size_t i = 0; i < c->eps.size(); ++i)
      csv.row({c->test_id, fmt(c->eps[i]), fmt(c->lhs[i]), fmt(c->rhs), fmt(c->gap[i]),
               fmt(sw.seconds())});

  ctx.summary["riemann_lebesgue"] = {{"lhs_coarsest", rl.lhs.front()},
                                     {"lhs_finest", rl.lhs.back()}};
  ctx.summary["product"] = {{"lhs_finest", prod.lhs.back()}, {"rhs", prod.rhs}};

  ctx.check("riemann_lebesgue_decay",
            std::abs(rl.lhs.back()) < 0.05 * std::abs(rl.lhs.front()));
  ctx.check("product_matches_limit",
            std::abs(prod.lhs.back() - prod.rhs) <= 0.01 * std::abs(prod.rhs));
  return ctx.all_pass() ? kExitOk : kExitCheckFailure;
}

int run_validate_density(const RunConfig& cfg, RunContext& ctx) {
  const DensitySpec spec = density_from_config(cfg);
  Stopwatch sw(cfg.timing);
  const HypothesisReport rep = validate_hypotheses(spec, cfg.samples, cfg.seed);

  Csv csv(ctx.out / "validate-density.csv",
          {"check", "pass", "worst", "tolerance", "samples", "witness", "wall_time_s"});
  ordered_json checks = ordered_json::array();
  for (const HypothesisCheck& c : rep.checks) {
    csv.row({sanitize(c.name), c.pass ? "1" : "0", fmt(c.worst), fmt(c.tolerance),
             std::to_string(c.samples), sanitize(c.pass ? "" : c.witness),
             fmt(sw.seconds())});
    checks.push_back({{"name", c.name}, {"pass", c.pass}, {"worst", c.worst}});
    ctx.check(c.name, c.pass);
  }
  ctx.summary["hypotheses"] = checks;
  return ctx.all_pass() ? kExitOk : kExitCheckFailure;
}

}  // namespace

int run(const RunConfig& cfg) {
  cfg.validate();
  par::set_thread_count(cfg.threads);

  RunContext ctx;
  ctx.out = cfg.out_dir;
  std::filesystem::create_directories(ctx.out);

  ctx.summary["toolkit"] = "mel";
  ctx.summary["version"] = kVersion;
  ctx.summary["subcommand"] = cfg.subcommand;
  {
    std::ostringstream os;
    os << std::hex << cfg.hash();
    ctx.summary["config_hash"] = os.str();
  }
  {
    ordered_json echo = ordered_json::array();
    std::istringstream is(cfg.canonical_text());
    std::string line;
    while (std::getline(is, line)) echo.push_back(line);
    ctx.summary["config"] = echo;
  }

  Stopwatch total(cfg.timing);
  int code = kExitOk;
  if (cfg.subcommand == "cell-solve")
    code = run_cell_solve(cfg, ctx);
  else if (cfg.subcommand == "stray-field")
    code = run_stray_field(cfg, ctx);
  else if (cfg.subcommand == "energy-eval")
    code = run_energy_eval(cfg, ctx);
  else if (cfg.subcommand == "gamma-sweep")
    code = run_gamma_sweep(cfg, ctx);
  else if (cfg.subcommand == "commute-check")
    code = run_commute_check(cfg, ctx);
  else if (cfg.subcommand == "two-scale")
    code = run_two_scale(cfg, ctx);
  else if (cfg.subcommand == "validate-density")
    code = run_validate_density(cfg, ctx);
  else
    throw ConfigError("unknown subcommand " + cfg.subcommand);

  ordered_json checks;
  for (const auto& [name, pass] : ctx.checks) checks[name] = pass;
  ctx.summary["checks"] = checks;
  ctx.summary["all_checks_pass"] = ctx.all_pass();
  ctx.summary["wall_time_s"] = total.seconds();

  std::ofstream os(ctx.out / "summary.json");
  os << ctx.summary.dump(2) << "\n";
  return code;
}

}  // namespace mel
