// Command-line front end: subcommands mirror the run configuration keys;
// values from --config files are overridden by flags.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <vector>

#include "mel/cell.hpp"
#include "mel/runner.hpp"
#include "mel/version.hpp"

namespace {

struct FlagSet {
  std::vector<std::pair<std::string, std::string>> entries;  // key -> raw value

  void add(CLI::App* app, const std::string& flag, const std::string& key,
           const std::string& desc) {
    auto holder = std::make_shared<std::string>();
    app->add_option_function<std::string>(
           flag,
           [this, key, holder](const std::string& v) { entries.emplace_back(key, v); },
           desc)
        ->expected(1);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"magnetoelastic homogenization toolkit"};
  app.set_version_flag("--version", std::string("mel ") + mel::kVersion);
  app.require_subcommand(1);

  struct Common {
    std::string config;
    FlagSet flags;
  };
  std::map<std::string, Common> commons;

  auto add_common = [&](CLI::App* sub) -> Common& {
    Common& c = commons[sub->get_name()];
    sub->add_option("--config", c.config, "configuration file");
    c.flags.add(sub, "--out", "run.out", "output directory");
    c.flags.add(sub, "--threads", "run.threads", "worker pool size (1 = serial)");
    c.flags.add(sub, "--seed", "run.seed", "random seed");
    c.flags.add(sub, "--timing", "run.timing", "true/false: emit wall times (breaks byte determinism)");
    return c;
  };

  {
    CLI::App* sub = app.add_subcommand("cell-solve", "periodic corrector solve");
    Common& c = add_common(sub);
    c.flags.add(sub, "--problem", "cell.problem", "exchange | elastic");
    c.flags.add(sub, "--n", "grid.n", "cell resolution per axis");
    c.flags.add(sub, "--A", "cell.A", "9 comma-separated reals, row major");
    c.flags.add(sub, "--nu", "cell.nu", "3 comma-separated reals");
    c.flags.add(sub, "--tol", "sweep.tol", "CG relative residual tolerance");
    c.flags.add(sub, "--density", "density.name", "D1 | D2");
  }
  {
    CLI::App* sub = app.add_subcommand("stray-field", "magnetostatic potential solve");
    Common& c = add_common(sub);
    c.flags.add(sub, "--m", "stray.m_file", "magnetization field file");
    c.flags.add(sub, "--mask", "stray.mask_file", "scalar mask field file");
    c.flags.add(sub, "--pad", "grid.pad", "padding factor >= 2");
  }
  {
    CLI::App* sub = app.add_subcommand("energy-eval", "evaluate one functional");
    Common& c = add_common(sub);
    c.flags.add(sub, "--functional", "energy.functional", "G | Feps | Fdelta | Glin | Fhom");
    c.flags.add(sub, "--scenario", "sweep.scenario", "S1..S4");
    c.flags.add(sub, "--eps", "sweep.eps", "oscillation period (reciprocal integer)");
    c.flags.add(sub, "--alpha", "sweep.alpha", "scaling exponent");
    c.flags.add(sub, "--delta", "sweep.delta", "independent linearization scale");
    c.flags.add(sub, "--n", "grid.n", "box resolution per axis");
  }
  {
    CLI::App* sub = app.add_subcommand("gamma-sweep", "recovery-sequence energy sweep");
    Common& c = add_common(sub);
    c.flags.add(sub, "--scenario", "sweep.scenario", "S1..S4");
    c.flags.add(sub, "--eps-ladder", "sweep.eps_ladder", "denominators, e.g. 4,8,16,32,64");
    c.flags.add(sub, "--n", "grid.n", "box resolution per axis");
    c.flags.add(sub, "--alpha", "sweep.alpha", "scaling exponent");
    c.flags.add(sub, "--n-cell-ref", "grid.n_cell_ref", "corrector resolution for F_hom");
  }
  {
    CLI::App* sub = app.add_subcommand("commute-check", "sequential vs simultaneous limits");
    Common& c = add_common(sub);
    c.flags.add(sub, "--scenario", "sweep.scenario", "S1..S4");
    c.flags.add(sub, "--eps-ladder", "sweep.eps_ladder", "denominators");
    c.flags.add(sub, "--delta-ladder", "sweep.delta_ladder", "decreasing deltas");
    c.flags.add(sub, "--n", "grid.n", "box resolution per axis");
    c.flags.add(sub, "--alpha", "sweep.alpha", "scaling exponent");
  }
  {
    CLI::App* sub = app.add_subcommand("two-scale", "two-scale pairing checks");
    Common& c = add_common(sub);
    c.flags.add(sub, "--scenario", "sweep.scenario", "S1..S4");
    c.flags.add(sub, "--eps-ladder", "sweep.eps_ladder", "denominators");
    c.flags.add(sub, "--n", "grid.n", "box resolution per axis");
  }
  {
    CLI::App* sub = app.add_subcommand("validate-density", "hypothesis checks H1-H5");
    Common& c = add_common(sub);
    c.flags.add(sub, "--density", "density.name", "D1 | D2");
    c.flags.add(sub, "--samples", "run.samples", "Monte-Carlo sample count");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    CLI::App* sub = app.get_subcommands().front();
    const Common& c = commons[sub->get_name()];

    mel::RunConfig cfg;
    cfg.subcommand = sub->get_name();
    if (!c.config.empty()) mel::apply_config_file(cfg, c.config);
    for (const auto& [key, value] : c.flags.entries)
      mel::apply_config_entry(cfg, key, value, "flag " + key);
    return mel::run(cfg);
  } catch (const mel::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return mel::kExitConfigError;
  } catch (const mel::SolverError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return mel::kExitSolverFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return mel::kExitSolverFailure;
  }
}
