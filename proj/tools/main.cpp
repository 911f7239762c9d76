#include "lqed/scenario.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>
#include <utility>

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::string model;
  bool fast = false;
  bool slow = false;
  std::optional<int> n_modes;
  std::optional<double> window;
  std::optional<int> workers;
  bool emit_plot_script = false;
  bool overlay_closed_form = false;
  bool print_config = false;
};

void add_flags(CLI::App& cmd, Flags& f) {
  cmd.add_option("--config", f.config, "INI-style scenario config")->check(CLI::ExistingFile);
  cmd.add_option("--out", f.out, "output directory");
  cmd.add_option("--model", f.model, "full | effective | single_mode");
  cmd.add_flag("--fast", f.fast, "CI-scale preset, lambda_P = 0.05 Gamma (default)");
  cmd.add_flag("--slow", f.slow, "figure-scale preset, lambda_P = 0.001 Gamma");
  cmd.add_option("--n-modes", f.n_modes, "number of Stokes bath modes");
  cmd.add_option("--window", f.window, "bath half-width W in units of Gamma");
  cmd.add_option("--workers", f.workers, "concurrent sweep entries");
  cmd.add_flag("--emit-plot-script", f.emit_plot_script, "write plot.py next to the CSV files");
  cmd.add_flag("--overlay-closed-form", f.overlay_closed_form, "leaky: append closed-form C1 columns");
  cmd.add_flag("--print-config", f.print_config, "print the resolved settings to stderr");
}

lqed::ScenarioConfig resolve(lqed::Scenario scenario, const Flags& f) {
  using lqed::ConfigError;
  if (f.fast && f.slow) throw ConfigError("--fast and --slow are mutually exclusive");
  lqed::ScenarioConfig c = lqed::default_config(scenario, f.slow ? lqed::Preset::slow : lqed::Preset::fast);
  if (!f.config.empty()) lqed::apply_config_file(c, f.config);
  const bool has_bath = scenario == lqed::Scenario::leaky || scenario == lqed::Scenario::compare;
  if ((f.n_modes || f.window) && !has_bath) throw ConfigError("--n-modes and --window apply to leaky and compare");
  if (!f.out.empty()) c.output.directory = f.out;
  if (!f.model.empty()) c.model = f.model;
  if (f.n_modes) c.bath.n_modes = *f.n_modes;
  if (f.window) c.bath.window = *f.window;
  if (f.workers) c.workers = *f.workers;
  if (f.emit_plot_script) c.output.emit_plot_script = true;
  if (f.overlay_closed_form) c.output.overlay_closed_form = true;
  lqed::validate(c);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two Lambda-type atoms in a cavity: entanglement through Stokes-photon emission"};
  app.set_version_flag("--version", lqed::kVersion);
  app.require_subcommand(1);
  Flags flags;
  const std::pair<const char*, const char*> subcommands[] = {
      {"leaky", "amplitude dynamics with a discretized Stokes continuum"},
      {"damped", "Lindblad dynamics with a damped single Stokes mode"},
      {"compare", "full, effective, closed-form and Laplace-inverted dynamics"},
      {"spectrum", "eigenvalues and dressed states of the single-mode Hamiltonian"},
  };
  for (const auto& [name, description] : subcommands) {
    add_flags(*app.add_subcommand(name, description), flags);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::string name = app.get_subcommands().front()->get_name();
  try {
    const lqed::ScenarioConfig config = resolve(lqed::parse_scenario(name), flags);
    if (flags.print_config) {
      for (const auto& [k, v] : config.echo()) std::cerr << k << " = " << v << '\n';
    }
    const lqed::RunOutcome outcome = lqed::run_scenario(config);
    for (const auto& f : outcome.files) std::cout << f.string() << '\n';
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return lqed::exit_code_for(e);
  }
}
