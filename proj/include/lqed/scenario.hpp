#pragma once

#include "lqed/analytic.hpp"
#include "lqed/observables.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lqed {

inline constexpr const char* kVersion = "0.1.0";

enum class Scenario { leaky, damped, compare, spectrum };
std::string to_string(Scenario s);
Scenario parse_scenario(const std::string& s);

/// Parameter presets: `fast` is the CI scale (lambda_P = 0.05 Gamma), `slow`
/// the long-horizon values (lambda_P = 0.001 Gamma). Only leaky and compare differ.
enum class Preset { fast, slow };

struct BathSettings {
  double gamma = 1.0;
  std::optional<double> window;  ///< unset: 3 Gamma + |delta_P|
  std::optional<int> n_modes;    ///< unset: smallest odd count whose recurrence time covers the horizon
  BathProfile profile = BathProfile::flat;
  std::optional<double> lorentz_width;
  bool recurrence_guard = true;
};

struct GridSettings {
  std::optional<double> t_max;          ///< unset: derived from the analytic decay rates
  std::optional<std::size_t> n_samples; ///< unset: scenario default
};

struct SweepSettings {
  std::string parameter;  ///< empty: single run
  std::vector<double> values;
};

struct OutputSettings {
  std::filesystem::path directory = "out";
  std::vector<std::string> formats{"csv"};
  bool overlay_closed_form = false;
  bool emit_plot_script = false;
};

struct ScenarioConfig {
  Scenario scenario = Scenario::leaky;
  Preset preset = Preset::fast;
  std::string model = "full";  ///< full | effective | single_mode
  ModelConfig physics;
  BathSettings bath;
  GridSettings grid;
  Tolerances tolerances;
  SweepSettings sweep;
  OutputSettings output;
  InverseLaplaceOptions laplace;
  StairsOptions stairs;
  /// Photon loss rate of the effective model in the compare scenario; Gamma when unset.
  std::optional<double> kappa_eff;
  int workers = 1;

  /// Resolved settings as (section.key, value) pairs, in a fixed order.
  [[nodiscard]] std::vector<std::pair<std::string, std::string>> echo() const;
};

/// Scenario defaults before any config file or flag is applied.
ScenarioConfig default_config(Scenario scenario, Preset preset);

/// Applies an INI-style config: [section] headers and key = value lines.
/// Unknown sections or keys, duplicates and malformed values raise ConfigError.
void apply_config(ScenarioConfig& config, std::istream& in);
void apply_config_file(ScenarioConfig& config, const std::filesystem::path& path);

/// Checks every precondition that can be checked without simulating.
void validate(const ScenarioConfig& config);

/// Everything a single sweep entry needs, fixed before any file is written.
struct RunPlan {
  std::string label;     ///< file stem
  std::string parameter; ///< swept parameter or empty
  double value = 0.0;
  ModelConfig physics;
  BathSpec bath;
  std::vector<double> grid;
  std::string horizon_source;  ///< how t_max was chosen
  std::vector<std::string> notes;  ///< defaults filled in while planning
};

/// Resolves sweeps, baths and grids. Raises ConfigError before anything is simulated.
std::vector<RunPlan> plan_runs(const ScenarioConfig& config);

/// Period of the fastest coherent oscillation of the scenario's model.
double rabi_period(const ScenarioConfig& config, const ModelConfig& physics);

/// Files written by a run, in creation order.
struct RunOutcome {
  std::vector<std::filesystem::path> files;
  std::string metadata;  ///< JSON text
};

/// Runs the scenario. Output files are removed again if anything throws.
RunOutcome run_scenario(const ScenarioConfig& config);

/// CLI exit code for an exception thrown by run_scenario: 2 config, 3 numerical, 4 invariant.
int exit_code_for(const std::exception& e);

/// Formats a double with 17 significant digits in the C locale.
std::string format_double(double v);

}  // namespace lqed
