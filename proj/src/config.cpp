#include "lqed/scenario.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace lqed {

namespace {

double parse_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end || !std::isfinite(v)) {
    throw ConfigError(key + ": expected a finite number, got '" + s + "'");
  }
  return v;
}

long parse_integer(const std::string& key, const std::string& s) {
  long v = 0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end) throw ConfigError(key + ": expected an integer, got '" + s + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw ConfigError(key + ": expected true or false, got '" + s + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_list(const std::string& key, const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) out.push_back(parse_double(key, item));
  return out;
}

template <typename T>
std::optional<T> parse_auto(const std::string& s, const std::function<T(const std::string&)>& parse) {
  if (s == "auto") return std::nullopt;
  return parse(s);
}

const std::set<std::string>& sweepable() {
  static const std::set<std::string> names{"delta_P", "kappa", "lambda_P", "lambda_S", "lambda_eff", "gamma"};
  return names;
}

using Setter = std::function<void(ScenarioConfig&, const std::string& key, const std::string& value)>;

struct Pending {
  std::optional<double> omega_P;
  std::optional<double> delta_P;
};

std::map<std::string, std::map<std::string, Setter>> schema(Pending& pending) {
  std::map<std::string, std::map<std::string, Setter>> s;
  auto real = [](double ModelConfig::*field) {
    return Setter([field](ScenarioConfig& c, const std::string& k, const std::string& v) {
      c.physics.*field = parse_double(k, v);
    });
  };
  s["scenario"]["model"] = [](ScenarioConfig& c, const std::string&, const std::string& v) { c.model = v; };
  s["run"]["workers"] = [](ScenarioConfig& c, const std::string& k, const std::string& v) {
    c.workers = static_cast<int>(parse_integer(k, v));
  };

  s["model"]["omega_21"] = real(&ModelConfig::omega_21);
  s["model"]["omega_31"] = real(&ModelConfig::omega_31);
  s["model"]["lambda_P"] = real(&ModelConfig::lambda_P);
  s["model"]["lambda_S"] = real(&ModelConfig::lambda_S);
  s["model"]["kappa"] = real(&ModelConfig::kappa);
  s["model"]["omega_P"] = [&pending](ScenarioConfig&, const std::string& k, const std::string& v) {
    pending.omega_P = parse_double(k, v);
  };
  s["model"]["delta_P"] = [&pending](ScenarioConfig&, const std::string& k, const std::string& v) {
    pending.delta_P = parse_double(k, v);
  };
  s["model"]["lambda_eff"] = [](ScenarioConfig& c, const std::string& k, const std::string& v) {
    c.physics.lambda_eff = parse_auto<double>(v, [&](const std::string& x) { return parse_double(k, x); });
  };

  s["bath"]["gamma"] = [](ScenarioConfig& c, const std::string& k, const std::string& v) {
    c.bath.gamma = parse_double(k, v);
  };
  s["bath"]["window"] = [](ScenarioConfig& c, const std::string& k, const std::string& v) {
    c.bath.window = parse_auto<double>(v, [&](const std::string& x) { return parse_double(k, x); });
  };
  s["bath"]["n_modes"] = [](ScenarioConfig& c, const std::string& k, const std::string& v) {
    c.bath.n_modes = parse_auto<int>(v, [&](const std::string& x) { return static_cast<int>(parse_integer(k, x)); });
  };
  s["bath"]["profile"] = [](ScenarioConfig& c, const std::string&, const std::string& v) {
    c.bath.profile = parse_bath_profile(v);
  };
  s["bath"]["lorentz_width"] = [](ScenarioConfig& c, const std::string& k, const std::string& v) {
    c.bath.lorentz_width = parse_auto<double>(v, [&](const std::string& x) { return parse_double(k, x); });
  };
  s["bath"]["recurrence_guard"] = [](ScenarioConfig& c, const std::string& k, const std::string& v) {
    c.bath.recurrence_guard = parse_bool(k, v);
  };

  s["grid"]["t_max"] = [](ScenarioConfig& c, const std::string& k, const std::string& v) {
    c.grid.t_max = parse_auto<double>(v, [&](const std::string& x) { return parse_double(k, x); });
  };
  s["grid"]["n_samples"] = [](ScenarioConfig& c, const std::string& k, const std::string& v) {
    c.grid.n_samples = parse_auto<std::size_t>(v, [&](const std::string& x) {
      const long n = parse_integer(k, x);
      if (n < 2) throw ConfigError(k + ": needs at least 2 samples");
      return static_cast<std::size_t>(n);
    });
  };

  s["integrator"]["rel_tol"] = [](ScenarioConfig& c, const std::string& k, const std::string& v) {
    c.tolerances.rel = parse_double(k, v);
  };
  s["integrator"]["abs_tol"] = [](ScenarioConfig& c, const std::string& k, const std::string& v) {
    c.tolerances.abs = parse_double(k, v);
  };
  s["integrator"]["max_step"] = [](ScenarioConfig& c, const std::string& k, const std::string& v) {
    c.tolerances.max_step = v == "inf" ? std::numeric_limits<double>::infinity() : parse_double(k, v);
  };
  s["integrator"]["max_steps"] = [](ScenarioConfig& c, const std::string& k, const std::string& v) {
    const long n = parse_integer(k, v);
    if (n < 1) throw ConfigError(k + ": must be >= 1");
    c.tolerances.max_steps = static_cast<std::size_t>(n);
  };

  s["sweep"]["parameter"] = [](ScenarioConfig& c, const std::string&, const std::string& v) {
    c.sweep.parameter = v;
  };
  s["sweep"]["values"] = [](ScenarioConfig& c, const std::string& k, const std::string& v) {
    c.sweep.values = parse_list(k, v);
  };

  s["output"]["directory"] = [](ScenarioConfig& c, const std::string&, const std::string& v) {
    c.output.directory = v;
  };
  s["output"]["formats"] = [](ScenarioConfig& c, const std::string&, const std::string& v) {
    c.output.formats = split_list(v);
  };
  s["output"]["overlay_closed_form"] = [](ScenarioConfig& c, const std::string& k, const std::string& v) {
    c.output.overlay_closed_form = parse_bool(k, v);
  };
  s["output"]["emit_plot_script"] = [](ScenarioConfig& c, const std::string& k, const std::string& v) {
    c.output.emit_plot_script = parse_bool(k, v);
  };

  s["laplace"]["method"] = [](ScenarioConfig& c, const std::string& k, const std::string& v) {
    if (v == "talbot") {
      c.laplace.method = InversionMethod::talbot;
    } else if (v == "bromwich") {
      c.laplace.method = InversionMethod::bromwich;
    } else {
      throw ConfigError(k + ": expected talbot or bromwich, got '" + v + "'");
    }
  };
  s["laplace"]["sum"] = [](ScenarioConfig& c, const std::string& k, const std::string& v) {
    if (v == "discrete") {
      c.laplace.sum = BathSum::discrete;
    } else if (v == "continuum") {
      c.laplace.sum = BathSum::continuum;
    } else {
      throw ConfigError(k + ": expected discrete or continuum, got '" + v + "'");
    }
  };
  s["laplace"]["nodes"] = [](ScenarioConfig& c, const std::string& k, const std::string& v) {
    c.laplace.nodes = static_cast<int>(parse_integer(k, v));
  };
  s["laplace"]["high_precision"] = [](ScenarioConfig& c, const std::string& k, const std::string& v) {
    c.laplace.high_precision = parse_bool(k, v);
  };
  s["laplace"]["tolerance"] = [](ScenarioConfig& c, const std::string& k, const std::string& v) {
    c.laplace.tolerance = parse_double(k, v);
  };
  s["laplace"]["alias_error"] = [](ScenarioConfig& c, const std::string& k, const std::string& v) {
    c.laplace.alias_error = parse_double(k, v);
  };
  s["laplace"]["period_factor"] = [](ScenarioConfig& c, const std::string& k, const std::string& v) {
    c.laplace.period_factor = parse_double(k, v);
  };

  s["stairs"]["relative_prominence"] = [](ScenarioConfig& c, const std::string& k, const std::string& v) {
    c.stairs.relative_prominence = parse_double(k, v);
  };
  s["stairs"]["smoothing_width"] = [](ScenarioConfig& c, const std::string& k, const std::string& v) {
    c.stairs.smoothing_width = parse_auto<double>(v, [&](const std::string& x) { return parse_double(k, x); });
  };

  s["compare"]["kappa_eff"] = [](ScenarioConfig& c, const std::string& k, const std::string& v) {
    c.kappa_eff = parse_auto<double>(v, [&](const std::string& x) { return parse_double(k, x); });
  };
  return s;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? format_double(*v) : "auto"; }

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::leaky: return "leaky";
    case Scenario::damped: return "damped";
    case Scenario::compare: return "compare";
    case Scenario::spectrum: return "spectrum";
  }
  return "unknown";
}

Scenario parse_scenario(const std::string& s) {
  if (s == "leaky") return Scenario::leaky;
  if (s == "damped") return Scenario::damped;
  if (s == "compare") return Scenario::compare;
  if (s == "spectrum") return Scenario::spectrum;
  throw ConfigError("unknown scenario '" + s + "'");
}

ScenarioConfig default_config(Scenario scenario, Preset preset) {
  ScenarioConfig c;
  c.scenario = scenario;
  c.preset = preset;
  c.physics.omega_21 = 100.0;
  c.physics.omega_31 = 40.0;
  c.physics.omega_P = 100.0;
  c.physics.lambda_S = 1.0;
  c.physics.kappa = 0.0;
  const double lambda_leaky = preset == Preset::fast ? 0.05 : 0.001;
  switch (scenario) {
    case Scenario::leaky:
      c.model = "full";
      c.physics.lambda_P = lambda_leaky;
      c.bath.window = 20.0;
      c.bath.n_modes = 201;
      c.sweep = {"delta_P", {0.0, 1.0, 2.0, 4.0}};
      c.grid.n_samples = 2001;
      c.tolerances.rel = 1e-9;
      c.tolerances.abs = 1e-11;
      break;
    case Scenario::compare:
      c.model = "full";
      c.physics.lambda_P = lambda_leaky;
      c.grid.n_samples = 2001;
      c.tolerances.rel = 1e-9;
      c.tolerances.abs = 1e-11;
      c.laplace.method = InversionMethod::bromwich;
      c.laplace.sum = BathSum::discrete;
      break;
    case Scenario::damped:
      c.model = "single_mode";
      c.physics.lambda_P = 1.0;
      c.sweep = {"kappa", {0.01, 0.1}};
      c.tolerances.rel = 1e-10;
      c.tolerances.abs = 1e-12;
      break;
    case Scenario::spectrum:
      c.model = "single_mode";
      c.physics.lambda_P = 1.0;
      break;
  }
  return c;
}

void apply_config(ScenarioConfig& config, std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  Pending pending;
  const auto table = schema(pending);
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("config: key '" + section + "' must live inside a [section]");
    const auto sec = table.find(section);
    if (sec == table.end()) throw ConfigError("config: unknown section [" + section + "]");
    for (const auto& [key, node] : body) {
      if (!node.empty()) throw ConfigError("config: nested key " + section + "." + key);
      const auto setter = sec->second.find(key);
      if (setter == sec->second.end()) throw ConfigError("config: unknown key " + section + "." + key);
      setter->second(config, section + "." + key, trim(node.data()));
    }
  }
  if (pending.omega_P && pending.delta_P) throw ConfigError("config: set model.omega_P or model.delta_P, not both");
  if (pending.omega_P) config.physics.omega_P = *pending.omega_P;
  if (pending.delta_P) config.physics.set_detuning(*pending.delta_P);
}

void apply_config_file(ScenarioConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  apply_config(config, in);
}

void validate(const ScenarioConfig& c) {
  c.physics.validate();
  if (c.workers < 1) throw ConfigError("run.workers must be >= 1");
  if (!(c.bath.gamma > 0.0)) throw ConfigError("bath.gamma must be > 0");
  if (c.bath.window && !(*c.bath.window > 0.0)) throw ConfigError("bath.window must be > 0");
  if (c.bath.n_modes && *c.bath.n_modes < 2) throw ConfigError("bath.n_modes must be >= 2");
  if (c.grid.t_max && !(*c.grid.t_max > 0.0)) throw ConfigError("grid.t_max must be > 0");
  if (!(c.tolerances.abs > 0.0) || !(c.tolerances.rel > 0.0)) throw ConfigError("integrator tolerances must be > 0");
  if (!(c.tolerances.max_step > 0.0)) throw ConfigError("integrator.max_step must be > 0");
  for (const auto& f : c.output.formats) {
    if (f != "csv") throw ConfigError("output.formats: unsupported format '" + f + "' (only csv)");
  }
  if (c.laplace.nodes < 2) throw ConfigError("laplace.nodes must be >= 2");
  if (!(c.laplace.tolerance > 0.0)) throw ConfigError("laplace.tolerance must be > 0");
  if (!(c.stairs.relative_prominence >= 0.0)) throw ConfigError("stairs.relative_prominence must be >= 0");
  if (c.stairs.smoothing_width && !(*c.stairs.smoothing_width > 0.0)) {
    throw ConfigError("stairs.smoothing_width must be > 0");
  }
  if (c.kappa_eff && !(*c.kappa_eff >= 0.0)) throw ConfigError("compare.kappa_eff must be >= 0");

  const auto require_model = [&](std::initializer_list<const char*> allowed) {
    for (const char* m : allowed) {
      if (c.model == m) return;
    }
    throw ConfigError("model '" + c.model + "' is not available for the " + to_string(c.scenario) + " scenario");
  };
  switch (c.scenario) {
    case Scenario::leaky:
    case Scenario::compare: require_model({"full"}); break;
    case Scenario::damped: require_model({"single_mode", "effective"}); break;
    case Scenario::spectrum: require_model({"single_mode"}); break;
  }

  if (!c.sweep.parameter.empty() || !c.sweep.values.empty()) {
    if (c.scenario == Scenario::spectrum) throw ConfigError("the spectrum scenario takes no sweep");
    if (!sweepable().contains(c.sweep.parameter)) {
      throw ConfigError("sweep.parameter '" + c.sweep.parameter + "' cannot be swept");
    }
    if (c.sweep.values.empty()) throw ConfigError("sweep.values is empty");
    std::set<std::string> labels;
    for (double v : c.sweep.values) {
      if (!labels.insert(format_double(v)).second) throw ConfigError("sweep.values repeats " + format_double(v));
    }
  }
}

std::vector<std::pair<std::string, std::string>> ScenarioConfig::echo() const {
  std::vector<std::pair<std::string, std::string>> e;
  e.emplace_back("scenario", to_string(scenario));
  e.emplace_back("preset", preset == Preset::fast ? "fast" : "slow");
  e.emplace_back("scenario.model", model);
  e.emplace_back("run.workers", std::to_string(workers));
  e.emplace_back("model.omega_21", format_double(physics.omega_21));
  e.emplace_back("model.omega_31", format_double(physics.omega_31));
  e.emplace_back("model.omega_P", format_double(physics.omega_P));
  e.emplace_back("model.delta_P", format_double(physics.delta_P()));
  e.emplace_back("model.lambda_P", format_double(physics.lambda_P));
  e.emplace_back("model.lambda_S", format_double(physics.lambda_S));
  e.emplace_back("model.kappa", format_double(physics.kappa));
  e.emplace_back("model.lambda_eff", fmt_opt(physics.lambda_eff));
  e.emplace_back("bath.gamma", format_double(bath.gamma));
  e.emplace_back("bath.window", fmt_opt(bath.window));
  e.emplace_back("bath.n_modes", bath.n_modes ? std::to_string(*bath.n_modes) : "auto");
  e.emplace_back("bath.profile", to_string(bath.profile));
  e.emplace_back("bath.lorentz_width", fmt_opt(bath.lorentz_width));
  e.emplace_back("bath.recurrence_guard", bath.recurrence_guard ? "true" : "false");
  e.emplace_back("grid.t_max", fmt_opt(grid.t_max));
  e.emplace_back("grid.n_samples", grid.n_samples ? std::to_string(*grid.n_samples) : "auto");
  e.emplace_back("integrator.rel_tol", format_double(tolerances.rel));
  e.emplace_back("integrator.abs_tol", format_double(tolerances.abs));
  e.emplace_back("integrator.max_step", format_double(tolerances.max_step));
  e.emplace_back("integrator.max_steps", std::to_string(tolerances.max_steps));
  std::string values;
  for (double v : sweep.values) values += (values.empty() ? "" : ", ") + format_double(v);
  e.emplace_back("sweep.parameter", sweep.parameter);
  e.emplace_back("sweep.values", values);
  e.emplace_back("output.directory", output.directory.string());
  e.emplace_back("output.overlay_closed_form", output.overlay_closed_form ? "true" : "false");
  e.emplace_back("output.emit_plot_script", output.emit_plot_script ? "true" : "false");
  e.emplace_back("laplace.method", laplace.method == InversionMethod::talbot ? "talbot" : "bromwich");
  e.emplace_back("laplace.sum", laplace.sum == BathSum::discrete ? "discrete" : "continuum");
  e.emplace_back("laplace.nodes", std::to_string(laplace.nodes));
  e.emplace_back("laplace.high_precision", laplace.high_precision ? "true" : "false");
  e.emplace_back("laplace.tolerance", format_double(laplace.tolerance));
  e.emplace_back("laplace.alias_error", format_double(laplace.alias_error));
  e.emplace_back("laplace.period_factor", format_double(laplace.period_factor));
  e.emplace_back("stairs.relative_prominence", format_double(stairs.relative_prominence));
  e.emplace_back("stairs.smoothing_width", fmt_opt(stairs.smoothing_width));
  e.emplace_back("compare.kappa_eff", fmt_opt(kappa_eff));
  return e;
}

}  // namespace lqed
