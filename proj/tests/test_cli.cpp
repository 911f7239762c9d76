#include "lqed/scenario.hpp"

#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>

using namespace lqed;
namespace fs = std::filesystem;

namespace {

ScenarioConfig parsed(Scenario s, const std::string& ini) {
  ScenarioConfig c = default_config(s, Preset::fast);
  std::istringstream in(ini);
  apply_config(c, in);
  return c;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lqed_test_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

/// Small leaky run: 2 detunings, a 41-mode bath, 201 samples.
ScenarioConfig small_leaky(const fs::path& out) {
  ScenarioConfig c = parsed(Scenario::leaky,
                            "[bath]\nn_modes = 41\nwindow = 4\n[grid]\nn_samples = 201\n"
                            "[sweep]\nparameter = delta_P\nvalues = 0, 1\n");
  c.output.directory = out;
  return c;
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(LQED_CLI) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("presets: fast is the default CI scale, slow the long-horizon scale") {
  CHECK(default_config(Scenario::leaky, Preset::fast).physics.lambda_P == 0.05);
  CHECK(default_config(Scenario::leaky, Preset::slow).physics.lambda_P == 0.001);
  const ScenarioConfig d = default_config(Scenario::damped, Preset::fast);
  CHECK(d.model == "single_mode");
  CHECK(d.sweep.parameter == "kappa");
  CHECK(d.physics.lambda_P == d.physics.lambda_S);
}

TEST_CASE("config keys land in their fields") {
  const ScenarioConfig c = parsed(Scenario::leaky,
                                  "; comment\n[model]\nlambda_P = 0.02\ndelta_P = 2\n"
                                  "[bath]\nn_modes = auto\nprofile = lorentzian\n"
                                  "[grid]\nt_max = 12.5\n[run]\nworkers = 3\n");
  CHECK(c.physics.lambda_P == 0.02);
  CHECK(c.physics.delta_P() == doctest::Approx(2.0));
  CHECK_FALSE(c.bath.n_modes.has_value());
  CHECK(c.bath.profile == BathProfile::lorentzian);
  CHECK(*c.grid.t_max == 12.5);
  CHECK(c.workers == 3);
}

TEST_CASE("unknown keys, unknown sections and malformed values are errors") {
  CHECK_THROWS_AS(parsed(Scenario::leaky, "[model]\nlamda_P = 1\n"), ConfigError);
  CHECK_THROWS_AS(parsed(Scenario::leaky, "[physics]\nlambda_P = 1\n"), ConfigError);
  CHECK_THROWS_AS(parsed(Scenario::leaky, "lambda_P = 1\n"), ConfigError);
  CHECK_THROWS_AS(parsed(Scenario::leaky, "[model]\nlambda_P = 1x\n"), ConfigError);
  CHECK_THROWS_AS(parsed(Scenario::leaky, "[model]\nlambda_P = 1,0\n"), ConfigError);
  CHECK_THROWS_AS(parsed(Scenario::leaky, "[bath]\nrecurrence_guard = yes\n"), ConfigError);
  CHECK_THROWS_AS(parsed(Scenario::leaky, "[bath]\nn_modes = 2.5\n"), ConfigError);
  CHECK_THROWS_AS(parsed(Scenario::leaky, "[model]\nlambda_P = 1\nlambda_P = 2\n"), ConfigError);
  CHECK_THROWS_AS(parsed(Scenario::leaky, "[model]\nomega_P = 101\ndelta_P = 1\n"), ConfigError);
}

TEST_CASE("validation happens before anything runs") {
  ScenarioConfig c = default_config(Scenario::leaky, Preset::fast);
  c.model = "effective";
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = default_config(Scenario::damped, Preset::fast);
  c.sweep.parameter = "omega_31";
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = default_config(Scenario::damped, Preset::fast);
  c.sweep.values = {0.1, 0.1};
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = default_config(Scenario::damped, Preset::fast);
  c.output.formats = {"hdf5"};
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = default_config(Scenario::spectrum, Preset::fast);
  c.sweep = {"kappa", {0.1}};
  CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("leaky defaults plan four detunings on a recurrence-limited horizon") {
  const std::vector<RunPlan> plans = plan_runs(default_config(Scenario::leaky, Preset::fast));
  REQUIRE(plans.size() == 4);
  CHECK(plans[1].label == "leaky_delta_P_1");
  for (const RunPlan& p : plans) {
    CHECK(p.bath.n_modes() == 201);
    CHECK(p.grid.size() == 2001);
    CHECK(p.grid.back() == doctest::Approx(0.95 * p.bath.recurrence_time()));
  }
}

TEST_CASE("an explicit horizon past the recurrence time is a config error") {
  CHECK_THROWS_AS(plan_runs(parsed(Scenario::leaky, "[grid]\nt_max = 100\n")), ConfigError);
  CHECK_NOTHROW(plan_runs(parsed(Scenario::leaky, "[grid]\nt_max = 100\n[bath]\nrecurrence_guard = false\n")));
}

TEST_CASE("compare sizes its bath so the recurrence time covers 10/gamma") {
  const std::vector<RunPlan> plans = plan_runs(default_config(Scenario::compare, Preset::fast));
  REQUIRE(plans.size() == 1);
  CHECK(plans[0].grid.back() == doctest::Approx(2000.0));
  CHECK(plans[0].bath.recurrence_time() > 2000.0);
  CHECK(plans[0].bath.n_modes() % 2 == 1);
  // The long-horizon preset would need millions of modes.
  CHECK_THROWS_AS(plan_runs(default_config(Scenario::compare, Preset::slow)), ConfigError);
}

TEST_CASE("damped horizon follows the slowest Liouvillian rate") {
  const std::vector<RunPlan> plans = plan_runs(default_config(Scenario::damped, Preset::fast));
  REQUIRE(plans.size() == 2);
  CHECK(plans[0].label == "damped_kappa_0.01");
  CHECK(plans[1].label == "damped_kappa_0.1");
  CHECK(plans[1].grid.back() < plans[0].grid.back());
  ScenarioConfig coarse = parsed(Scenario::damped, "[grid]\nn_samples = 50\n");
  CHECK_THROWS_AS(plan_runs(coarse), ConfigError);
}

TEST_CASE("CSV output is byte-identical across runs and worker counts") {
  const fs::path a = scratch("det_a");
  const fs::path b = scratch("det_b");
  ScenarioConfig ca = small_leaky(a);
  ScenarioConfig cb = small_leaky(b);
  cb.workers = 2;
  run_scenario(ca);
  run_scenario(cb);
  for (const char* f : {"leaky_delta_P_0.csv", "leaky_delta_P_1.csv"}) {
    const std::string x = slurp(a / f);
    CHECK(!x.empty());
    CHECK(x == slurp(b / f));
    CHECK(x.find('\r') == std::string::npos);
    CHECK(x.rfind("t,P_entangled_direct,P_entangled_derivform,abs_C1_sq,abs_C2_sq,norm\n", 0) == 0);
  }
  CHECK(fs::exists(a / "metadata.json"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("numbers are written with 17 significant digits and round-trip") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-2.5e-300) == "-2.5e-300");
  CHECK(format_double(2.0 / 3.0) == "0.66666666666666663");
  for (double v : {1.0 / 3.0, 2.0e-17, 123456.789}) CHECK(std::stod(format_double(v)) == v);
}

TEST_CASE("a failing run removes every file it wrote") {
  const fs::path out = scratch("fail");
  ScenarioConfig c = small_leaky(out);
  c.tolerances.max_steps = 50;
  CHECK_THROWS_AS(run_scenario(c), NumericalError);
  CHECK(fs::is_empty(out));
  fs::remove_all(out);
}

TEST_CASE("exception types map to exit codes") {
  CHECK(exit_code_for(ConfigError("x")) == 2);
  CHECK(exit_code_for(NumericalError("x")) == 3);
  CHECK(exit_code_for(InvariantError("x")) == 4);
}

TEST_CASE("command line exit codes") {
  const fs::path out = scratch("cli");
  const fs::path ini = scratch("cli.ini");
  const std::string o = " --out " + out.string();
  CHECK(run_cli("spectrum" + o) == 0);
  CHECK(fs::exists(out / "spectrum.csv"));
  CHECK(fs::exists(out / "dressed.csv"));
  CHECK(run_cli("leaky --fast --slow" + o) == 2);
  CHECK(run_cli("leaky --no-such-flag") == 2);
  CHECK(run_cli("nonsense") == 2);
  CHECK(run_cli("damped --n-modes 11" + o) == 2);
  std::ofstream(ini) << "[integrator]\nmax_steps = 10\n";
  CHECK(run_cli("damped --config " + ini.string() + o) == 3);
  std::ofstream(ini) << "[integrator]\nrel_tol = 1e-4\nabs_tol = 1e-6\n";
  CHECK(run_cli("damped --config " + ini.string() + o) == 4);
  CHECK_FALSE(fs::exists(out / "damped_kappa_0.01.csv"));
  fs::remove_all(out);
  fs::remove(ini);
}

TEST_CASE("plot script lists the CSV files of the run") {
  const fs::path out = scratch("plot");
  ScenarioConfig c = small_leaky(out);
  c.output.emit_plot_script = true;
  const RunOutcome r = run_scenario(c);
  const std::string script = slurp(out / "plot.py");
  CHECK(script.find("leaky_delta_P_0.csv") != std::string::npos);
  CHECK(script.find("leaky_delta_P_1.csv") != std::string::npos);
  CHECK(r.files.size() == 4);
  fs::remove_all(out);
}
