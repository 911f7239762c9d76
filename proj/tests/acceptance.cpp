// Acceptance checks: one PASS/FAIL line per criterion at the stated tolerances.
//
// Exit status: with --expect-red a,b,... the run succeeds only when exactly
// those criteria fail, so ctest guards every other criterion against
// regressions while the known-red ones keep printing FAIL. Without the flag
// any FAIL is an error.

#include "oracle.hpp"

#include "lqed/analytic.hpp"
#include "lqed/dynamics.hpp"
#include "lqed/observables.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace lqed;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    detail += (detail.empty() ? "" : "; ") + what + (ok ? "" : " [miss]");
  }
};

PropagationOptions leaky_options(bool guard = true) {
  PropagationOptions o;
  o.tolerances.rel = 1e-9;
  o.tolerances.abs = 1e-11;
  o.enforce_recurrence_guard = guard;
  return o;
}

PropagationOptions damped_options() {
  PropagationOptions o;
  o.tolerances.rel = 1e-10;
  o.tolerances.abs = 1e-12;
  return o;
}

ModelConfig leaky_model(double lambda, double delta) {
  ModelConfig c;
  c.lambda_P = lambda;
  c.set_detuning(delta);
  return c;
}

/// Sample index at or after time t on a uniform grid.
std::size_t index_at(const std::vector<double>& grid, double t) {
  const double h = grid[1] - grid[0];
  return std::min(grid.size() - 1, static_cast<std::size_t>(std::ceil(t / h - 1e-9)));
}

// 1: leaky-cavity rise of the entanglement probability, N = 201, W = 20.
Verdict criterion1() {
  Verdict v;
  const auto start = Clock::now();
  for (double delta : {0.0, 1.0, 2.0, 4.0}) {
    const ModelConfig c = leaky_model(0.05, delta);
    const double gamma = decay_rate(AnalyticParams::from(c, 1.0));
    const BathSpec bath = discretize_bath(1.0, 20.0, 201, BathProfile::flat, c.omega_S());
    const double horizon = 5.0 / gamma;
    // The horizon lies past the recurrence time, so the guard is lifted to
    // measure what the 201-mode bath actually does there.
    const std::vector<double> grid = uniform_grid(horizon, 2001);
    const Trajectory t = propagate_amplitudes(c, bath, grid, leaky_options(false));
    const EntanglementSeries e = entanglement_probability(t);
    double peak = 0.0;
    for (double p : e.direct.values) peak = std::max(peak, p);
    v.require(e.direct.values.back() > 0.99,
              fmt("delta=%g: P(5/gamma=%.0f)=%.3f, max P=%.3f, T_rec=%.1f", delta, horizon, e.direct.values.back(),
                  peak, bath.recurrence_time()));
  }
  const double elapsed = seconds_since(start);
  v.require(elapsed < 60.0, fmt("runtime %.1fs", elapsed));
  // Long-horizon preset: 5/gamma = 2.5e6 against T_rec = 31.4 for this bath.
  const ModelConfig slow = leaky_model(0.001, 0.0);
  const double slow_horizon = 5.0 / decay_rate(AnalyticParams::from(slow, 1.0));
  v.require(false, fmt("slow preset not reachable: 5/gamma=%.3g vs T_rec=%.1f for N=201, W=20", slow_horizon,
                       discretize_bath(1.0, 20.0, 201).recurrence_time()));
  return v;
}

// 2: ODE against the closed form and against the inverse Laplace transform.
Verdict criterion2(double* norm_drift) {
  Verdict v;
  const auto start = Clock::now();
  const ModelConfig c = leaky_model(0.05, 0.0);
  const AnalyticParams p = AnalyticParams::from(c, 1.0);
  const double horizon = 10.0 / decay_rate(p);
  const double window = 3.0;
  int n = static_cast<int>(std::ceil(2.0 * window * 1.05 * horizon / (2.0 * std::numbers::pi))) + 1;
  n += (n % 2 == 0);
  const BathSpec bath = discretize_bath(1.0, window, n, BathProfile::flat, c.omega_S(), horizon);
  const std::vector<double> grid = uniform_grid(horizon, 1001);
  const Trajectory ode = propagate_amplitudes(c, bath, grid, leaky_options());
  *norm_drift = ode.norm_drift();
  InverseLaplaceOptions lo;
  lo.method = InversionMethod::bromwich;
  lo.sum = BathSum::discrete;
  const InverseLaplaceResult lap = inverse_laplace(c, bath, grid, lo);
  double closed = 0.0, laplace = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    closed = std::max(closed, std::abs(ode.c1[i] - approx_amplitudes(p, grid[i]).c1));
    laplace = std::max(laplace, std::abs(ode.c1[i] - lap.c1[i]));
  }
  const double elapsed = seconds_since(start);
  v.require(closed < 5e-3, fmt("sup|C1_ode - C1_closed|=%.3g", closed));
  v.require(laplace < 1e-6, fmt("sup|C1_ode - C1_laplace|=%.3g", laplace));
  v.require(elapsed < 30.0, fmt("N=%d, t in [0, %.0f], runtime %.1fs", n, horizon, elapsed));
  return v;
}

// 3: integrals of motion, norm and trace budgets, positivity.
Verdict criterion3(double leaky_drift) {
  Verdict v;
  std::mt19937_64 rng(7);
  const BasisPtr full = build_full_basis(2);
  const auto [np, ns] = integrals_of_motion(*full);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const ModelConfig c = oracle::random_config(rng);
    const Operator h = full_hamiltonian(c, discretize_bath(0.5, 3.0, 2, BathProfile::flat, c.omega_S()), *full);
    worst = std::max({worst, commutator_norm(h, np), commutator_norm(h, ns)});
  }
  v.require(worst < 1e-12, fmt("max |[H,N]| over 100 configs=%.2g", worst));
  v.require(leaky_drift < 1e-8, fmt("unitary norm drift over 10/gamma=%.2g", leaky_drift));
  for (double kappa : {0.01, 0.1}) {
    ModelConfig c;
    c.kappa = kappa;
    const double horizon = 60.0 / kappa;
    const Trajectory t = propagate_damped(c, uniform_grid(horizon, 20001), damped_options());
    const double min_eig = *std::min_element(t.min_eigenvalue.begin(), t.min_eigenvalue.end());
    v.require(t.norm_drift() < 1e-8 && min_eig >= -1e-8,
              fmt("kappa=%g: trace drift=%.2g, min eig=%.2g", kappa, t.norm_drift(), min_eig));
  }
  return v;
}

// 4: symmetric and antisymmetric sectors decouple.
Verdict criterion4() {
  Verdict v;
  ModelConfig c;
  c.lambda_S = 0.7;
  c.set_detuning(0.3);
  const BathSpec bath = discretize_bath(0.5, 2.0, 3, BathProfile::flat, c.omega_S());
  const BasisPtr full = build_full_basis(3);
  const Operator h = full_hamiltonian(c, bath, *full);
  const Trajectory t = propagate_state(h, embed(psi1_state(), full), uniform_grid(50.0, 2001),
                                       rotating_frame(c, *full), damped_options());
  double worst = 0.0;
  for (const BasisState& a : antisymmetric_states(3)) {
    const VectorXc va = embed(a, full).amplitudes;
    for (const VectorXc& psi : t.states) worst = std::max(worst, std::abs(va.dot(psi)));
  }
  v.require(worst < 1e-14, fmt("max antisymmetric amplitude=%.2g (72 states, 3 modes)", worst));
  return v;
}

// 5: reduced basis against the 36-state product space with one Stokes mode.
Verdict criterion5() {
  Verdict v;
  const auto start = Clock::now();
  ModelConfig c;
  c.lambda_S = 0.8;
  c.set_detuning(0.5);
  BathSpec bath = BathSpec::none(c.omega_S());
  bath.mode_frequencies = {c.omega_S()};
  bath.mode_couplings = {c.lambda_S};
  PropagationOptions o;
  o.tolerances.rel = 1e-12;
  o.tolerances.abs = 1e-14;
  const std::vector<double> grid = uniform_grid(50.0 / c.lambda_P, 2001);
  const Trajectory reduced = propagate_amplitudes(c, bath, grid, o);
  const BasisPtr full = build_full_basis(1);
  const Trajectory big = propagate_state(full_hamiltonian(c, bath, *full), embed(psi1_state(), full), grid,
                                         rotating_frame(c, *full), o);
  MatrixXc lift(full->size(), reduced.basis->size());
  for (Index j = 0; j < reduced.basis->size(); ++j) lift.col(j) = embed((*reduced.basis)[j], full).amplitudes;
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    worst = std::max(worst, (lift * reduced.states[i] - big.states[i]).cwiseAbs().maxCoeff());
  }
  const double elapsed = seconds_since(start);
  v.require(worst < 1e-9, fmt("sup amplitude difference=%.2g over [0, 50/lambda_P]", worst));
  v.require(elapsed < 10.0, fmt("runtime %.2fs", elapsed));
  return v;
}

StairsReport stairs_of(const Trajectory& t, double period) {
  StairsOptions o;
  o.rabi_period = period;
  return stairs_metric(rho44(t), o);
}

// 6: damped cavity, full against effective model.
Verdict criterion6() {
  Verdict v;
  const auto start = Clock::now();
  const double eps = std::sqrt(3.0);
  const std::vector<double> window = uniform_grid(40.0, 4001);
  for (double kappa : {0.01, 0.1}) {
    ModelConfig c;
    c.kappa = kappa;
    const double horizon = 30.0 / kappa;
    const std::vector<double> grid = uniform_grid(horizon, 30001);
    const Trajectory t = propagate_damped(c, grid, damped_options());
    const ObservableSeries r = rho44(t);
    const ExponentialFit fit = fit_approach_rate(r, horizon / 4.0, 1e-9);
    const double t6 = 6.0 / fit.rate;
    const double at = r.values[index_at(grid, t6)];
    v.require(at >= 0.99, fmt("full kappa=%g: kappa_eff=%.4g, rho44(6/kappa_eff)=%.4f", kappa, fit.rate, at));
    const StairsReport full = stairs_of(propagate_damped(c, window, damped_options()), 2.0 * std::numbers::pi / eps);
    if (kappa == 0.1) v.require(full.plateau_count >= 3, fmt("full plateaus=%d", full.plateau_count));

    ModelConfig e = c;
    e.lambda_eff = c.lambda_P;
    const Trajectory te = propagate_effective(e, window, EffectiveVariant::lindblad, damped_options());
    const double eff_period = 2.0 * std::numbers::pi / (2.0 * std::numbers::sqrt2 * *e.lambda_eff);
    const StairsReport eff = stairs_of(te, eff_period);
    v.require(eff.plateau_count <= 1,
              fmt("effective kappa=%g, lambda_eff=lambda_P: plateaus=%d", kappa, eff.plateau_count));
  }
  const double elapsed = seconds_since(start);
  v.require(elapsed < 60.0, fmt("runtime %.1fs", elapsed));
  return v;
}

// 7: dressed states of the resonant single-mode model.
Verdict criterion7() {
  Verdict v;
  double residual = 0.0, eps_error = 0.0;
  for (auto [lp, ls] : {std::pair{1.0, 1.0}, {0.5, 2.0}, {3.0, 0.2}}) {
    ModelConfig c;
    c.lambda_P = lp;
    c.lambda_S = ls;
    const DressedStateSet d = dressed_states(c);
    const MatrixXc h = single_mode_hamiltonian(c, *d.basis).dense();
    for (std::size_t j = 0; j < 4; ++j) {
      const VectorXc& psi = d.states[j].amplitudes;
      residual = std::max(residual, (h * psi - d.energies[j] * psi).norm());
    }
    eps_error = std::max(eps_error, std::abs(d.epsilon - std::sqrt(2 * lp * lp + ls * ls)));
  }
  v.require(residual < 1e-10, fmt("max |H psi - E psi|=%.2g", residual));
  v.require(eps_error < 1e-12, fmt("|epsilon - sqrt(2 lP^2 + lS^2)|=%.2g", eps_error));
  return v;
}

// 8: bath convergence under doubling of the mode count.
Verdict criterion8() {
  Verdict v;
  for (double delta : {0.0, 1.0, 2.0, 4.0}) {
    const ModelConfig c = leaky_model(0.05, delta);
    const BathSpec coarse = discretize_bath(1.0, 20.0, 201, BathProfile::flat, c.omega_S());
    const BathSpec fine = discretize_bath(1.0, 20.0, 401, BathProfile::flat, c.omega_S());
    const std::vector<double> grid = uniform_grid(0.5 * coarse.recurrence_time(), 1001);
    const ObservableSeries a = entanglement_probability(propagate_amplitudes(c, coarse, grid, leaky_options())).direct;
    const ObservableSeries b = entanglement_probability(propagate_amplitudes(c, fine, grid, leaky_options())).direct;
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) worst = std::max(worst, std::abs(a.values[i] - b.values[i]));
    v.require(worst < 1e-3, fmt("delta=%g: sup|P_201 - P_401|=%.2g", delta, worst));
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expect_red;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--expect-red") == 0 && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string item; std::getline(ss, item, ',');) expect_red.insert(std::stoi(item));
    }
  }
  double leaky_drift = 0.0;
  const auto run = [](int id, const char* name, auto&& body) {
    Verdict v;
    try {
      v = body();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    std::printf("criterion %d %s: %s (%s)\n", id, v.pass ? "PASS" : "FAIL", name, v.detail.c_str());
    std::fflush(stdout);
    return v.pass;
  };
  std::set<int> red;
  const auto record = [&](int id, bool pass) {
    if (!pass) red.insert(id);
  };
  record(1, run(1, "leaky-cavity entanglement rise", criterion1));
  record(2, run(2, "analytic agreement", [&] { return criterion2(&leaky_drift); }));
  record(3, run(3, "conservation suite", [&] { return criterion3(leaky_drift); }));
  record(4, run(4, "sector decoupling", criterion4));
  record(5, run(5, "reduced vs full basis", criterion5));
  record(6, run(6, "damped cavity stairs", criterion6));
  record(7, run(7, "dressed states", criterion7));
  record(8, run(8, "bath convergence", criterion8));
  std::printf("summary: %zu of 8 criteria pass\n", 8 - red.size());
  if (red != expect_red) {
    std::printf("unexpected outcome: failing set differs from the expected red set\n");
    return 1;
  }
  return 0;
}
