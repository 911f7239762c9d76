#include "lqed/models.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace lqed {

namespace {

double atomic_energy(const ModelConfig& c, int level) {
  switch (level) {
    case 2: return c.omega_21;
    case 3: return c.omega_31;
    default: return 0.0;
  }
}

// Appends the pump-coupling terms lambda_P [R21(f) a_P + a_P^dagger R12(f)].
void pump_coupling(const ModelConfig& c, const ProductLabel& l, LabelTerms& out) {
  for (int f = 1; f <= 2; ++f) {
    if (l.level(f) == 1 && l.pump == 1) {
      ProductLabel r = l.with_level(f, 2);
      r.pump = 0;
      out.emplace_back(c.lambda_P, r);
    } else if (l.level(f) == 2 && l.pump == 0) {
      ProductLabel r = l.with_level(f, 1);
      r.pump = 1;
      out.emplace_back(c.lambda_P, r);
    }
  }
}

// Stokes coupling g_k [R23(f) a_Sk + a_Sk^dagger R32(f)] with at most one Stokes photon.
void stokes_coupling(std::span<const double> couplings, const ProductLabel& l, LabelTerms& out) {
  for (int f = 1; f <= 2; ++f) {
    if (l.level(f) == 3 && l.stokes != kVacuum) {
      ProductLabel r = l.with_level(f, 2);
      r.stokes = kVacuum;
      out.emplace_back(couplings[static_cast<std::size_t>(l.stokes)], r);
    } else if (l.level(f) == 2 && l.stokes == kVacuum) {
      for (std::size_t k = 0; k < couplings.size(); ++k) {
        ProductLabel r = l.with_level(f, 3);
        r.stokes = static_cast<int>(k);
        out.emplace_back(couplings[k], r);
      }
    }
  }
}

Operator build_three_level(const ModelConfig& c, std::span<const double> freqs, std::span<const double> couplings,
                           const Basis& basis) {
  return represent(
      basis,
      [&](const ProductLabel& l, LabelTerms& out) {
        double e = c.omega_P * l.pump + atomic_energy(c, l.atom1) + atomic_energy(c, l.atom2);
        if (l.stokes != kVacuum) e += freqs[static_cast<std::size_t>(l.stokes)];
        if (e != 0.0) out.emplace_back(e, l);
        pump_coupling(c, l, out);
        stokes_coupling(couplings, l, out);
      },
      true);
}

}  // namespace

// ---- ModelConfig --------------------------------------------------------------

bool ModelConfig::resonant(double tol) const {
  return std::abs(omega_P - omega_21) <= tol * std::max(1.0, std::abs(omega_21));
}

void ModelConfig::validate() const {
  if (!(lambda_P >= 0.0) || !(lambda_S >= 0.0)) throw ConfigError("couplings must be >= 0");
  if (!(kappa >= 0.0)) throw ConfigError("kappa must be >= 0");
  if (lambda_eff && !(*lambda_eff >= 0.0)) throw ConfigError("lambda_eff must be >= 0");
  if (!(omega_21 > 0.0) || !(omega_31 > 0.0) || !(omega_P > 0.0)) throw ConfigError("frequencies must be > 0");
  if (!(omega_S() > 0.0)) throw ConfigError("omega_S = omega_21 - omega_31 must be > 0");
}

double effective_coupling(const ModelConfig& c) {
  if (c.lambda_eff) return *c.lambda_eff;
  const double delta = c.delta_P();
  if (delta == 0.0) throw ConfigError("effective coupling needs lambda_eff or a nonzero pump detuning");
  return c.lambda_P * c.lambda_S / std::abs(delta);
}

// ---- Bath -------------------------------------------------------------------------

std::string to_string(BathProfile p) { return p == BathProfile::flat ? "flat" : "lorentzian"; }

BathProfile parse_bath_profile(const std::string& s) {
  if (s == "flat") return BathProfile::flat;
  if (s == "lorentzian") return BathProfile::lorentzian;
  throw ConfigError("unknown bath profile '" + s + "'");
}

double BathSpec::spacing() const {
  if (n_modes() < 2) return 0.0;
  return 2.0 * window_halfwidth / (n_modes() - 1);
}

double BathSpec::recurrence_time() const {
  const double dw = spacing();
  return dw > 0.0 ? 2.0 * std::numbers::pi / dw : std::numeric_limits<double>::infinity();
}

void BathSpec::check_horizon(double horizon) const {
  if (horizon > recurrence_time()) {
    throw ConfigError("horizon " + std::to_string(horizon) + " exceeds the bath recurrence time " +
                      std::to_string(recurrence_time()));
  }
}

BathSpec BathSpec::none(double center) {
  BathSpec b;
  b.center = center;
  return b;
}

BathSpec discretize_bath(double gamma, double window_halfwidth, int n_modes, BathProfile profile, double center,
                         std::optional<double> horizon, std::optional<double> lorentz_width) {
  if (n_modes < 2) throw ConfigError("bath needs at least 2 modes");
  if (!(window_halfwidth > 0.0)) throw ConfigError("bath window half-width must be > 0");
  if (!(gamma > 0.0)) throw ConfigError("bath half-width gamma must be > 0");
  BathSpec bath;
  bath.gamma = gamma;
  bath.window_halfwidth = window_halfwidth;
  bath.center = center;
  bath.profile = profile;
  const double dw = 2.0 * window_halfwidth / (n_modes - 1);
  const double g0 = std::sqrt(gamma * dw / std::numbers::pi);
  const double width = lorentz_width.value_or(window_halfwidth / 4.0);
  bath.mode_frequencies.resize(static_cast<std::size_t>(n_modes));
  bath.mode_couplings.resize(static_cast<std::size_t>(n_modes));
  for (int k = 0; k < n_modes; ++k) {
    const double offset = -window_halfwidth + k * dw;
    bath.mode_frequencies[static_cast<std::size_t>(k)] = center + offset;
    double g = g0;
    if (profile == BathProfile::lorentzian) g *= width / std::sqrt(offset * offset + width * width);
    bath.mode_couplings[static_cast<std::size_t>(k)] = g;
  }
  if (horizon) bath.check_horizon(*horizon);
  return bath;
}

// ---- Hamiltonians ------------------------------------------------------------------

Operator full_hamiltonian(const ModelConfig& config, const BathSpec& bath, const Basis& basis) {
  if (basis.n_stokes_modes() != bath.n_modes()) {
    throw ConfigError("basis has " + std::to_string(basis.n_stokes_modes()) + " Stokes modes, bath has " +
                      std::to_string(bath.n_modes()));
  }
  return build_three_level(config, bath.mode_frequencies, bath.mode_couplings, basis);
}

Operator single_mode_hamiltonian(const ModelConfig& config, const Basis& basis) {
  if (basis.n_stokes_modes() != 1) throw ConfigError("single-mode Hamiltonian needs a basis with one Stokes mode");
  const std::array<double, 1> freq{config.omega_S()};
  const std::array<double, 1> coupling{config.lambda_S};
  return build_three_level(config, freq, coupling, basis);
}

Operator effective_hamiltonian(const ModelConfig& config, const Basis& basis) {
  if (basis.n_stokes_modes() != 1) throw ConfigError("effective Hamiltonian needs a basis with one Stokes mode");
  const double lambda = effective_coupling(config);
  const double omega_S = config.omega_S();
  return represent(
      basis,
      [&](const ProductLabel& l, LabelTerms& out) {
        double e = config.omega_P * l.pump + (l.stokes != kVacuum ? omega_S : 0.0);
        e += (l.atom1 == 3 ? config.omega_31 : 0.0) + (l.atom2 == 3 ? config.omega_31 : 0.0);
        if (e != 0.0) out.emplace_back(e, l);
        for (int f = 1; f <= 2; ++f) {
          // R31(f) a_S^dagger a_P
          if (l.level(f) == 1 && l.pump == 1 && l.stokes == kVacuum) {
            ProductLabel r = l.with_level(f, 3);
            r.pump = 0;
            r.stokes = 0;
            out.emplace_back(lambda, r);
          }
          // a_P^dagger a_S R13(f)
          if (l.level(f) == 3 && l.pump == 0 && l.stokes == 0) {
            ProductLabel r = l.with_level(f, 1);
            r.pump = 1;
            r.stokes = kVacuum;
            out.emplace_back(lambda, r);
          }
        }
      },
      true);
}

std::pair<Operator, Operator> integrals_of_motion(const Basis& basis) {
  Operator n_p = represent(
      basis, [](const ProductLabel& l, LabelTerms& out) { out.emplace_back(pump_excitations(l), l); }, true);
  Operator n_s = represent(
      basis, [](const ProductLabel& l, LabelTerms& out) { out.emplace_back(stokes_excitations(l), l); }, true);
  return {std::move(n_p), std::move(n_s)};
}

// ---- Dressed states ------------------------------------------------------------------

MatrixXc DressedStateSet::transform() const {
  MatrixXc u(basis->size(), 4);
  for (int j = 0; j < 4; ++j) u.col(j) = states[static_cast<std::size_t>(j)].amplitudes;
  return u;
}

DressedStateSet dressed_states(const ModelConfig& config) {
  config.validate();
  if (!config.resonant()) throw ConfigError("dressed states require exact resonance omega_P = omega_21");
  const double lp = config.lambda_P;
  const double ls = config.lambda_S;
  const double eps = std::sqrt(2.0 * lp * lp + ls * ls);
  if (eps == 0.0) throw ConfigError("dressed states are degenerate for lambda_P = lambda_S = 0");
  const double r2 = std::numbers::sqrt2;

  DressedStateSet set;
  set.basis = build_single_mode_sector();
  set.epsilon = eps;
  auto make = [&](double c1, double c2, double c3, double c4) {
    VectorXc v(4);
    v << c1, c2, c3, c4;
    return StateVector{set.basis, v};
  };
  set.states[0] = make(ls / eps, 0.0, -lp * r2 / eps, 0.0);
  set.states[1] = make(lp / eps, 1.0 / r2, ls / (eps * r2), 0.0);
  set.states[2] = make(-lp / eps, 1.0 / r2, -ls / (eps * r2), 0.0);
  set.states[3] = make(0.0, 0.0, 0.0, 1.0);
  set.energies = {config.omega_P, config.omega_P + eps, config.omega_P - eps, config.omega_31};
  return set;
}

}  // namespace lqed
