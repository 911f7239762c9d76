#pragma once

#include "lqed/statespace.hpp"

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace lqed {

/// Physical parameters. Frequencies are angular and measured in the scenario's
/// unit (Gamma for the leaky cavity, lambda_P for the damped cavity).
struct ModelConfig {
  double omega_21 = 100.0;
  double omega_31 = 40.0;
  double omega_P = 100.0;
  double lambda_P = 1.0;
  double lambda_S = 1.0;
  double kappa = 0.0;
  /// Two-photon coupling of the effective model; lambda_P * lambda_S / delta_P when unset.
  std::optional<double> lambda_eff;

  [[nodiscard]] double omega_S() const { return omega_21 - omega_31; }
  [[nodiscard]] double delta_P() const { return omega_P - omega_21; }
  /// Sets omega_P = omega_21 + delta.
  ModelConfig& set_detuning(double delta) {
    omega_P = omega_21 + delta;
    return *this;
  }
  [[nodiscard]] bool resonant(double tol = 1e-12) const;

  /// Throws ConfigError on negative couplings/rates or non-positive frequencies.
  void validate() const;
};

double effective_coupling(const ModelConfig& config);

enum class BathProfile { flat, lorentzian };

std::string to_string(BathProfile p);
BathProfile parse_bath_profile(const std::string& s);

/// Uniformly discretized Stokes continuum around `center` (= omega_S).
struct BathSpec {
  std::vector<double> mode_frequencies;
  std::vector<double> mode_couplings;
  double gamma = 0.0;
  double window_halfwidth = 0.0;
  double center = 0.0;
  BathProfile profile = BathProfile::flat;

  [[nodiscard]] int n_modes() const { return static_cast<int>(mode_frequencies.size()); }
  /// Mode spacing 2W/(N-1); zero for fewer than two modes.
  [[nodiscard]] double spacing() const;
  /// Poincare recurrence time 2 pi / spacing (infinite without a bath).
  [[nodiscard]] double recurrence_time() const;
  /// Throws ConfigError when horizon exceeds the recurrence time.
  void check_horizon(double horizon) const;

  /// A bath with no modes (pure two-level pump dynamics).
  static BathSpec none(double center = 0.0);
};

/// Flat profile: lambda_Sk = sqrt(Gamma * dw / pi) so the golden-rule half-width is Gamma.
/// Lorentzian profile: same value at line centre, weighted by w^2 / ((w - w_S)^2 + w^2),
/// w = lorentz_width (defaults to W / 4).
BathSpec discretize_bath(double gamma, double window_halfwidth, int n_modes, BathProfile profile = BathProfile::flat,
                         double center = 0.0, std::optional<double> horizon = std::nullopt,
                         std::optional<double> lorentz_width = std::nullopt);

/// H = H0 + H_int with the discretized Stokes bath. The basis must carry bath.n_modes() Stokes modes.
Operator full_hamiltonian(const ModelConfig& config, const BathSpec& bath, const Basis& basis);

/// Single Stokes mode of frequency omega_S and coupling lambda_S.
Operator single_mode_hamiltonian(const ModelConfig& config, const Basis& basis);

/// Two-photon Hamiltonian with level 2 adiabatically eliminated.
Operator effective_hamiltonian(const ModelConfig& config, const Basis& basis);

/// (N_P, N_S): pump excitations and Stokes photons minus level-3 atoms.
std::pair<Operator, Operator> integrals_of_motion(const Basis& basis);

/// Eigenstates psi0, psi+, psi-, psi4 of the single-mode Hamiltonian at exact resonance.
struct DressedStateSet {
  BasisPtr basis;  ///< single-mode sector {psi1, psi2, psi3, psi4}
  std::array<StateVector, 4> states;
  std::array<double, 4> energies{};
  std::array<std::string, 4> names{"psi0", "psi+", "psi-", "psi4"};
  double epsilon = 0.0;

  /// Columns are the dressed states in sector coordinates.
  [[nodiscard]] MatrixXc transform() const;
};

/// Rejects configurations off exact resonance.
DressedStateSet dressed_states(const ModelConfig& config);

}  // namespace lqed
