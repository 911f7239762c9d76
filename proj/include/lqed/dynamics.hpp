#pragma once

#include "lqed/integrator.hpp"
#include "lqed/models.hpp"
#include "lqed/statespace.hpp"

#include <span>
#include <string>
#include <vector>

namespace lqed {

/// Time series produced by a propagator. Amplitudes and density matrices are
/// stored in the lab frame: lab_j = exp(-i frame_j t) * rotating_j.
struct Trajectory {
  BasisPtr basis;
  std::string model;  ///< "full", "single_mode" or "effective"
  ModelConfig config;
  std::vector<double> times;
  Eigen::VectorXd frame;  ///< diagonal rotating-frame frequencies

  // Unitary runs.
  std::vector<Complex> c1;  ///< amplitude of psi1
  std::vector<Complex> c2;  ///< amplitude of psi2 (zero when the basis lacks it)
  std::vector<double> stokes_population;  ///< sum of |C|^2 over states holding a Stokes photon
  std::vector<VectorXc> states;  ///< full amplitude vectors, when stored

  // Lindblad runs.
  std::vector<MatrixXc> densities;
  std::vector<double> min_eigenvalue;

  std::vector<double> norm;  ///< |psi|^2 or tr(rho)

  Tolerances tolerances;
  IntegrationStats stats;

  [[nodiscard]] bool is_density() const { return !densities.empty(); }
  [[nodiscard]] std::size_t size() const { return times.size(); }
  /// Largest |1 - norm| over the samples.
  [[nodiscard]] double norm_drift() const;
  /// c1 with the frame phase removed, exp(+i frame_psi1 t) C1(t).
  [[nodiscard]] std::vector<Complex> rotating_c1() const;
  /// Pump-transition coupling that links psi1 to its partner (sqrt(2) lambda).
  [[nodiscard]] double psi1_coupling() const;
};

struct PropagationOptions {
  Tolerances tolerances;
  bool enforce_recurrence_guard = true;
  /// Store every amplitude vector; nullopt stores them for bases up to 512 states.
  std::optional<bool> store_states;
  /// |1 - norm| budget for unitary runs; exceeded budgets raise InvariantError.
  double norm_budget = 1e-8;
  /// |1 - tr rho| budget for Lindblad runs.
  double trace_budget = 1e-8;
  /// Hermiticity budget for Lindblad runs, checked before symmetrization.
  double hermiticity_budget = 1e-10;
};

/// Frame frequencies omega_P N_P + (omega_P - omega_31) N_S on the basis diagonal.
Eigen::VectorXd rotating_frame(const ModelConfig& config, const Basis& basis);

/// Uniform grid of n_samples points on [0, t_max].
std::vector<double> uniform_grid(double t_max, std::size_t n_samples);

/// Schroedinger evolution of psi0 under H, integrated in the rotating frame.
Trajectory propagate_state(const Operator& hamiltonian, const StateVector& psi0, std::span<const double> t_grid,
                           const Eigen::VectorXd& frame, const PropagationOptions& options = {});

/// Leaky-cavity amplitudes in the reduced basis from C1(0) = 1.
Trajectory propagate_amplitudes(const ModelConfig& config, const BathSpec& bath, std::span<const double> t_grid,
                                const PropagationOptions& options = {});

/// rho' = -i[H, rho] + kappa (2 a rho a^dagger - a^dagger a rho - rho a^dagger a), column-stacked.
Trajectory propagate_lindblad(const Operator& hamiltonian, const Operator& collapse, double kappa,
                              const DensityMatrix& rho0, std::span<const double> t_grid,
                              const Eigen::VectorXd& frame, const PropagationOptions& options = {});

/// Damped single-mode model on {psi1, psi2, psi3, psi4} from rho(0) = |psi1><psi1|, kappa from config.
Trajectory propagate_damped(const ModelConfig& config, std::span<const double> t_grid,
                            const PropagationOptions& options = {});

enum class EffectiveVariant { unitary, lindblad };

/// Effective two-photon model on {psi1, psi3, psi4}.
Trajectory propagate_effective(const ModelConfig& config, std::span<const double> t_grid,
                               EffectiveVariant variant = EffectiveVariant::unitary,
                               const PropagationOptions& options = {});

/// Column-stacked Lindblad generator for dense H and a single collapse operator.
MatrixXc lindblad_superoperator(const MatrixXc& hamiltonian, const MatrixXc& collapse, double kappa);

struct InvariantSeries {
  std::string name;
  std::vector<double> values;
  double max_drift = 0.0;  ///< max |value(t) - value(0)|
  double budget = 0.0;
  bool pass = true;
};

struct InvariantReport {
  std::vector<InvariantSeries> series;
  double norm_drift = 0.0;
  double norm_budget = 0.0;
  double min_eigenvalue = 0.0;
  bool pass = true;
};

struct NamedOperator {
  std::string name;
  Operator op;
};

/// Normalized expectation values <A> / <1> of `operators` along a trajectory with
/// stored states, so norm drift is judged once, by the norm/trace budget.
InvariantReport check_invariants(const Trajectory& traj, std::span<const NamedOperator> operators,
                                 double operator_budget = 1e-9, double norm_budget = 1e-8);

}  // namespace lqed
