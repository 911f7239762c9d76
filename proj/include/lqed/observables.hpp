#pragma once

#include "lqed/dynamics.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lqed {

struct ObservableSeries {
  std::vector<double> times;
  std::vector<double> values;
  std::string name;
  std::map<std::string, std::string> metadata;
  /// Samples pulled back into [0, 1]; each lay within 1e-9 of the interval.
  std::size_t clamped = 0;

  [[nodiscard]] std::size_t size() const { return values.size(); }
};

/// Both forms of the entanglement probability of an amplitude trajectory.
struct EntanglementSeries {
  /// Stokes-photon population, the sum of |C3k|^2.
  ObservableSeries direct;
  /// 1 - |C1|^2 - |i C1' - omega_P C1|^2 / (2 lambda_P^2), with C1' from finite
  /// differences. Only defined for the full model, whose psi1 partner is psi2.
  ObservableSeries derivative;
  std::vector<double> discrepancy;     ///< |direct - derivative|
  std::vector<double> fd_error;        ///< truncation estimate propagated into the derivative form
  double max_discrepancy = 0.0;
  double max_fd_error = 0.0;
};

/// Clamps probabilities into [0, 1]. Excursions beyond 1e-9 raise InvariantError.
void clamp_probabilities(ObservableSeries& series, double slack = 1e-9);

/// Derivative of uniformly sampled values: fourth-order centred stencil in the
/// interior, one-sided fourth-order stencils at the two ends. `error` receives
/// the difference to the next-higher-order stencil where one fits.
template <typename T>
std::vector<T> finite_difference(std::span<const T> values, double h, std::vector<double>* error = nullptr);

EntanglementSeries entanglement_probability(const Trajectory& traj);

/// <name|rho(t)|name> for a density trajectory; ConfigError when the basis lacks `name`.
ObservableSeries population(const Trajectory& traj, std::string_view name);
ObservableSeries rho44(const Trajectory& traj);

/// Sum over field configurations f of |<(1) x f|.|>|^2 as a matrix on the basis,
/// where (1) = (|3,1> + |1,3>) / sqrt(2).
MatrixXc target_projector(const Basis& basis);

/// Weight of the entangled atomic state (1) with the field traced out.
double fidelity_to_target(const StateVector& state);
double fidelity_to_target(const DensityMatrix& rho, const Basis& basis);

struct StairsOptions {
  /// 2 pi / epsilon of the model; sets the default smoothing width and the grid check.
  double rabi_period = 0.0;
  /// Gaussian standard deviation; rabi_period / 10 when unset.
  std::optional<double> smoothing_width;
  /// Peaks count when their prominence exceeds this fraction of the largest smoothed derivative.
  double relative_prominence = 0.05;
};

struct StairsReport {
  int plateau_count = 0;
  std::vector<double> peak_times;
  std::vector<double> prominences;
  double smoothing_width = 0.0;
  double threshold = 0.0;
};

/// Counts local maxima of the Gaussian-smoothed derivative of a rising series.
/// ConfigError when the grid has fewer than 10 points per Rabi period or is not uniform.
StairsReport stairs_metric(const ObservableSeries& series, const StairsOptions& options);

/// Least-squares fit of log(1 - values) = log A - rate t over samples with t >= t_from.
struct ExponentialFit {
  double rate = 0.0;
  double amplitude = 0.0;
  std::size_t samples = 0;
};
ExponentialFit fit_approach_rate(const ObservableSeries& series, double t_from, double floor = 1e-12);

}  // namespace lqed
