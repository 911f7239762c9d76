#include "lqed/observables.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace lqed {

namespace {

double uniform_step(std::span<const double> t) {
  if (t.size() < 2) throw ConfigError("a uniform grid needs at least 2 samples");
  const double h = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
  const double slack = 1e-9 * std::max(std::abs(t.back()), h);
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (std::abs(t[i] - t[i - 1] - h) > slack) throw ConfigError("finite differences need a uniform time grid");
  }
  return h;
}

template <typename T>
T forward4(std::span<const T> f, std::size_t i, double h) {
  return (-25.0 * f[i] + 48.0 * f[i + 1] - 36.0 * f[i + 2] + 16.0 * f[i + 3] - 3.0 * f[i + 4]) / (12.0 * h);
}

template <typename T>
T forward5(std::span<const T> f, std::size_t i, double h) {
  return (-137.0 * f[i] + 300.0 * f[i + 1] - 300.0 * f[i + 2] + 200.0 * f[i + 3] - 75.0 * f[i + 4] +
          12.0 * f[i + 5]) /
         (60.0 * h);
}

template <typename T>
T backward4(std::span<const T> f, std::size_t i, double h) {
  return (25.0 * f[i] - 48.0 * f[i - 1] + 36.0 * f[i - 2] - 16.0 * f[i - 3] + 3.0 * f[i - 4]) / (12.0 * h);
}

template <typename T>
T backward5(std::span<const T> f, std::size_t i, double h) {
  return (137.0 * f[i] - 300.0 * f[i - 1] + 300.0 * f[i - 2] - 200.0 * f[i - 3] + 75.0 * f[i - 4] -
          12.0 * f[i - 5]) /
         (60.0 * h);
}

template <typename T>
T centred4(std::span<const T> f, std::size_t i, double h) {
  return (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h);
}

template <typename T>
T centred6(std::span<const T> f, std::size_t i, double h) {
  return (-f[i - 3] + 9.0 * f[i - 2] - 45.0 * f[i - 1] + 45.0 * f[i + 1] - 9.0 * f[i + 2] + f[i + 3]) / (60.0 * h);
}

std::vector<double> gaussian_smooth(const std::vector<double>& v, double sigma_samples) {
  const auto n = static_cast<long>(v.size());
  const long reach = static_cast<long>(std::ceil(4.0 * sigma_samples));
  std::vector<double> kernel(static_cast<std::size_t>(2 * reach + 1));
  for (long j = -reach; j <= reach; ++j) {
    const double x = static_cast<double>(j) / sigma_samples;
    kernel[static_cast<std::size_t>(j + reach)] = std::exp(-0.5 * x * x);
  }
  std::vector<double> out(v.size());
  for (long i = 0; i < n; ++i) {
    double acc = 0.0;
    double weight = 0.0;
    for (long j = std::max(-reach, -i); j <= std::min(reach, n - 1 - i); ++j) {
      const double w = kernel[static_cast<std::size_t>(j + reach)];
      acc += w * v[static_cast<std::size_t>(i + j)];
      weight += w;
    }
    out[static_cast<std::size_t>(i)] = acc / weight;
  }
  return out;
}

}  // namespace

template <typename T>
std::vector<T> finite_difference(std::span<const T> f, double h, std::vector<double>* error) {
  const std::size_t n = f.size();
  if (n < 7) throw ConfigError("finite differences need at least 7 samples");
  if (!(h > 0.0)) throw ConfigError("finite-difference step must be > 0");
  std::vector<T> d(n);
  std::vector<double> err(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i < 2) {
      d[i] = forward4(f, i, h);
      err[i] = std::abs(d[i] - forward5(f, i, h));
    } else if (i + 2 >= n) {
      d[i] = backward4(f, i, h);
      err[i] = std::abs(d[i] - backward5(f, i, h));
    } else {
      d[i] = centred4(f, i, h);
      if (i >= 3 && i + 3 < n) {
        err[i] = std::abs(d[i] - centred6(f, i, h));
      } else {
        err[i] = std::abs(d[i] - (i < 3 ? forward5(f, i, h) : backward5(f, i, h)));
      }
    }
  }
  if (error != nullptr) *error = std::move(err);
  return d;
}

template std::vector<double> finite_difference<double>(std::span<const double>, double, std::vector<double>*);
template std::vector<Complex> finite_difference<Complex>(std::span<const Complex>, double, std::vector<double>*);

void clamp_probabilities(ObservableSeries& series, double slack) {
  for (std::size_t i = 0; i < series.values.size(); ++i) {
    double& v = series.values[i];
    if (!std::isfinite(v) || v < -slack || v > 1.0 + slack) {
      throw InvariantError(series.name + " = " + std::to_string(v) + " outside [0, 1] at t = " +
                           std::to_string(series.times[i]));
    }
    if (v < 0.0 || v > 1.0) {
      v = std::clamp(v, 0.0, 1.0);
      ++series.clamped;
    }
  }
  series.metadata["clamped_samples"] = std::to_string(series.clamped);
}

EntanglementSeries entanglement_probability(const Trajectory& traj) {
  if (traj.is_density() || traj.stokes_population.size() != traj.size() || traj.c1.size() != traj.size()) {
    throw ConfigError("entanglement probability needs an amplitude trajectory");
  }
  EntanglementSeries out;
  out.direct.times = traj.times;
  out.direct.values = traj.stokes_population;
  out.direct.name = "P_entangled_direct";
  out.direct.metadata["model"] = traj.model;
  clamp_probabilities(out.direct);

  const double coupling = traj.model == "full" ? traj.psi1_coupling() : 0.0;
  if (coupling <= 0.0) return out;

  // |i C1' - omega_P C1| equals |d/dt| of the rotating-frame amplitude.
  const double h = uniform_step(traj.times);
  const std::vector<Complex> rot = traj.rotating_c1();
  std::vector<double> slope_error;
  const std::vector<Complex> slope = finite_difference<Complex>(rot, h, &slope_error);
  const double c2 = coupling * coupling;

  out.derivative.times = traj.times;
  out.derivative.name = "P_entangled_derivform";
  out.derivative.metadata["model"] = traj.model;
  out.derivative.metadata["stencil"] = "fourth-order finite differences";
  const std::size_t n = traj.size();
  out.derivative.values.resize(n);
  out.discrepancy.resize(n);
  out.fd_error.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = std::abs(slope[i]);
    out.derivative.values[i] = 1.0 - std::norm(rot[i]) - s * s / c2;
    out.fd_error[i] = (2.0 * s * slope_error[i] + slope_error[i] * slope_error[i]) / c2;
    out.discrepancy[i] = std::abs(out.derivative.values[i] - out.direct.values[i]);
    out.max_discrepancy = std::max(out.max_discrepancy, out.discrepancy[i]);
    out.max_fd_error = std::max(out.max_fd_error, out.fd_error[i]);
  }
  return out;
}

ObservableSeries population(const Trajectory& traj, std::string_view name) {
  if (!traj.is_density()) throw ConfigError("populations need a density-matrix trajectory");
  const Index k = traj.basis->index_of(name);
  ObservableSeries out;
  out.times = traj.times;
  out.name = "rho_" + std::string(name);
  out.metadata["model"] = traj.model;
  out.values.reserve(traj.size());
  for (const MatrixXc& rho : traj.densities) out.values.push_back(rho(k, k).real());
  clamp_probabilities(out);
  return out;
}

ObservableSeries rho44(const Trajectory& traj) {
  ObservableSeries out = population(traj, "psi4");
  out.name = "rho44";
  return out;
}

MatrixXc target_projector(const Basis& basis) {
  // One coordinate vector per field configuration (pump, stokes).
  std::map<std::pair<int, int>, VectorXc> fields;
  const double amp = 1.0 / std::numbers::sqrt2;
  for (Index i = 0; i < basis.size(); ++i) {
    for (const auto& [label, c] : basis[i].components) {
      const bool entangled = (label.atom1 == 3 && label.atom2 == 1) || (label.atom1 == 1 && label.atom2 == 3);
      if (!entangled) continue;
      auto [it, fresh] = fields.try_emplace({label.pump, label.stokes}, VectorXc::Zero(basis.size()));
      it->second[i] += c * amp;
    }
  }
  MatrixXc p = MatrixXc::Zero(basis.size(), basis.size());
  for (const auto& [key, v] : fields) p += v * v.adjoint();
  return p;
}

double fidelity_to_target(const StateVector& state) {
  const MatrixXc p = target_projector(*state.basis);
  return state.amplitudes.dot(p * state.amplitudes).real();
}

double fidelity_to_target(const DensityMatrix& rho, const Basis& basis) {
  if (rho.dim() != basis.size()) throw ConfigError("density matrix does not match the basis");
  return (target_projector(basis) * rho.matrix()).trace().real();
}

StairsReport stairs_metric(const ObservableSeries& series, const StairsOptions& options) {
  if (!(options.rabi_period > 0.0)) throw ConfigError("stairs metric needs a positive Rabi period");
  const double h = uniform_step(series.times);
  if (options.rabi_period / h < 10.0) {
    throw ConfigError("grid too coarse for the stairs metric: " + std::to_string(options.rabi_period / h) +
                      " points per Rabi period (needs 10)");
  }
  StairsReport report;
  report.smoothing_width = options.smoothing_width.value_or(options.rabi_period / 10.0);
  if (!(report.smoothing_width > 0.0)) throw ConfigError("smoothing width must be > 0");

  const std::vector<double> slope = finite_difference<double>(series.values, h);
  const std::vector<double> d = gaussian_smooth(slope, report.smoothing_width / h);
  const double top = *std::max_element(d.begin(), d.end());
  report.threshold = options.relative_prominence * std::max(top, 0.0);

  const std::size_t n = d.size();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(d[i] > d[i - 1] && d[i] >= d[i + 1])) continue;
    // Prominence: height above the higher of the two lowest points separating
    // this peak from taller ones (or the ends).
    double left = d[i];
    for (std::size_t j = i; j-- > 0 && d[j] <= d[i];) left = std::min(left, d[j]);
    double right = d[i];
    for (std::size_t j = i + 1; j < n && d[j] <= d[i]; ++j) right = std::min(right, d[j]);
    const double prominence = d[i] - std::max(left, right);
    if (prominence > report.threshold) {
      report.peak_times.push_back(series.times[i]);
      report.prominences.push_back(prominence);
    }
  }
  report.plateau_count = static_cast<int>(report.peak_times.size());
  return report;
}

ExponentialFit fit_approach_rate(const ObservableSeries& series, double t_from, double floor) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t m = 0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double gap = 1.0 - series.values[i];
    if (series.times[i] < t_from || gap <= floor) continue;
    const double x = series.times[i];
    const double y = std::log(gap);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m < 2) throw NumericalError("exponential fit needs at least 2 samples above the floor");
  const double md = static_cast<double>(m);
  const double slope = (md * sxy - sx * sy) / (md * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / md;
  return {-slope, std::exp(intercept), m};
}

}  // namespace lqed
