#include "lqed/dynamics.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdio>

namespace lqed {

namespace {

using RowSparse = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

// Overlap vector <state| in `basis`, kept sparse as (index, coefficient) pairs.
std::vector<std::pair<Index, double>> overlap_pattern(const BasisState& state, const Basis& basis) {
  LabelTerms terms;
  for (const auto& [label, c] : state.components) terms.emplace_back(c, label);
  const VectorXc v = basis.project(terms);
  std::vector<std::pair<Index, double>> out;
  for (Index i = 0; i < v.size(); ++i) {
    if (v[i] != Complex{}) out.emplace_back(i, v[i].real());
  }
  return out;
}

Complex overlap(const std::vector<std::pair<Index, double>>& pattern, const VectorXc& psi) {
  Complex acc{};
  for (const auto& [i, c] : pattern) acc += c * psi[i];
  return acc;
}

std::vector<char> stokes_mask(const Basis& basis) {
  std::vector<char> mask(static_cast<std::size_t>(basis.size()), 0);
  for (Index i = 0; i < basis.size(); ++i) {
    const auto& comps = basis[i].components;
    mask[static_cast<std::size_t>(i)] =
        !comps.empty() && std::all_of(comps.begin(), comps.end(), [](const auto& c) { return c.first.stokes != kVacuum; });
  }
  return mask;
}

MatrixXc kron(const MatrixXc& a, const MatrixXc& b) {
  MatrixXc out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  }
  return out;
}

double frame_of(const Trajectory& traj, const BasisState& state) {
  for (const auto& [i, c] : overlap_pattern(state, *traj.basis)) return traj.frame[i];
  return 0.0;
}

}  // namespace

// ---- Trajectory -------------------------------------------------------------

double Trajectory::norm_drift() const {
  double worst = 0.0;
  for (double n : norm) worst = std::max(worst, std::abs(1.0 - n));
  return worst;
}

std::vector<Complex> Trajectory::rotating_c1() const {
  const double w = frame_of(*this, psi1_state());
  std::vector<Complex> out(c1.size());
  for (std::size_t i = 0; i < c1.size(); ++i) out[i] = std::polar(1.0, w * times[i]) * c1[i];
  return out;
}

double Trajectory::psi1_coupling() const {
  const double lambda = model == "effective" ? effective_coupling(config) : config.lambda_P;
  return std::sqrt(2.0) * lambda;
}

// ---- Helpers ----------------------------------------------------------------------

Eigen::VectorXd rotating_frame(const ModelConfig& config, const Basis& basis) {
  Eigen::VectorXd frame(basis.size());
  for (Index i = 0; i < basis.size(); ++i) {
    const auto& comps = basis[i].components;
    if (comps.empty()) {
      frame[i] = 0.0;
      continue;
    }
    const ProductLabel& l = comps.front().first;
    frame[i] = config.omega_P * pump_excitations(l) + (config.omega_P - config.omega_31) * stokes_excitations(l);
  }
  return frame;
}

std::vector<double> uniform_grid(double t_max, std::size_t n_samples) {
  if (n_samples < 2) throw ConfigError("a time grid needs at least 2 samples");
  if (!(t_max > 0.0)) throw ConfigError("t_max must be > 0");
  std::vector<double> grid(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) grid[i] = t_max * static_cast<double>(i) / static_cast<double>(n_samples - 1);
  grid.back() = t_max;
  return grid;
}

// ---- Unitary propagation --------------------------------------------------------------

Trajectory propagate_state(const Operator& hamiltonian, const StateVector& psi0, std::span<const double> t_grid,
                           const Eigen::VectorXd& frame, const PropagationOptions& options) {
  const Basis& basis = *psi0.basis;
  const Index n = basis.size();
  if (hamiltonian.dim() != n || frame.size() != n || psi0.amplitudes.size() != n) {
    throw ConfigError("Hamiltonian, frame and state dimensions disagree");
  }
  if (t_grid.empty()) throw ConfigError("empty time grid");

  SparseMatrixXc shifted = hamiltonian.matrix();
  for (Index i = 0; i < n; ++i) shifted.coeffRef(i, i) -= frame[i];
  const RowSparse generator = RowSparse(-kI * shifted).pruned();

  Trajectory traj;
  traj.basis = psi0.basis;
  traj.frame = frame;
  traj.tolerances = options.tolerances;
  traj.times.assign(t_grid.begin(), t_grid.end());
  const std::size_t m = t_grid.size();
  traj.c1.resize(m);
  traj.c2.resize(m);
  traj.stokes_population.resize(m);
  traj.norm.resize(m);
  const bool store = options.store_states.value_or(n <= 512);
  if (store) traj.states.resize(m);

  const auto p1 = overlap_pattern(psi1_state(), basis);
  const auto p2 = overlap_pattern(psi2_state(), basis);
  const auto mask = stokes_mask(basis);
  VectorXc lab(n);

  auto sample = [&](std::size_t i, double t, const VectorXc& y) {
    for (Index j = 0; j < n; ++j) lab[j] = std::polar(1.0, -frame[j] * t) * y[j];
    traj.c1[i] = overlap(p1, lab);
    traj.c2[i] = overlap(p2, lab);
    double stokes = 0.0;
    for (Index j = 0; j < n; ++j) {
      if (mask[static_cast<std::size_t>(j)]) stokes += std::norm(y[j]);
    }
    traj.stokes_population[i] = stokes;
    traj.norm[i] = y.squaredNorm();
    if (store) traj.states[i] = lab;
  };
  auto rhs = [&](double, const VectorXc& y, VectorXc& dy) { dy.noalias() = generator * y; };

  traj.stats = integrate_dense(rhs, VectorXc(psi0.amplitudes), t_grid, options.tolerances, sample);

  if (traj.norm_drift() > options.norm_budget) {
    throw InvariantError("unitary norm drift " + std::to_string(traj.norm_drift()) + " exceeds budget " +
                         std::to_string(options.norm_budget));
  }
  return traj;
}

Trajectory propagate_amplitudes(const ModelConfig& config, const BathSpec& bath, std::span<const double> t_grid,
                                const PropagationOptions& options) {
  config.validate();
  if (t_grid.empty()) throw ConfigError("empty time grid");
  if (t_grid.front() != 0.0) throw ConfigError("amplitude propagation starts at t = 0");
  if (options.enforce_recurrence_guard) bath.check_horizon(t_grid.back());
  const BasisPtr basis = build_reduced_basis(bath.n_modes());
  const Operator h = full_hamiltonian(config, bath, *basis);
  Trajectory traj = propagate_state(h, basis_vector(basis, "psi1"), t_grid, rotating_frame(config, *basis), options);
  traj.model = "full";
  traj.config = config;
  return traj;
}

// ---- Lindblad propagation --------------------------------------------------------------

MatrixXc lindblad_superoperator(const MatrixXc& h, const MatrixXc& a, double kappa) {
  const Index n = h.rows();
  const MatrixXc id = MatrixXc::Identity(n, n);
  const MatrixXc ada = a.adjoint() * a;
  MatrixXc s = -kI * (kron(id, h) - kron(h.transpose(), id));
  s += kappa * (2.0 * kron(a.conjugate(), a) - kron(id, ada) - kron(ada.transpose(), id));
  return s;
}

Trajectory propagate_lindblad(const Operator& hamiltonian, const Operator& collapse, double kappa,
                              const DensityMatrix& rho0, std::span<const double> t_grid,
                              const Eigen::VectorXd& frame, const PropagationOptions& options) {
  const Index n = hamiltonian.dim();
  if (collapse.dim() != n || rho0.dim() != n || frame.size() != n) {
    throw ConfigError("Hamiltonian, collapse operator, frame and density matrix dimensions disagree");
  }
  if (!(kappa >= 0.0)) throw ConfigError("kappa must be >= 0");
  if (t_grid.empty()) throw ConfigError("empty time grid");

  const MatrixXc shifted = hamiltonian.dense() - MatrixXc(frame.cast<Complex>().asDiagonal());
  const MatrixXc super = lindblad_superoperator(shifted, collapse.dense(), kappa);

  Trajectory traj;
  traj.frame = frame;
  traj.tolerances = options.tolerances;
  traj.times.assign(t_grid.begin(), t_grid.end());
  const std::size_t m = t_grid.size();
  traj.densities.resize(m);
  traj.min_eigenvalue.resize(m);
  traj.norm.resize(m);

  double hermiticity = 0.0;
  auto project = [&](VectorXc& y) {
    Eigen::Map<MatrixXc> rho(y.data(), n, n);
    hermiticity = std::max(hermiticity, hermiticity_defect(MatrixXc(rho)));
    const MatrixXc sym = 0.5 * (rho + rho.adjoint());
    rho = sym;
    return true;
  };
  auto sample = [&](std::size_t i, double t, const VectorXc& y) {
    MatrixXc rho = Eigen::Map<const MatrixXc>(y.data(), n, n);
    for (Index c = 0; c < n; ++c) {
      for (Index r = 0; r < n; ++r) rho(r, c) *= std::polar(1.0, -(frame[r] - frame[c]) * t);
    }
    DensityMatrix dm(rho);
    traj.norm[i] = dm.trace();
    traj.min_eigenvalue[i] = dm.min_eigenvalue();
    traj.densities[i] = std::move(rho);
  };
  auto rhs = [&](double, const VectorXc& y, VectorXc& dy) { dy.noalias() = super * y; };

  VectorXc y0 = Eigen::Map<const VectorXc>(rho0.matrix().data(), n * n);
  traj.stats = integrate_dense(rhs, std::move(y0), t_grid, options.tolerances, sample, project);

  if (hermiticity > options.hermiticity_budget) {
    throw InvariantError("density matrix lost Hermiticity by " + std::to_string(hermiticity));
  }
  if (traj.norm_drift() > options.trace_budget) {
    throw InvariantError("trace drift " + std::to_string(traj.norm_drift()) + " exceeds budget " +
                         std::to_string(options.trace_budget));
  }
  const double min_eig = *std::min_element(traj.min_eigenvalue.begin(), traj.min_eigenvalue.end());
  if (min_eig < -1e-8) throw InvariantError("density matrix eigenvalue below -1e-8: " + [&] {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.3e", min_eig);
      return std::string(buf);
    }());
  return traj;
}

Trajectory propagate_damped(const ModelConfig& config, std::span<const double> t_grid,
                            const PropagationOptions& options) {
  config.validate();
  const BasisPtr basis = build_single_mode_sector();
  const Operator h = single_mode_hamiltonian(config, *basis);
  const Operator a = stokes_annihilation(*basis);
  const DensityMatrix rho0 = DensityMatrix::pure(basis_vector(basis, "psi1").amplitudes);
  Trajectory traj = propagate_lindblad(h, a, config.kappa, rho0, t_grid, rotating_frame(config, *basis), options);
  traj.basis = basis;
  traj.model = "single_mode";
  traj.config = config;
  return traj;
}

Trajectory propagate_effective(const ModelConfig& config, std::span<const double> t_grid, EffectiveVariant variant,
                               const PropagationOptions& options) {
  config.validate();
  const BasisPtr basis = build_effective_sector();
  const Operator h = effective_hamiltonian(config, *basis);
  const Eigen::VectorXd frame = rotating_frame(config, *basis);
  Trajectory traj;
  if (variant == EffectiveVariant::unitary) {
    traj = propagate_state(h, basis_vector(basis, "psi1"), t_grid, frame, options);
  } else {
    const DensityMatrix rho0 = DensityMatrix::pure(basis_vector(basis, "psi1").amplitudes);
    traj = propagate_lindblad(h, stokes_annihilation(*basis), config.kappa, rho0, t_grid, frame, options);
    traj.basis = basis;
  }
  traj.model = "effective";
  traj.config = config;
  return traj;
}

// ---- Invariants --------------------------------------------------------------------

InvariantReport check_invariants(const Trajectory& traj, std::span<const NamedOperator> operators,
                                 double operator_budget, double norm_budget) {
  InvariantReport report;
  report.norm_budget = norm_budget;
  report.norm_drift = traj.norm_drift();
  report.pass = report.norm_drift <= norm_budget;
  if (!traj.min_eigenvalue.empty()) {
    report.min_eigenvalue = *std::min_element(traj.min_eigenvalue.begin(), traj.min_eigenvalue.end());
    report.pass = report.pass && report.min_eigenvalue >= -1e-8;
  }
  const bool density = traj.is_density();
  if (!operators.empty() && !density && traj.states.size() != traj.times.size()) {
    throw ConfigError("invariant check needs a trajectory with stored states");
  }
  for (const auto& [name, op] : operators) {
    const Index n = density ? traj.densities.front().rows() : traj.states.front().size();
    if (op.dim() != n) throw ConfigError("operator '" + name + "' does not match the trajectory basis");
    InvariantSeries s;
    s.name = name;
    s.budget = operator_budget;
    s.values.reserve(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) {
      double v;
      if (density) {
        v = (op.matrix() * traj.densities[i]).trace().real() / traj.densities[i].trace().real();
      } else {
        v = traj.states[i].dot(op.matrix() * traj.states[i]).real() / traj.states[i].squaredNorm();
      }
      s.values.push_back(v);
      s.max_drift = std::max(s.max_drift, std::abs(v - s.values.front()));
    }
    s.pass = s.max_drift <= operator_budget;
    report.pass = report.pass && s.pass;
    report.series.push_back(std::move(s));
  }
  return report;
}

}  // namespace lqed
