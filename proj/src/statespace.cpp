#include "lqed/statespace.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <sstream>

namespace lqed {

namespace {

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

void check_level(int lvl) {
  if (lvl < 1 || lvl > 3) throw ConfigError("atomic level index must be 1, 2 or 3");
}

void check_atom(int atom) {
  if (atom != 1 && atom != 2) throw ConfigError("atom index must be 1 or 2");
}

}  // namespace

std::uint64_t ProductLabel::key() const {
  auto u = [](int v) { return static_cast<std::uint64_t>(v); };
  return (u(atom1) << 60) | (u(atom2) << 56) | (u(pump) << 52) | u(stokes + 1);
}

std::string ProductLabel::to_string() const {
  std::ostringstream os;
  os << '|' << atom1 << ',' << atom2 << ">|" << pump << "P>|";
  if (stokes == kVacuum) {
    os << "0S>";
  } else {
    os << "1S" << stokes << '>';
  }
  return os.str();
}

int pump_excitations(const ProductLabel& l) {
  return l.pump + (l.atom1 >= 2 ? 1 : 0) + (l.atom2 >= 2 ? 1 : 0);
}

int stokes_excitations(const ProductLabel& l) {
  return (l.stokes == kVacuum ? 0 : 1) - (l.atom1 == 3 ? 1 : 0) - (l.atom2 == 3 ? 1 : 0);
}

// ---- Basis ------------------------------------------------------------------

Basis::Basis(std::vector<BasisState> states, int n_stokes_modes)
    : states_(std::move(states)), n_stokes_modes_(n_stokes_modes) {
  for (std::size_t i = 0; i < states_.size(); ++i) {
    for (const auto& [label, c] : states_[i].components) {
      owners_[label.key()].emplace_back(static_cast<Index>(i), c);
    }
  }
}

std::optional<Index> Basis::find(std::string_view name) const {
  for (std::size_t i = 0; i < states_.size(); ++i) {
    if (states_[i].name == name) return static_cast<Index>(i);
  }
  return std::nullopt;
}

Index Basis::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw ConfigError("basis has no state named '" + std::string(name) + "'");
}

std::span<const std::pair<Index, double>> Basis::owners(const ProductLabel& label) const {
  auto it = owners_.find(label.key());
  if (it == owners_.end()) return {};
  return it->second;
}

VectorXc Basis::project(std::span<const std::pair<Complex, ProductLabel>> terms) const {
  VectorXc out = VectorXc::Zero(size());
  for (const auto& [c, label] : terms) {
    for (const auto& [i, coef] : owners(label)) out[i] += coef * c;
  }
  return out;
}

BasisState psi1_state() {
  return {"psi1", {{ProductLabel{1, 1, 1, kVacuum}, 1.0}}};
}

BasisState psi2_state(int sign) {
  return {sign > 0 ? "psi2+" : "psi2-",
          {{ProductLabel{1, 2, 0, kVacuum}, kInvSqrt2},
           {ProductLabel{2, 1, 0, kVacuum}, sign > 0 ? kInvSqrt2 : -kInvSqrt2}}};
}

BasisState psi3_state(int mode, int sign) {
  return {"psi3[" + std::to_string(mode) + "]" + (sign > 0 ? "+" : "-"),
          {{ProductLabel{1, 3, 0, mode}, kInvSqrt2},
           {ProductLabel{3, 1, 0, mode}, sign > 0 ? kInvSqrt2 : -kInvSqrt2}}};
}

BasisState psi4_state() {
  return {"psi4", {{ProductLabel{1, 3, 0, kVacuum}, kInvSqrt2}, {ProductLabel{3, 1, 0, kVacuum}, kInvSqrt2}}};
}

BasisPtr build_reduced_basis(int n_stokes_modes) {
  if (n_stokes_modes < 0) throw ConfigError("n_stokes_modes must be >= 0");
  std::vector<BasisState> states;
  states.reserve(static_cast<std::size_t>(n_stokes_modes) + 2);
  states.push_back(psi1_state());
  states.push_back(psi2_state());
  for (int k = 0; k < n_stokes_modes; ++k) states.push_back(psi3_state(k));
  return std::make_shared<const Basis>(std::move(states), n_stokes_modes);
}

BasisPtr build_full_basis(int n_stokes_modes) {
  if (n_stokes_modes < 0) throw ConfigError("n_stokes_modes must be >= 0");
  if (n_stokes_modes > 4) throw ConfigError("full product basis is limited to 4 Stokes modes");
  std::vector<BasisState> states;
  for (int a1 = 1; a1 <= 3; ++a1) {
    for (int a2 = 1; a2 <= 3; ++a2) {
      for (int p = 0; p <= 1; ++p) {
        for (int s = kVacuum; s < n_stokes_modes; ++s) {
          ProductLabel l{a1, a2, p, s};
          states.push_back({l.to_string(), {{l, 1.0}}});
        }
      }
    }
  }
  return std::make_shared<const Basis>(std::move(states), n_stokes_modes);
}

BasisPtr build_single_mode_sector() {
  BasisState psi2 = psi2_state();
  psi2.name = "psi2";
  BasisState psi3 = psi3_state(0);
  psi3.name = "psi3";
  return std::make_shared<const Basis>(std::vector<BasisState>{psi1_state(), psi2, psi3, psi4_state()}, 1);
}

BasisPtr build_effective_sector() {
  BasisState psi3 = psi3_state(0);
  psi3.name = "psi3";
  return std::make_shared<const Basis>(std::vector<BasisState>{psi1_state(), psi3, psi4_state()}, 1);
}

std::vector<BasisState> antisymmetric_states(int n_stokes_modes) {
  std::vector<BasisState> out{psi2_state(-1)};
  for (int k = 0; k < n_stokes_modes; ++k) out.push_back(psi3_state(k, -1));
  return out;
}

// ---- StateVector --------------------------------------------------------------

StateVector StateVector::expressed_in(const BasisPtr& target) const {
  LabelTerms terms;
  for (Index i = 0; i < basis->size(); ++i) {
    if (amplitudes[i] == Complex{}) continue;
    for (const auto& [label, c] : (*basis)[i].components) terms.emplace_back(amplitudes[i] * c, label);
  }
  return {target, target->project(terms)};
}

StateVector basis_vector(const BasisPtr& basis, std::string_view name) {
  VectorXc v = VectorXc::Zero(basis->size());
  v[basis->index_of(name)] = 1.0;
  return {basis, std::move(v)};
}

StateVector embed(const BasisState& state, const BasisPtr& basis) {
  LabelTerms terms;
  for (const auto& [label, c] : state.components) terms.emplace_back(c, label);
  return {basis, basis->project(terms)};
}

// ---- Operator -----------------------------------------------------------------

double hermiticity_defect(const SparseMatrixXc& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  SparseMatrixXc d = m - SparseMatrixXc(m.adjoint());
  double worst = 0.0;
  for (Index k = 0; k < d.outerSize(); ++k) {
    for (SparseMatrixXc::InnerIterator it(d, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
  }
  return worst;
}

double hermiticity_defect(const MatrixXc& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  if (m.size() == 0) return 0.0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

Operator::Operator(SparseMatrixXc matrix, bool hermitian) : matrix_(std::move(matrix)), hermitian_(hermitian) {
  matrix_.prune(Complex{0.0, 0.0});
  matrix_.makeCompressed();
  if (hermitian_ && hermiticity_defect(matrix_) >= 1e-12) {
    throw InvariantError("operator flagged Hermitian fails |H - H^dagger| < 1e-12");
  }
}

Operator Operator::adjoint() const { return Operator(SparseMatrixXc(matrix_.adjoint()), hermitian_); }

Operator operator*(const Operator& a, const Operator& b) {
  if (a.dim() != b.dim()) throw ConfigError("operator dimension mismatch");
  return Operator(SparseMatrixXc(a.matrix_ * b.matrix_), false);
}

double commutator_norm(const Operator& a, const Operator& b) {
  if (a.dim() != b.dim()) throw ConfigError("operator dimension mismatch");
  SparseMatrixXc c = a.matrix() * b.matrix() - b.matrix() * a.matrix();
  double worst = 0.0;
  for (Index k = 0; k < c.outerSize(); ++k) {
    for (SparseMatrixXc::InnerIterator it(c, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
  }
  return worst;
}

// ---- DensityMatrix --------------------------------------------------------------

double DensityMatrix::min_eigenvalue() const {
  MatrixXc h = 0.5 * (rho_ + rho_.adjoint());
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void DensityMatrix::validate() const {
  if (hermiticity_error() > 1e-10) throw InvariantError("density matrix is not Hermitian within 1e-10");
  if (std::abs(1.0 - trace()) > 1e-8) throw InvariantError("density matrix trace deviates from 1 by more than 1e-8");
  if (min_eigenvalue() < -1e-8) throw InvariantError("density matrix has an eigenvalue below -1e-8");
}

// ---- Label actions ------------------------------------------------------------------

Operator represent(const Basis& basis, const LabelAction& action, bool hermitian) {
  const Index n = basis.size();
  std::vector<Eigen::Triplet<Complex>> triplets;
  LabelTerms image;
  std::unordered_map<Index, Complex> column;
  for (Index j = 0; j < n; ++j) {
    image.clear();
    for (const auto& [label, c] : basis[j].components) {
      const std::size_t before = image.size();
      action(label, image);
      for (std::size_t t = before; t < image.size(); ++t) image[t].first *= c;
    }
    column.clear();
    for (const auto& [c, label] : image) {
      for (const auto& [i, coef] : basis.owners(label)) column[i] += coef * c;
    }
    for (const auto& [i, v] : column) {
      if (v != Complex{}) triplets.emplace_back(i, j, v);
    }
  }
  SparseMatrixXc m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return Operator(std::move(m), hermitian);
}

Operator transition_operator(int atom, int i, int j, const Basis& basis) {
  check_atom(atom);
  check_level(i);
  check_level(j);
  return represent(
      basis,
      [=](const ProductLabel& l, LabelTerms& out) {
        if (l.level(atom) == j) out.emplace_back(1.0, l.with_level(atom, i));
      },
      i == j);
}

Operator pump_annihilation(const Basis& basis) {
  return represent(
      basis,
      [](const ProductLabel& l, LabelTerms& out) {
        if (l.pump == 1) {
          ProductLabel r = l;
          r.pump = 0;
          out.emplace_back(1.0, r);
        }
      },
      false);
}

Operator stokes_annihilation(int mode, const Basis& basis) {
  if (mode < 0 || mode >= basis.n_stokes_modes()) throw ConfigError("Stokes mode index out of range");
  return represent(
      basis,
      [=](const ProductLabel& l, LabelTerms& out) {
        if (l.stokes == mode) {
          ProductLabel r = l;
          r.stokes = kVacuum;
          out.emplace_back(1.0, r);
        }
      },
      false);
}

Operator stokes_annihilation(const Basis& basis) {
  return represent(
      basis,
      [](const ProductLabel& l, LabelTerms& out) {
        if (l.stokes != kVacuum) {
          ProductLabel r = l;
          r.stokes = kVacuum;
          out.emplace_back(1.0, r);
        }
      },
      false);
}

}  // namespace lqed
