#pragma once

#include "lqed/types.hpp"

#include <compare>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace lqed {

inline constexpr int kVacuum = -1;

/// Bare product state |atom1, atom2> (x) |n_pump> (x) |stokes>.
/// Atomic levels are 1 (ground), 2 (upper), 3 (metastable). `stokes` is
/// either kVacuum or the index of the single occupied Stokes mode.
struct ProductLabel {
  int atom1 = 1;
  int atom2 = 1;
  int pump = 0;
  int stokes = kVacuum;

  [[nodiscard]] int level(int atom) const { return atom == 1 ? atom1 : atom2; }
  [[nodiscard]] ProductLabel with_level(int atom, int lvl) const {
    ProductLabel out = *this;
    (atom == 1 ? out.atom1 : out.atom2) = lvl;
    return out;
  }
  [[nodiscard]] std::uint64_t key() const;
  [[nodiscard]] std::string to_string() const;

  auto operator<=>(const ProductLabel&) const = default;
};

/// Total excitation count N_P = n_pump + #atoms in {2,3}.
int pump_excitations(const ProductLabel& label);
/// N_S = n_stokes - #atoms in 3.
int stokes_excitations(const ProductLabel& label);

/// A basis vector given as a real superposition of product states.
struct BasisState {
  std::string name;
  std::vector<std::pair<ProductLabel, double>> components;
};

/// Ordered orthonormal set of basis states. Immutable after construction.
class Basis {
public:
  Basis(std::vector<BasisState> states, int n_stokes_modes);

  [[nodiscard]] Index size() const { return static_cast<Index>(states_.size()); }
  [[nodiscard]] int n_stokes_modes() const { return n_stokes_modes_; }
  [[nodiscard]] const BasisState& operator[](Index i) const { return states_[static_cast<std::size_t>(i)]; }
  [[nodiscard]] const std::vector<BasisState>& states() const { return states_; }

  [[nodiscard]] std::optional<Index> find(std::string_view name) const;
  /// Throws ConfigError if no state carries `name`.
  [[nodiscard]] Index index_of(std::string_view name) const;

  /// Basis states that contain `label`, with the component coefficient.
  [[nodiscard]] std::span<const std::pair<Index, double>> owners(const ProductLabel& label) const;

  /// Coordinates of a product-label superposition in this basis (orthogonal projection).
  [[nodiscard]] VectorXc project(std::span<const std::pair<Complex, ProductLabel>> terms) const;

private:
  std::vector<BasisState> states_;
  int n_stokes_modes_;
  std::unordered_map<std::uint64_t, std::vector<std::pair<Index, double>>> owners_;
};

using BasisPtr = std::shared_ptr<const Basis>;

/// Symmetric single-excitation basis {psi1, psi2+, psi3k+ (k ascending)}.
BasisPtr build_reduced_basis(int n_stokes_modes);

/// Complete product basis with at most one Stokes photon. n_stokes_modes <= 4.
BasisPtr build_full_basis(int n_stokes_modes);

/// Single-Stokes-mode sector {psi1, psi2, psi3, psi4}.
BasisPtr build_single_mode_sector();

/// Effective two-photon sector {psi1, psi3, psi4} (level 2 eliminated).
BasisPtr build_effective_sector();

/// Antisymmetric partners {psi2-, psi3k-} that the interaction never reaches.
std::vector<BasisState> antisymmetric_states(int n_stokes_modes);

// Named states shared by the constructors above.
BasisState psi1_state();
BasisState psi2_state(int sign = +1);
BasisState psi3_state(int mode, int sign = +1);
BasisState psi4_state();

/// Amplitude vector over a labelled basis. The norm is reported, never rescaled.
struct StateVector {
  BasisPtr basis;
  VectorXc amplitudes;

  [[nodiscard]] double norm_squared() const { return amplitudes.squaredNorm(); }
  /// Coordinates of this state in another basis (exact when `target` spans it).
  [[nodiscard]] StateVector expressed_in(const BasisPtr& target) const;
};

StateVector basis_vector(const BasisPtr& basis, std::string_view name);
StateVector embed(const BasisState& state, const BasisPtr& basis);

/// Sparse operator over a basis. When flagged Hermitian the flag is checked
/// on construction (entrywise |H - H^dagger| < 1e-12).
class Operator {
public:
  Operator() = default;
  Operator(SparseMatrixXc matrix, bool hermitian);

  [[nodiscard]] Index dim() const { return matrix_.rows(); }
  [[nodiscard]] bool hermitian() const { return hermitian_; }
  [[nodiscard]] const SparseMatrixXc& matrix() const { return matrix_; }
  [[nodiscard]] MatrixXc dense() const { return MatrixXc(matrix_); }
  [[nodiscard]] Operator adjoint() const;
  [[nodiscard]] VectorXc apply(const VectorXc& v) const { return matrix_ * v; }

  friend Operator operator*(const Operator& a, const Operator& b);

private:
  SparseMatrixXc matrix_;
  bool hermitian_ = false;
};

/// Largest entrywise |A - A^dagger|.
double hermiticity_defect(const SparseMatrixXc& m);
double hermiticity_defect(const MatrixXc& m);

/// Max |[A, B]| entrywise.
double commutator_norm(const Operator& a, const Operator& b);

/// Density matrix with its physical-validity diagnostics.
class DensityMatrix {
public:
  DensityMatrix() = default;
  explicit DensityMatrix(MatrixXc rho) : rho_(std::move(rho)) {}

  static DensityMatrix pure(const VectorXc& psi) { return DensityMatrix(psi * psi.adjoint()); }

  [[nodiscard]] const MatrixXc& matrix() const { return rho_; }
  [[nodiscard]] Index dim() const { return rho_.rows(); }
  [[nodiscard]] double trace() const { return rho_.trace().real(); }
  [[nodiscard]] double hermiticity_error() const { return hermiticity_defect(rho_); }
  [[nodiscard]] double min_eigenvalue() const;

  /// Throws InvariantError when hermiticity > 1e-10, |1 - tr| > 1e-8 or min eig < -1e-8.
  void validate() const;

private:
  MatrixXc rho_;
};

// ---- Operators defined by their action on product labels --------------------

using LabelTerms = std::vector<std::pair<Complex, ProductLabel>>;
/// Appends A|label> to `out` as a list of (coefficient, label) pairs.
using LabelAction = std::function<void(const ProductLabel&, LabelTerms&)>;

/// Matrix of P A P, P the projector onto span(basis).
Operator represent(const Basis& basis, const LabelAction& action, bool hermitian);

/// R_ij(f) = |i_f><j_f|, atom f in {1,2}, levels in {1,2,3}.
Operator transition_operator(int atom, int i, int j, const Basis& basis);
Operator pump_annihilation(const Basis& basis);
Operator stokes_annihilation(int mode, const Basis& basis);
/// Sum over modes of a_Sk, i.e. a_S when the basis has one Stokes mode.
Operator stokes_annihilation(const Basis& basis);

}  // namespace lqed
