#include "oracle.hpp"

#include "lqed/dynamics.hpp"
#include "lqed/statespace.hpp"

#include <doctest.h>

#include <random>

using namespace lqed;

TEST_CASE("reduced basis holds psi1, psi2+ and one psi3k+ per mode") {
  const BasisPtr b = build_reduced_basis(4);
  CHECK(b->size() == 6);
  CHECK(b->index_of("psi1") == 0);
  CHECK(b->index_of("psi2+") == 1);
  CHECK(b->find("psi3[3]+").has_value());
  CHECK_FALSE(b->find("psi2-").has_value());
  CHECK_THROWS_AS((void)b->index_of("nope"), ConfigError);
}

TEST_CASE("full basis is the product space: 9 atomic x 2 pump x (1 + N) stokes") {
  for (int n : {0, 1, 2}) CHECK(build_full_basis(n)->size() == 18 * (1 + n));
}

TEST_CASE("reduced basis states are orthonormal in the full basis") {
  const BasisPtr full = build_full_basis(3);
  const BasisPtr reduced = build_reduced_basis(3);
  MatrixXc v(full->size(), reduced->size());
  for (Index j = 0; j < reduced->size(); ++j) v.col(j) = embed((*reduced)[j], full).amplitudes;
  CHECK((v.adjoint() * v - MatrixXc::Identity(reduced->size(), reduced->size())).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("antisymmetric states are orthogonal to the symmetric sector") {
  const BasisPtr full = build_full_basis(2);
  const BasisPtr reduced = build_reduced_basis(2);
  for (const BasisState& a : antisymmetric_states(2)) {
    const VectorXc va = embed(a, full).amplitudes;
    CHECK(va.norm() == doctest::Approx(1.0).epsilon(1e-15));
    for (const BasisState& s : reduced->states()) CHECK(std::abs(va.dot(embed(s, full).amplitudes)) < 1e-15);
  }
}

TEST_CASE("transition operators compose like |i><j|") {
  const BasisPtr full = build_full_basis(0);
  const Operator r12 = transition_operator(1, 1, 2, *full);
  const Operator r21 = transition_operator(1, 2, 1, *full);
  const Operator r11 = transition_operator(1, 1, 1, *full);
  const MatrixXc prod = (r12 * r21).dense();
  CHECK((prod - r11.dense()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((r12.adjoint().dense() - r21.dense()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("a Hermitian flag on a non-Hermitian matrix is rejected") {
  SparseMatrixXc m(2, 2);
  m.insert(0, 1) = 1.0;
  CHECK_THROWS_AS(Operator(m, true), InvariantError);
  CHECK_NOTHROW(Operator(m, false));
}

TEST_CASE("N_P and N_S commute with H entrywise for 100 random configurations") {
  std::mt19937_64 rng(20261016);
  const BasisPtr full = build_full_basis(2);
  const auto [np, ns] = integrals_of_motion(*full);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const ModelConfig c = oracle::random_config(rng);
    const BathSpec bath = discretize_bath(0.5, 3.0, 2, BathProfile::flat, c.omega_S());
    const Operator h = full_hamiltonian(c, bath, *full);
    worst = std::max({worst, commutator_norm(h, np), commutator_norm(h, ns)});
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("N_P and N_S take the value (1, 0) on the reduced basis") {
  const BasisPtr reduced = build_reduced_basis(3);
  const auto [np, ns] = integrals_of_motion(*reduced);
  const MatrixXc p = np.dense();
  const MatrixXc s = ns.dense();
  CHECK((p - MatrixXc::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(s.cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("density matrix diagnostics") {
  VectorXc psi = VectorXc::Zero(3);
  psi[0] = 1.0;
  const DensityMatrix pure = DensityMatrix::pure(psi);
  CHECK(pure.trace() == doctest::Approx(1.0));
  CHECK(pure.min_eigenvalue() > -1e-15);
  CHECK_NOTHROW(pure.validate());
  MatrixXc bad = pure.matrix();
  bad(1, 1) = -1e-6;
  bad(0, 0) = 1.0 + 1e-6;
  CHECK_THROWS_AS(DensityMatrix(bad).validate(), InvariantError);
}
