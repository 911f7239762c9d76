#include "lqed/models.hpp"
#include "lqed/observables.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

using namespace lqed;

namespace {

ModelConfig resonant(double lp = 1.0, double ls = 1.0) {
  ModelConfig c;
  c.lambda_P = lp;
  c.lambda_S = ls;
  return c;
}

}  // namespace

TEST_CASE("flat bath: spacing 2W/(N-1), coupling sqrt(Gamma dw / pi), recurrence 2 pi / dw") {
  const BathSpec b = discretize_bath(1.0, 20.0, 201, BathProfile::flat, 60.0);
  CHECK(b.n_modes() == 201);
  CHECK(b.spacing() == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(b.recurrence_time() == doctest::Approx(10.0 * std::numbers::pi).epsilon(1e-14));
  CHECK(b.mode_frequencies.front() == doctest::Approx(40.0));
  CHECK(b.mode_frequencies[100] == doctest::Approx(60.0));
  CHECK(b.mode_frequencies.back() == doctest::Approx(80.0));
  const double g = std::sqrt(0.2 / std::numbers::pi);
  for (double c : b.mode_couplings) CHECK(c == doctest::Approx(g).epsilon(1e-14));
}

TEST_CASE("golden-rule width of the flat bath: sum of g^2 / dw equals Gamma / pi") {
  const BathSpec b = discretize_bath(0.7, 5.0, 51);
  double s = 0.0;
  for (double c : b.mode_couplings) s += c * c;
  CHECK(s / b.spacing() / 51.0 == doctest::Approx(0.7 / std::numbers::pi).epsilon(1e-13));
}

TEST_CASE("lorentzian bath keeps the line-centre coupling and falls off in the wings") {
  const BathSpec flat = discretize_bath(1.0, 4.0, 81);
  const BathSpec lor = discretize_bath(1.0, 4.0, 81, BathProfile::lorentzian, 0.0, std::nullopt, 1.0);
  CHECK(lor.mode_couplings[40] == doctest::Approx(flat.mode_couplings[40]));
  CHECK(lor.mode_couplings[0] == doctest::Approx(flat.mode_couplings[0] / std::sqrt(17.0)));
}

TEST_CASE("bath preconditions") {
  CHECK_THROWS_AS(discretize_bath(1.0, 20.0, 1), ConfigError);
  CHECK_THROWS_AS(discretize_bath(0.0, 20.0, 11), ConfigError);
  CHECK_THROWS_AS(discretize_bath(1.0, -1.0, 11), ConfigError);
  CHECK_THROWS_AS(discretize_bath(1.0, 20.0, 201, BathProfile::flat, 0.0, 40.0), ConfigError);
  CHECK_NOTHROW(discretize_bath(1.0, 20.0, 201, BathProfile::flat, 0.0, 30.0));
  CHECK(std::isinf(BathSpec::none().recurrence_time()));
  CHECK_THROWS_AS(parse_bath_profile("gaussian"), ConfigError);
}

TEST_CASE("model preconditions") {
  ModelConfig c;
  c.kappa = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ModelConfig{};
  c.lambda_P = -0.1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ModelConfig{};
  c.omega_31 = 120.0;  // Stokes frequency would be negative
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("effective coupling is lambda_P lambda_S / delta_P and needs an explicit value at resonance") {
  ModelConfig c = resonant(0.5, 2.0);
  CHECK_THROWS_AS(effective_coupling(c), ConfigError);
  c.set_detuning(4.0);
  CHECK(effective_coupling(c) == doctest::Approx(0.25));
  c.lambda_eff = 0.3;
  CHECK(effective_coupling(c) == doctest::Approx(0.3));
}

TEST_CASE("effective Hamiltonian couples psi1 and psi3 with sqrt(2) lambda_eff") {
  ModelConfig c = resonant();
  c.lambda_eff = 0.4;
  const BasisPtr b = build_effective_sector();
  const MatrixXc h = effective_hamiltonian(c, *b).dense();
  CHECK(std::abs(h(b->index_of("psi1"), b->index_of("psi3")) - std::numbers::sqrt2 * 0.4) < 1e-15);
  CHECK(std::abs(h(b->index_of("psi1"), b->index_of("psi4"))) == 0.0);
}

TEST_CASE("single-mode spectrum at lambda_P = lambda_S = 1 is {omega_P, omega_P +- sqrt 3, omega_31}") {
  const ModelConfig c = resonant();
  const BasisPtr b = build_single_mode_sector();
  const Eigen::SelfAdjointEigenSolver<MatrixXc> es(single_mode_hamiltonian(c, *b).dense());
  const double r3 = std::sqrt(3.0);
  const double expected[] = {40.0, 100.0 - r3, 100.0, 100.0 + r3};
  for (int i = 0; i < 4; ++i) CHECK(es.eigenvalues()[i] == doctest::Approx(expected[i]).epsilon(1e-13));
}

TEST_CASE("dressed states are eigenvectors with residual below 1e-10 and orthonormal") {
  for (auto [lp, ls] : {std::pair{1.0, 1.0}, {0.3, 2.0}, {2.5, 0.1}}) {
    const ModelConfig c = resonant(lp, ls);
    const DressedStateSet d = dressed_states(c);
    CHECK(std::abs(d.epsilon - std::sqrt(2 * lp * lp + ls * ls)) < 1e-12);
    const MatrixXc h = single_mode_hamiltonian(c, *d.basis).dense();
    for (int j = 0; j < 4; ++j) {
      const VectorXc& v = d.states[static_cast<std::size_t>(j)].amplitudes;
      CHECK((h * v - d.energies[static_cast<std::size_t>(j)] * v).norm() < 1e-10);
    }
    const MatrixXc u = d.transform();
    CHECK((u.adjoint() * u - MatrixXc::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("dressed states are rejected off resonance") {
  ModelConfig c = resonant();
  c.set_detuning(0.5);
  CHECK_THROWS_AS(dressed_states(c), ConfigError);
}

TEST_CASE("psi0 carries fidelity 2/3 at lambda_P = lambda_S, in both bare and dressed coordinates") {
  const DressedStateSet d = dressed_states(resonant());
  CHECK(fidelity_to_target(d.states[0]) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  // Basis change: rho in dressed coordinates, projector transformed alongside.
  const MatrixXc u = d.transform();
  const VectorXc mix = (d.states[0].amplitudes + d.states[1].amplitudes) / std::numbers::sqrt2;
  const MatrixXc rho = mix * mix.adjoint();
  const MatrixXc p = target_projector(*d.basis);
  const double bare = (p * rho).trace().real();
  const double dressed = ((u.adjoint() * p * u) * (u.adjoint() * rho * u)).trace().real();
  CHECK(std::abs(bare - dressed) < 1e-12);
  CHECK(std::abs(bare - fidelity_to_target(DensityMatrix(rho), *d.basis)) < 1e-15);
}
