#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <complex>
#include <stdexcept>
#include <string>

namespace lqed {

using Complex = std::complex<double>;
using Index = Eigen::Index;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using VectorXc = VectorX<Complex>;
using MatrixXc = MatrixX<Complex>;
using SparseMatrixXc = Eigen::SparseMatrix<Complex>;

inline constexpr Complex kI{0.0, 1.0};

/// Invalid parameters or inconsistent inputs. Maps to CLI exit code 2.
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Integrator or quadrature failure. Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A physical invariant exceeded its budget. Maps to CLI exit code 4.
class InvariantError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace lqed
