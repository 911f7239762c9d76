#pragma once

#include "lqed/models.hpp"

#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_complex.hpp>

#include <cmath>
#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lqed {

/// Parameters of the second-order closed form. Frame frequencies are zero in
/// the interaction picture.
struct AnalyticParams {
  double lambda_P = 0.0;
  double gamma = 1.0;
  double delta = 0.0;  ///< pump detuning omega_P - omega_21
  double omega_P = 0.0;
  double omega_21 = 0.0;

  static AnalyticParams from(const ModelConfig& config, double gamma);

  /// lambda_P / |Gamma - i Delta|, the expansion parameter.
  [[nodiscard]] double expansion_ratio() const;
  /// Second-order regime: expansion ratio below 0.2 and gamma > 0.
  [[nodiscard]] bool valid() const;
};

enum class C2Form {
  printed,      ///< -sqrt(2) lambda / (i Gamma + Delta) prefactor
  i_corrected,  ///< prefactor with (Gamma - i Delta) in place of (i Gamma + Delta)
};

struct ApproxAmplitudes {
  Complex c1;
  Complex c2;
  bool valid = true;
  std::string warning;
};

/// Second-order amplitudes C1(t), C2(t) of the leaky-cavity model.
ApproxAmplitudes approx_amplitudes(const AnalyticParams& params, double t, C2Form form = C2Form::printed);

/// Prefactors of e^{(-Gamma + i Delta) t} (fast) and e^{-2 lambda^2 t / (Gamma - i Delta)} (slow) in C1.
struct PolePrefactors {
  Complex fast;
  Complex slow;
};
PolePrefactors c1_prefactors(const AnalyticParams& params);

/// gamma = 2 lambda_P^2 Gamma / (Gamma^2 + Delta^2).
double decay_rate(const AnalyticParams& params);

// ---- Laplace domain ------------------------------------------------------------------

enum class BathSum {
  discrete,   ///< explicit sum over the BathSpec modes
  continuum,  ///< flat Wigner-Weisskopf limit: the sum becomes Gamma, principal part zero
};

using HighPrecision = boost::multiprecision::cpp_bin_float_50;
using HighPrecisionComplex = boost::multiprecision::cpp_complex_50;

template <typename Real>
struct ComplexOf {
  using type = std::complex<Real>;
};
template <>
struct ComplexOf<HighPrecision> {
  using type = HighPrecisionComplex;
};

namespace detail {

template <typename C>
C make_complex(double re, double im) {
  return C(typename C::value_type(re), typename C::value_type(im));
}

template <>
inline HighPrecisionComplex make_complex<HighPrecisionComplex>(double re, double im) {
  return HighPrecisionComplex(HighPrecision(re), HighPrecision(im));
}

inline Complex to_double(const Complex& z) { return z; }
inline Complex to_double(const HighPrecisionComplex& z) {
  return {static_cast<double>(z.real()), static_cast<double>(z.imag())};
}

template <typename C>
double magnitude(const C& z) {
  using std::abs;
  return static_cast<double>(abs(z));
}

}  // namespace detail

/// Laplace image of C1 in a frame rotating at `frame`: L(s - i frame).
/// With frame = 0 this is the lab-frame image
///   L(s) = D(s) / ((s + i omega_P) D(s) + 2 lambda_P^2),
///   D(s) = s + i omega_21 + sum_k lambda_Sk^2 / (s + i (omega_31 + omega_Sk)),
/// obtained by eliminating C2 and C3k from the amplitude equations.
template <typename C>
C laplace_image_in_frame(const C& s, const ModelConfig& config, const BathSpec& bath, BathSum sum, double frame) {
  C d = s + detail::make_complex<C>(0.0, config.omega_21 - frame);
  if (sum == BathSum::continuum) {
    if (bath.profile != BathProfile::flat) throw ConfigError("continuum bath sum is defined for the flat profile");
    d += detail::make_complex<C>(bath.gamma, 0.0);
  } else {
    for (int k = 0; k < bath.n_modes(); ++k) {
      const double g = bath.mode_couplings[static_cast<std::size_t>(k)];
      const double nu = config.omega_31 + bath.mode_frequencies[static_cast<std::size_t>(k)] - frame;
      const C den = s + detail::make_complex<C>(0.0, nu);
      if (detail::magnitude(den) < 1e-12) throw NumericalError("Laplace image evaluated at a bath pole");
      d += detail::make_complex<C>(g * g, 0.0) / den;
    }
  }
  const C lam2 = detail::make_complex<C>(2.0 * config.lambda_P * config.lambda_P, 0.0);
  const C den = (s + detail::make_complex<C>(0.0, config.omega_P - frame)) * d + lam2;
  if (detail::magnitude(den) < 1e-12) throw NumericalError("Laplace image evaluated at a pole");
  return d / den;
}

/// Lab-frame Laplace image of C1(t).
Complex laplace_image(Complex s, const ModelConfig& config, const BathSpec& bath, BathSum sum = BathSum::discrete);

/// Fixed-Talbot inversion of `image` at time t > 0 with `nodes` contour nodes,
/// evaluated in the scalar type Real (double or HighPrecision). The contour
///   s(theta) = sigma + r theta cot(theta) + i nu r theta,  r = 2 nodes / (5 t),
/// reduces to the classic one for nu = 1, sigma = 0; nu > 1 widens it to enclose
/// oscillatory poles. All nodes in (-pi, pi) are summed, so complex originals work.
template <typename Real, typename Image>
Complex talbot_invert(Image&& image, double t, int nodes, double nu = 1.0, double sigma = 0.0) {
  using C = typename ComplexOf<Real>::type;
  using std::cos;
  using std::exp;
  using std::sin;
  if (!(t > 0.0)) throw ConfigError("Talbot inversion needs t > 0");
  if (nodes < 2) throw ConfigError("Talbot inversion needs at least 2 nodes");
  if (!(nu >= 1.0)) throw ConfigError("Talbot contour width must be >= 1");
  const Real pi = boost::math::constants::pi<Real>();
  const Real tt(t);
  const Real r = Real(2 * nodes) / (Real(5) * tt);
  const Real vr = Real(nu) * r;
  const Real shift(sigma);

  // theta = 0: s = sigma + r, s' = i nu r.
  C acc = C(exp((shift + r) * tt)) * image(C(shift + r)) * detail::make_complex<C>(0.0, 1.0) * C(vr);
  for (int k = 1; k < nodes; ++k) {
    const Real theta = Real(k) * pi / Real(nodes);
    const Real sn = sin(theta);
    const Real cot = cos(theta) / sn;
    const Real re = shift + r * theta * cot;
    const Real dre = r * (cot - theta / (sn * sn));
    for (int sign : {1, -1}) {
      const C s(re, Real(sign) * vr * theta);
      const C ds(Real(sign) * dre, vr);
      acc += exp(s * C(tt)) * image(s) * ds;
    }
  }
  // f = (1 / 2 pi i) (pi / nodes) sum
  const C scale = C(Real(1) / Real(2 * nodes)) / detail::make_complex<C>(0.0, 1.0);
  return detail::to_double(scale * acc);
}

/// Contour width nu and shift sigma that put `poles` inside the Talbot contour
/// for time t, with a 25% margin on the imaginary extent.
struct TalbotContour {
  double nu = 1.0;
  double sigma = 0.0;
};
TalbotContour talbot_contour(std::span<const Complex> poles, double t, int nodes);

enum class InversionMethod { talbot, bromwich };

struct InverseLaplaceOptions {
  InversionMethod method = InversionMethod::talbot;
  BathSum sum = BathSum::continuum;
  int nodes = 64;             ///< Talbot contour nodes
  /// Talbot width; derived from the poles of the continuum image when unset.
  std::optional<double> talbot_nu;
  bool high_precision = true; ///< Talbot in 50-digit arithmetic
  double tolerance = 1e-8;    ///< convergence budget
  double alias_error = 1e-10; ///< Bromwich: bound on the periodic-image error
  double period_factor = 8.0; ///< Bromwich: period of the line quadrature in units of max(t)
};

struct InverseLaplaceResult {
  std::vector<double> times;
  std::vector<Complex> c1;              ///< lab frame
  std::vector<double> error_estimate;   ///< |difference| between refinement levels
};

/// C1(t) from the Bromwich integral of the Laplace image, by fixed-Talbot
/// contour quadrature (t > 0) or by trapezoidal quadrature along the line
/// Re s = a (t >= 0). Non-convergence raises NumericalError.
InverseLaplaceResult inverse_laplace(const ModelConfig& config, const BathSpec& bath, std::span<const double> t_grid,
                                     const InverseLaplaceOptions& options = {});

}  // namespace lqed
