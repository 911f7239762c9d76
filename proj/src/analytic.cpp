#include "lqed/analytic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace lqed {

// ---- Second-order closed form ------------------------------------------------------

AnalyticParams AnalyticParams::from(const ModelConfig& config, double gamma) {
  return {config.lambda_P, gamma, config.delta_P(), config.omega_P, config.omega_21};
}

double AnalyticParams::expansion_ratio() const { return lambda_P / std::abs(Complex(gamma, -delta)); }

bool AnalyticParams::valid() const { return gamma > 0.0 && lambda_P >= 0.0 && expansion_ratio() < 0.2; }

PolePrefactors c1_prefactors(const AnalyticParams& p) {
  const Complex z(p.gamma, -p.delta);
  const Complex r = 2.0 * p.lambda_P * p.lambda_P / (z * z);
  return {-r, 1.0 + r};
}

ApproxAmplitudes approx_amplitudes(const AnalyticParams& p, double t, C2Form form) {
  ApproxAmplitudes out;
  if (!p.valid()) {
    out.valid = false;
    out.warning = "outside the second-order regime: lambda_P/|Gamma - i Delta| = " +
                  std::to_string(p.expansion_ratio()) + " (needs < 0.2 and Gamma > 0)";
  }
  const Complex z(p.gamma, -p.delta);
  const double lam2 = p.lambda_P * p.lambda_P;
  const Complex slow_rate = 2.0 * lam2 / z;
  const PolePrefactors pf = c1_prefactors(p);
  out.c1 = (pf.fast * std::exp(Complex(-p.gamma, p.delta) * t) + pf.slow * std::exp(-slow_rate * t)) *
           std::polar(1.0, -p.omega_P * t);
  const Complex prefactor = form == C2Form::printed ? -std::sqrt(2.0) * p.lambda_P / Complex(p.delta, p.gamma)
                                                    : -std::sqrt(2.0) * p.lambda_P / z;
  out.c2 = prefactor * (std::exp(-p.gamma * t) - std::exp(-(slow_rate + Complex(0.0, p.delta)) * t)) *
           std::polar(1.0, -p.omega_21 * t);
  return out;
}

double decay_rate(const AnalyticParams& p) {
  return 2.0 * p.lambda_P * p.lambda_P * p.gamma / (p.gamma * p.gamma + p.delta * p.delta);
}

// ---- Laplace image -------------------------------------------------------------------

Complex laplace_image(Complex s, const ModelConfig& config, const BathSpec& bath, BathSum sum) {
  return laplace_image_in_frame<Complex>(s, config, bath, sum, 0.0);
}

TalbotContour talbot_contour(std::span<const Complex> poles, double t, int nodes) {
  if (!(t > 0.0) || nodes < 2) throw ConfigError("Talbot contour needs t > 0 and at least 2 nodes");
  TalbotContour c;
  for (const Complex& p : poles) c.sigma = std::max(c.sigma, p.real());
  const double r = 2.0 * nodes / (5.0 * t);
  for (const Complex& p : poles) {
    // Solve r theta cot(theta) = Re p - sigma <= 0 for theta in [pi/2, pi).
    const double a = p.real() - c.sigma;
    double lo = 0.5 * std::numbers::pi;
    double hi = std::numbers::pi;
    for (int it = 0; it < 200 && a < 0.0; ++it) {
      const double mid = 0.5 * (lo + hi);
      (r * mid / std::tan(mid) > a ? lo : hi) = mid;
    }
    const double theta = a < 0.0 ? lo : 0.5 * std::numbers::pi;
    c.nu = std::max(c.nu, 1.25 * std::abs(p.imag()) / (r * theta));
  }
  return c;
}

namespace {

// Image in the frame rotating at omega_P, with the bath sum switched to a
// multipole expansion far from the band.
class RotatingImage {
public:
  RotatingImage(const ModelConfig& config, const BathSpec& bath, BathSum sum)
      : pump_detuning_(config.omega_21 - config.omega_P),
        lam2_(2.0 * config.lambda_P * config.lambda_P),
        continuum_(sum == BathSum::continuum),
        gamma_(bath.gamma) {
    if (continuum_ && bath.profile != BathProfile::flat) {
      throw ConfigError("continuum bath sum is defined for the flat profile");
    }
    if (!continuum_) {
      for (int k = 0; k < bath.n_modes(); ++k) {
        const double g = bath.mode_couplings[static_cast<std::size_t>(k)];
        nu_.push_back(config.omega_31 + bath.mode_frequencies[static_cast<std::size_t>(k)] - config.omega_P);
        g2_.push_back(g * g);
        radius_ = std::max(radius_, std::abs(nu_.back()));
      }
      // mu_n = sum_k g_k^2 (-i nu_k)^n
      moments_.assign(kMoments, Complex{});
      for (std::size_t k = 0; k < nu_.size(); ++k) {
        Complex p = g2_[k];
        for (int n = 0; n < kMoments; ++n) {
          moments_[static_cast<std::size_t>(n)] += p;
          p *= Complex(0.0, -nu_[k]);
        }
      }
    }
  }

  /// Largest |frequency| at which the image has structure.
  [[nodiscard]] double band() const {
    return std::max(radius_, std::abs(pump_detuning_)) + std::sqrt(lam2_) + (continuum_ ? gamma_ : 0.0) + 1.0;
  }

  [[nodiscard]] Complex operator()(Complex s) const {
    Complex d = s + Complex(0.0, pump_detuning_);
    d += continuum_ ? Complex(gamma_, 0.0) : bath_sum(s);
    const Complex den = s * d + lam2_;
    if (std::abs(den) < 1e-12) throw NumericalError("Laplace image evaluated at a pole");
    return d / den;
  }

private:
  static constexpr int kMoments = 96;

  [[nodiscard]] Complex bath_sum(Complex s) const {
    const double mod = std::abs(s);
    if (radius_ > 0.0 && mod > 2.0 * radius_) {
      const int terms = std::min(kMoments, static_cast<int>(std::ceil(-39.0 / std::log(radius_ / mod))) + 1);
      const Complex inv = 1.0 / s;
      Complex acc{};
      for (int n = terms - 1; n >= 0; --n) acc = acc * inv + moments_[static_cast<std::size_t>(n)];
      return acc * inv;
    }
    Complex acc{};
    for (std::size_t k = 0; k < nu_.size(); ++k) {
      const Complex den = s + Complex(0.0, nu_[k]);
      if (std::abs(den) < 1e-12) throw NumericalError("Laplace image evaluated at a bath pole");
      acc += g2_[k] / den;
    }
    return acc;
  }

  double pump_detuning_;
  double lam2_;
  bool continuum_;
  double gamma_;
  std::vector<double> nu_;
  std::vector<double> g2_;
  std::vector<Complex> moments_;
  double radius_ = 0.0;
};

// Poles of the continuum image in the omega_P frame: s^2 + (Gamma + i delta) s + 2 lambda^2 = 0,
// delta = omega_21 - omega_P.
std::array<Complex, 2> continuum_poles(const ModelConfig& config, const BathSpec& bath) {
  const Complex b(bath.gamma, config.omega_21 - config.omega_P);
  const double c = 2.0 * config.lambda_P * config.lambda_P;
  const Complex root = std::sqrt(b * b - 4.0 * c);
  // Stable pair: q = -(b + sign root) / 2, roots q and c / q.
  const Complex q = -0.5 * (b + (std::real(std::conj(b) * root) >= 0.0 ? root : -root));
  if (std::abs(q) == 0.0) return {Complex{}, Complex{}};
  return {q, c / q};
}

InverseLaplaceResult talbot(const ModelConfig& config, const BathSpec& bath, std::span<const double> t_grid,
                            const InverseLaplaceOptions& opt) {
  InverseLaplaceResult out;
  std::vector<Complex> poles;
  if (opt.sum == BathSum::continuum) {
    const auto p = continuum_poles(config, bath);
    poles.assign(p.begin(), p.end());
  }
  for (double t : t_grid) {
    if (!(t > 0.0)) throw ConfigError("Talbot inversion needs t > 0");
    int nodes = opt.nodes;
    int coarse = std::max(2, (3 * nodes) / 4);
    TalbotContour contour;
    if (opt.talbot_nu) {
      contour.nu = *opt.talbot_nu;
    } else {
      // Wide contours alias, so the node count grows until the classic contour
      // encloses every pole. exp(r t) = exp(0.4 nodes) caps it at what 50-digit
      // arithmetic resolves; beyond that the convergence check reports failure.
      constexpr int kMaxNodes = 160;
      contour = talbot_contour(poles, t, coarse);
      while (contour.nu > 1.0 && nodes < kMaxNodes) {
        nodes = std::min(kMaxNodes, static_cast<int>(std::ceil(nodes * contour.nu)));
        coarse = std::max(2, (3 * nodes) / 4);
        contour = talbot_contour(poles, t, coarse);
      }
    }
    Complex fine;
    Complex rough;
    if (opt.high_precision) {
      auto image = [&](const HighPrecisionComplex& s) {
        return laplace_image_in_frame<HighPrecisionComplex>(s, config, bath, opt.sum, config.omega_P);
      };
      fine = talbot_invert<HighPrecision>(image, t, nodes, contour.nu, contour.sigma);
      rough = talbot_invert<HighPrecision>(image, t, coarse, contour.nu, contour.sigma);
    } else {
      auto image = [&](const Complex& s) {
        return laplace_image_in_frame<Complex>(s, config, bath, opt.sum, config.omega_P);
      };
      fine = talbot_invert<double>(image, t, nodes, contour.nu, contour.sigma);
      rough = talbot_invert<double>(image, t, coarse, contour.nu, contour.sigma);
    }
    const double err = std::abs(fine - rough);
    if (!(err <= opt.tolerance)) {
      throw NumericalError("Talbot inversion did not converge at t = " + std::to_string(t) +
                           " (successive-order difference " + std::to_string(err) + ")");
    }
    out.times.push_back(t);
    out.c1.push_back(std::polar(1.0, -config.omega_P * t) * fine);
    out.error_estimate.push_back(err);
  }
  return out;
}

// Trapezoidal rule on the line Re s = a with spacing h = 2 pi / P. The periodic
// images it sums are damped by exp(-a P). The cos(sqrt(2) lambda t) part of the
// image is inverted exactly so the remainder decays like |s|^-4.
InverseLaplaceResult bromwich(const ModelConfig& config, const BathSpec& bath, std::span<const double> t_grid,
                              const InverseLaplaceOptions& opt) {
  double t_max = 0.0;
  for (double t : t_grid) {
    if (t < 0.0) throw ConfigError("Bromwich inversion needs t >= 0");
    t_max = std::max(t_max, t);
  }
  if (!(opt.period_factor > 1.0)) throw ConfigError("Bromwich period factor must exceed 1");
  if (!(opt.alias_error > 0.0 && opt.alias_error < 1.0)) throw ConfigError("alias error must lie in (0, 1)");
  t_max = std::max(t_max, 1e-3);
  const RotatingImage image(config, bath, opt.sum);
  const double period = opt.period_factor * t_max;
  const double a = -std::log(opt.alias_error) / period;
  const double h = 2.0 * std::numbers::pi / period;
  const double b2 = 2.0 * config.lambda_P * config.lambda_P;
  const double amplification = std::exp(a * t_max);

  auto remainder = [&](double y) {
    const Complex s(a, y);
    return image(s) - s / (s * s + b2);
  };
  // Tail of the line integral beyond |y| = Y for an |s|^-4 remainder.
  auto tail = [&](double y) {
    const double g = std::max(std::abs(remainder(y)), std::abs(remainder(-y)));
    return amplification * 2.0 * y * g / (3.0 * 2.0 * std::numbers::pi);
  };
  double cutoff = std::max(4.0 * image.band(), 10.0);
  constexpr double kMaxNodes = 2e8;
  while (tail(cutoff) > 0.25 * opt.tolerance) {
    cutoff *= 1.5;
    if (cutoff / h > kMaxNodes) throw NumericalError("Bromwich quadrature needs too many nodes");
  }
  const auto half_nodes = static_cast<long>(std::ceil(cutoff / h));
  std::vector<Complex> g(static_cast<std::size_t>(2 * half_nodes + 1));
  for (long k = -half_nodes; k <= half_nodes; ++k) g[static_cast<std::size_t>(k + half_nodes)] = remainder(k * h);

  InverseLaplaceResult out;
  const double root = std::sqrt(b2);
  const long coarse = half_nodes / 2;
  for (double t : t_grid) {
    Complex full{};
    Complex rough{};
    const Complex step = std::polar(1.0, h * t);
    Complex up = 1.0;
    Complex down = 1.0;
    full += g[static_cast<std::size_t>(half_nodes)];
    for (long k = 1; k <= half_nodes; ++k) {
      if (k % 512 == 0) {
        up = std::polar(1.0, h * t * static_cast<double>(k));
        down = std::conj(up);
      } else {
        up *= step;
        down *= std::conj(step);
      }
      full += g[static_cast<std::size_t>(half_nodes + k)] * up + g[static_cast<std::size_t>(half_nodes - k)] * down;
      if (k == coarse) rough = full;
    }
    const double scale = h / (2.0 * std::numbers::pi) * std::exp(a * t);
    const Complex rotating = std::cos(root * t) + scale * full;
    const double err = scale * std::abs(full - rough) / 7.0;
    if (!(err <= opt.tolerance)) {
      throw NumericalError("Bromwich inversion did not converge at t = " + std::to_string(t));
    }
    out.times.push_back(t);
    out.c1.push_back(std::polar(1.0, -config.omega_P * t) * rotating);
    out.error_estimate.push_back(err);
  }
  return out;
}

}  // namespace

InverseLaplaceResult inverse_laplace(const ModelConfig& config, const BathSpec& bath, std::span<const double> t_grid,
                                     const InverseLaplaceOptions& options) {
  config.validate();
  if (t_grid.empty()) throw ConfigError("empty time grid");
  if (options.method == InversionMethod::talbot) return talbot(config, bath, t_grid, options);
  return bromwich(config, bath, t_grid, options);
}

}  // namespace lqed
