#pragma once

#include "lqed/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>

namespace lqed {

struct Tolerances {
  double abs = 1e-10;
  double rel = 1e-8;
  double initial_step = 0.0;  ///< 0 selects a step automatically
  double max_step = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 100'000'000;
};

struct IntegrationStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evals = 0;
  double smallest_step = std::numeric_limits<double>::infinity();
  double largest_step = 0.0;
};

namespace detail {

// Dormand-Prince 5(4) tableau.
struct DormandPrince {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // b - b_hat (fifth minus fourth order weights)
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
  // Fourth-order continuous extension (Shampine).
  static constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                          d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                          d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;
};

template <typename Vector>
double scaled_error(const Vector& err, const Vector& y0, const Vector& y1, const Tolerances& tol) {
  // Compared in squares; std::abs on complex goes through hypot.
  double worst = 0.0;
  for (Index i = 0; i < err.size(); ++i) {
    const double scale = tol.abs + tol.rel * std::sqrt(std::max(std::norm(y0[i]), std::norm(y1[i])));
    worst = std::max(worst, std::norm(err[i]) / (scale * scale));
  }
  return std::sqrt(worst);
}

}  // namespace detail

struct NoProjection {
  template <typename Vector>
  bool operator()(Vector&) const {
    return false;
  }
};

/// Adaptive Dormand-Prince 5(4) integration of y' = f(t, y) with max-norm error
/// control. Samples are produced on `t_grid` (grid[0] is the initial time) by
/// the fourth-order continuous extension between accepted steps.
///
/// `rhs(t, y, dy)` writes f(t, y) into dy. `sample(i, t, y)` receives each grid
/// point in order. `project(y)` may modify an accepted state in place and
/// returns true if it did, in which case f is re-evaluated.
template <typename Vector, typename Rhs, typename Sample, typename Project = NoProjection>
IntegrationStats integrate_dense(Rhs&& rhs, Vector y, std::span<const double> t_grid, const Tolerances& tol,
                                 Sample&& sample, Project&& project = {}) {
  using DP = detail::DormandPrince;
  if (t_grid.empty()) return {};
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > t_grid[i - 1])) throw ConfigError("time grid must be strictly increasing");
  }
  if (!(tol.abs > 0.0) || !(tol.rel >= 0.0)) throw ConfigError("integrator tolerances must be positive");

  IntegrationStats stats;
  double t = t_grid.front();
  const double t_end = t_grid.back();
  sample(std::size_t{0}, t, y);
  if (t_grid.size() == 1) return stats;

  const Index n = y.size();
  Vector k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), y_new(n), err(n), dy(n), bspl(n), r5(n);
  rhs(t, y, k1);
  stats.rhs_evals = 1;

  double h = tol.initial_step;
  if (!(h > 0.0)) {
    // Hairer-Wanner starting step heuristic.
    const double d0 = y.cwiseAbs().maxCoeff() / tol.abs + 1e-300;
    const double d1 = k1.cwiseAbs().maxCoeff() / tol.abs + 1e-300;
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, t_end - t);
    tmp = y + h0 * k1;
    rhs(t + h0, tmp, k2);
    ++stats.rhs_evals;
    const double d2 = (k2 - k1).cwiseAbs().maxCoeff() / tol.abs / h0;
    const double h1 =
        std::max(d1, d2) <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / std::max(d1, d2), 1.0 / 5.0);
    h = std::min(100.0 * h0, h1);
  }
  h = std::min({h, tol.max_step, t_end - t});

  std::size_t next = 1;
  const double h_floor = 16.0 * std::numeric_limits<double>::epsilon();
  while (next < t_grid.size()) {
    if (stats.accepted + stats.rejected >= tol.max_steps) throw NumericalError("integrator exceeded max_steps");
    if (h < h_floor * std::max(1.0, std::abs(t))) {
      throw NumericalError("integrator step size underflow at t = " + std::to_string(t));
    }
    const bool last = t + h >= t_end;
    if (last) h = t_end - t;

    tmp = y + h * (DP::a21 * k1);
    rhs(t + DP::c2 * h, tmp, k2);
    tmp = y + h * (DP::a31 * k1 + DP::a32 * k2);
    rhs(t + DP::c3 * h, tmp, k3);
    tmp = y + h * (DP::a41 * k1 + DP::a42 * k2 + DP::a43 * k3);
    rhs(t + DP::c4 * h, tmp, k4);
    tmp = y + h * (DP::a51 * k1 + DP::a52 * k2 + DP::a53 * k3 + DP::a54 * k4);
    rhs(t + DP::c5 * h, tmp, k5);
    tmp = y + h * (DP::a61 * k1 + DP::a62 * k2 + DP::a63 * k3 + DP::a64 * k4 + DP::a65 * k5);
    rhs(t + h, tmp, k6);
    y_new = y + h * (DP::b1 * k1 + DP::b3 * k3 + DP::b4 * k4 + DP::b5 * k5 + DP::b6 * k6);
    rhs(t + h, y_new, k7);
    stats.rhs_evals += 6;
    err = h * (DP::e1 * k1 + DP::e3 * k3 + DP::e4 * k4 + DP::e5 * k5 + DP::e6 * k6 + DP::e7 * k7);

    const double e = detail::scaled_error(err, y, y_new, tol);
    if (!std::isfinite(e)) throw NumericalError("non-finite integrator error estimate");
    if (e <= 1.0) {
      const double t_new = last ? t_end : t + h;
      if (project(y_new)) {
        rhs(t_new, y_new, k7);
        ++stats.rhs_evals;
      }
      // Dense output on [t, t_new]:
      // y(s) = y + s (dy + (1 - s) (b + s (dy - h k7 - b + (1 - s) r5))), b = h k1 - dy.
      bool extension_ready = false;
      while (next < t_grid.size() && t_grid[next] <= t_new) {
        const double tau = t_grid[next];
        if (tau == t_new) {
          sample(next, tau, y_new);
        } else {
          if (!extension_ready) {
            dy = y_new - y;
            bspl = h * k1 - dy;
            r5 = h * (DP::d1 * k1 + DP::d3 * k3 + DP::d4 * k4 + DP::d5 * k5 + DP::d6 * k6 + DP::d7 * k7);
            extension_ready = true;
          }
          const double s = (tau - t) / h;
          const double u = 1.0 - s;
          tmp = y + s * (dy + u * (bspl + s * (dy - h * k7 - bspl + u * r5)));
          sample(next, tau, tmp);
        }
        ++next;
      }
      ++stats.accepted;
      stats.smallest_step = std::min(stats.smallest_step, h);
      stats.largest_step = std::max(stats.largest_step, h);
      t = t_new;
      y.swap(y_new);
      k1.swap(k7);
      const double factor = e == 0.0 ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(e, -0.2)));
      h = std::min(h * factor, tol.max_step);
    } else {
      ++stats.rejected;
      h *= std::max(0.2, 0.9 * std::pow(e, -0.2));
    }
  }
  return stats;
}

}  // namespace lqed
