#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>

#include "bbsi/errors.hpp"
#include "bbsi/normal.hpp"
#include "bbsi/selectors/dtl.hpp"

namespace bbsi {

/// Closed-form description of a drop-the-losers selection event.
struct DtlInstance {
  double sigma2 = 0.0;  ///< Var(theta_hat) = 1 / (n1 + n2), unit-variance data
  double s2 = 0.0;      ///< Var of the marginalized-out component, 1/n1 - 1/(n1 + n2)
  double a = 0.0;       ///< largest first-stage mean among the losers
  double theta_hat = 0.0;
  double ab_threshold = 0.0;  ///< a - b

  [[nodiscard]] double sigma() const { return std::sqrt(sigma2); }
  [[nodiscard]] double s() const { return std::sqrt(s2); }

  /// `noise_var` scales both variances when the data are not unit-variance.
  static DtlInstance from(const DtlAux& aux, double theta_hat, double noise_var = 1.0) {
    require(aux.n1 > 0, "drop-the-losers instance needs n1 > 0");
    require(std::isfinite(aux.a), "drop-the-losers instance needs a finite a");
    const auto n1 = static_cast<double>(aux.n1);
    const auto n = static_cast<double>(aux.n1 + aux.n2);
    return {noise_var / n, noise_var * (1.0 / n1 - 1.0 / n), aux.a, theta_hat, aux.a - aux.b};
  }
};

namespace detail {

inline double log_mills_ratio_gap(double zx, double zl) noexcept {
  return normal::detail::log_mills_series(zx) - normal::detail::log_mills_series(zl);
}

/// log P(Z > zx) - log P(Z > zl) for zx >= zl, without cancellation when
/// both are deep in the upper tail.
inline double log_sf_ratio(double zx, double zl) noexcept {
  if (zl > 8.0 && zx > 8.0)
    return -0.5 * (zx - zl) * (zx + zl) - std::log(zx / zl) + log_mills_ratio_gap(zx, zl);
  return normal::log_sf(zx) - normal::log_sf(zl);
}

/// Truncated-normal CDF without the underflow check.
inline double tn_cdf_unchecked(double theta, double sigma, double lower, double x) noexcept {
  if (x <= lower) return 0.0;
  if (x == std::numeric_limits<double>::infinity()) return 1.0;
  const double zl = (lower - theta) / sigma;
  const double zx = (x - theta) / sigma;
  return std::clamp(-std::expm1(log_sf_ratio(zx, zl)), 0.0, 1.0);
}

/// Root of a non-increasing f at `level`, bracketed by expanding outward
/// from `start` in steps that double from `step`. Returns -inf (+inf)
/// when the crossing lies below (above) start beyond `reach`.
template <class F>
double find_decreasing_crossing(const F& f, double level, double start, double step, double reach,
                                double tol) {
  double lo = start;
  double hi = start;
  if (f(start) >= level) {
    double width = step;
    hi = start + width;
    while (f(hi) >= level) {
      lo = hi;
      width *= 2.0;
      if (width > reach) return std::numeric_limits<double>::infinity();
      hi = start + width;
    }
  } else {
    double width = step;
    lo = start - width;
    while (f(lo) < level) {
      hi = lo;
      width *= 2.0;
      if (width > reach) return -std::numeric_limits<double>::infinity();
      lo = start - width;
    }
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (f(mid) >= level) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// Adaptive Simpson on [a, b].
template <class F>
double simpson_step(const F& f, double a, double b, double fa, double fm, double fb, double whole,
                    double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Integral of f over [a, b] to absolute tolerance `tol`, starting from
/// `panels` equal pieces so narrow features are not stepped over.
template <class F>
double adaptive_simpson(const F& f, double a, double b, double tol, int panels = 32, int max_depth = 40) {
  if (!(b > a)) return 0.0;
  const double h = (b - a) / panels;
  double total = 0.0;
  double f_left = f(a);
  for (int i = 0; i < panels; ++i) {
    const double x0 = a + h * i;
    const double x1 = i + 1 == panels ? b : a + h * (i + 1);
    const double xm = 0.5 * (x0 + x1);
    const double fm = f(xm);
    const double f_right = f(x1);
    const double whole = (x1 - x0) / 6.0 * (f_left + 4.0 * fm + f_right);
    total += detail::simpson_step(f, x0, x1, f_left, fm, f_right, whole, tol / panels, max_depth);
    f_left = f_right;
  }
  return total;
}

/// CDF at x of N(theta, sigma^2) truncated to [lower, inf).
inline double tn_cdf(double theta, double sigma, double lower, double x) {
  require(sigma > 0.0, "tn_cdf needs sigma > 0");
  if (normal::log_sf((lower - theta) / sigma) < std::log(1e-300))
    throw NumericalFailure("truncation beyond support: normalizer below 1e-300");
  return detail::tn_cdf_unchecked(theta, sigma, lower, x);
}

/// Upper one-sided p-value for H0: theta = theta0.
inline double tn_pvalue(const DtlInstance& inst, double theta0) {
  return 1.0 - tn_cdf(theta0, inst.sigma(), inst.ab_threshold, inst.theta_hat);
}

struct AnalyticInterval {
  double lower = 0.0;
  double upper = 0.0;

  [[nodiscard]] double length() const { return upper - lower; }
  [[nodiscard]] bool finite() const { return std::isfinite(lower) && std::isfinite(upper); }
  [[nodiscard]] bool covers(double v) const { return lower <= v && v <= upper; }
};

/// How far (in sigmas) endpoint searches expand before declaring an
/// endpoint infinite.
inline constexpr double kAnalyticReach = 1e12;

/// Equal-tailed interval from inverting the truncated-normal CDF in theta.
inline AnalyticInterval tn_ci(const DtlInstance& inst, double alpha) {
  require(alpha > 0.0 && alpha < 1.0, "alpha must be in (0, 1)");
  require(inst.sigma2 > 0.0, "tn_ci needs sigma2 > 0");
  const double sd = inst.sigma();
  auto f = [&](double theta) {
    return detail::tn_cdf_unchecked(theta, sd, inst.ab_threshold, inst.theta_hat);
  };
  const double tol = 1e-8 * sd;
  return {detail::find_decreasing_crossing(f, 1.0 - alpha / 2.0, inst.theta_hat, sd, kAnalyticReach * sd, tol),
          detail::find_decreasing_crossing(f, alpha / 2.0, inst.theta_hat, sd, kAnalyticReach * sd, tol)};
}

/// Marginalized selection probability Phi((x - a) / s).
inline double marginal_pi(const DtlInstance& inst, double x) {
  require(inst.s2 > 0.0, "marginal_pi needs s2 > 0");
  return normal::cdf((x - inst.a) / inst.s());
}

namespace detail {

/// log of phi(t; theta, sigma^2) Phi((t - a) / s), up to a constant.
struct MarginalLogDensity {
  double theta;
  double sigma2;
  double a;
  double s;

  double operator()(double t) const {
    const double r = t - theta;
    return -0.5 * r * r / sigma2 + normal::log_cdf((t - a) / s);
  }
  double slope(double t) const {
    const double z = (t - a) / s;
    return -(t - theta) / sigma2 + std::exp(normal::log_pdf(z) - normal::log_cdf(z)) / s;
  }
};

/// The log density is strictly concave, so its mode is the root of the
/// decreasing slope; it lies at or above theta.
inline double marginal_mode(const MarginalLogDensity& g) {
  const double sd = std::sqrt(g.sigma2);
  double lo = g.theta;
  double width = sd;
  double hi = lo + width;
  while (g.slope(hi) > 0.0) {
    lo = hi;
    width *= 2.0;
    hi = g.theta + width;
  }
  for (int i = 0; i < 200 && hi - lo > 1e-12 * sd; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (g.slope(mid) > 0.0) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// Self-normalized marginal CDF. The log density has curvature at most
/// -1/sigma^2, so mode +- 12 sigma holds all but a negligible tail.
inline double marginal_cdf_unchecked(const DtlInstance& inst, double theta, double x, double tol = 1e-10) {
  const MarginalLogDensity g{theta, inst.sigma2, inst.a, inst.s()};
  const double mode = marginal_mode(g);
  const double peak = g(mode);
  const double sd = inst.sigma();
  const double lo = mode - 12.0 * sd;
  const double hi = mode + 12.0 * sd;
  if (x <= lo) return 0.0;
  if (x >= hi) return 1.0;
  auto h = [&](double t) { return std::exp(g(t) - peak); };
  // Integrate the shorter side and complement, for accuracy in both tails.
  const double total = adaptive_simpson(h, lo, hi, tol * sd);
  if (x <= mode) return std::clamp(adaptive_simpson(h, lo, x, tol * sd) / total, 0.0, 1.0);
  return std::clamp(1.0 - adaptive_simpson(h, x, hi, tol * sd) / total, 0.0, 1.0);
}

}  // namespace detail

/// log of the integral of phi(t; theta, sigma^2) Phi((t - a) / s) over the
/// real line, by quadrature. Equals log(1 - Phi((a - theta) / sqrt(sigma^2 + s^2))).
inline double marginal_log_normalizer_quadrature(const DtlInstance& inst, double theta) {
  const detail::MarginalLogDensity g{theta, inst.sigma2, inst.a, inst.s()};
  const double mode = detail::marginal_mode(g);
  const double peak = g(mode);
  const double sd = inst.sigma();
  auto h = [&](double t) { return std::exp(g(t) - peak); };
  const double integral = adaptive_simpson(h, mode - 12.0 * sd, mode + 12.0 * sd, 1e-12 * sd);
  return peak + std::log(integral) - 0.5 * std::log(2.0 * std::numbers::pi * inst.sigma2);
}

/// CDF of theta_hat under the marginalized drop-the-losers law.
inline double marginal_cdf(const DtlInstance& inst, double theta, double x) {
  require(inst.sigma2 > 0.0 && inst.s2 > 0.0, "marginal_cdf needs positive variances");
  const double tau = std::sqrt(inst.sigma2 + inst.s2);
  if (normal::log_sf((inst.a - theta) / tau) < std::log(1e-300))
    throw NumericalFailure("marginal law normalizer below 1e-300");
  return detail::marginal_cdf_unchecked(inst, theta, x);
}

/// Equal-tailed interval from inverting the marginal CDF at theta_hat.
inline AnalyticInterval marginal_ci(const DtlInstance& inst, double alpha) {
  require(alpha > 0.0 && alpha < 1.0, "alpha must be in (0, 1)");
  require(inst.sigma2 > 0.0 && inst.s2 > 0.0, "marginal_ci needs positive variances");
  const double sd = inst.sigma();
  auto f = [&](double theta) { return detail::marginal_cdf_unchecked(inst, theta, inst.theta_hat); };
  const double tol = 1e-8 * sd;
  return {detail::find_decreasing_crossing(f, 1.0 - alpha / 2.0, inst.theta_hat, sd, kAnalyticReach * sd, tol),
          detail::find_decreasing_crossing(f, alpha / 2.0, inst.theta_hat, sd, kAnalyticReach * sd, tol)};
}

/// One-sided marginalized interval [lower, inf) at level 1 - alpha together
/// with the median-unbiased estimate; `length` is their distance.
struct OneSidedInterval {
  double lower = 0.0;
  double median = 0.0;

  [[nodiscard]] double length() const { return median - lower; }
};

inline OneSidedInterval marginal_one_sided(const DtlInstance& inst, double alpha) {
  require(alpha > 0.0 && alpha < 1.0, "alpha must be in (0, 1)");
  const double sd = inst.sigma();
  auto f = [&](double theta) { return detail::marginal_cdf_unchecked(inst, theta, inst.theta_hat); };
  const double tol = 1e-8 * sd;
  return {detail::find_decreasing_crossing(f, 1.0 - alpha, inst.theta_hat, sd, kAnalyticReach * sd, tol),
          detail::find_decreasing_crossing(f, 0.5, inst.theta_hat, sd, kAnalyticReach * sd, tol)};
}

}  // namespace bbsi
