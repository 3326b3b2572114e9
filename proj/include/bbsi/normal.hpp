#pragma once

#include <cmath>
#include <numbers>

#include <boost/math/distributions/normal.hpp>

namespace bbsi::normal {

inline double pdf(double z) noexcept {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

inline double log_pdf(double z) noexcept {
  return -0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi);
}

namespace detail {

// log of the Mills-ratio series 1 - 1/z^2 + 3/z^4 - ..., summed until the
// terms stop shrinking. Only used for z > 8 where it is accurate to ~1e-14.
inline double log_mills_series(double z) noexcept {
  const double inv_z2 = 1.0 / (z * z);
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 60; ++k) {
    const double next = -term * (2.0 * k - 1.0) * inv_z2;
    if (std::abs(next) >= std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return std::log(sum);
}

}  // namespace detail

/// log P(Z > z).
inline double log_sf(double z) noexcept {
  if (z > 8.0) {
    return -0.5 * z * z - std::log(z) - 0.5 * std::log(2.0 * std::numbers::pi) +
           detail::log_mills_series(z);
  }
  if (z < -8.0) return std::log1p(-0.5 * std::erfc(-z / std::numbers::sqrt2));
  return std::log(0.5 * std::erfc(z / std::numbers::sqrt2));
}

/// log P(Z <= z).
inline double log_cdf(double z) noexcept { return log_sf(-z); }

/// P(Z > z).
inline double sf(double z) noexcept {
  if (z > 8.0) return std::exp(log_sf(z));
  return 0.5 * std::erfc(z / std::numbers::sqrt2);
}

/// P(Z <= z).
inline double cdf(double z) noexcept { return sf(-z); }

inline double quantile(double p) {
  static const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, p);
}

}  // namespace bbsi::normal
