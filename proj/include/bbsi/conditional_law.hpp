#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bbsi/errors.hpp"
#include "bbsi/moments.hpp"
#include "bbsi/normal.hpp"

namespace bbsi {

/// The univariate slice the law is built on: the selection probability is
/// evaluated at offset + direction * x for grid values x of the target.
struct UnivariateTarget {
  double sigma2 = 1.0;
  double theta_hat = 0.0;
  Eigen::VectorXd direction;
  Eigen::VectorXd offset;
};

/// s = 1 decomposition: direction Gamma, offset W.
inline UnivariateTarget univariate_target(const GaussianDecomposition& dec, double theta_hat) {
  require(dec.sigma.rows() == 1, "univariate_target needs a scalar target; use nuisance_condition");
  return {dec.sigma2(), theta_hat, dec.gamma_column(), dec.w};
}

/// Conditions on theta_perp = theta_hat - Sigma[:, j] theta_hat_j / Sigma[j, j]
/// so the law of theta_hat_j is free of the other coordinates' parameters.
inline UnivariateTarget nuisance_condition(const Eigen::VectorXd& theta_hat, const Eigen::MatrixXd& sigma,
                                           Eigen::Index j, const Eigen::MatrixXd& gamma,
                                           const Eigen::VectorXd& w) {
  const Eigen::Index s = theta_hat.size();
  require(j >= 0 && j < s, "nuisance_condition: index out of range");
  require(sigma.rows() == s && sigma.cols() == s && gamma.cols() == s && gamma.rows() == w.size(),
          "nuisance_condition: inconsistent dimensions");
  const double sjj = sigma(j, j);
  if (!(sjj > 0.0)) throw NumericalFailure("nuisance_condition: Sigma[j, j] is not positive");
  const Eigen::VectorXd c = sigma.col(j) / sjj;
  const Eigen::VectorXd theta_perp = theta_hat - c * theta_hat(j);
  return {sjj, theta_hat(j), gamma * c, gamma * theta_perp + w};
}

/// Grid-supported exponential family with weights
/// exp(theta x_g / sigma2 - x_g^2 / (2 sigma2)) * pi_hat(offset + direction x_g).
struct ConditionalLaw {
  std::vector<double> grid;
  std::vector<double> log_pi;
  double sigma2 = 1.0;
  double theta_hat = 0.0;
  Eigen::VectorXd direction;
  Eigen::VectorXd offset;

  [[nodiscard]] double sigma() const { return std::sqrt(sigma2); }
  [[nodiscard]] double spacing() const { return grid.size() > 1 ? grid[1] - grid[0] : 0.0; }

  /// Normalized log weights at parameter theta.
  [[nodiscard]] std::vector<double> log_weights(double theta) const {
    std::vector<double> lw(grid.size());
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const double r = grid[g] - theta;
      // Differs from theta x / s2 - x^2 / (2 s2) by a constant in x only.
      lw[g] = -0.5 * r * r / sigma2 + log_pi[g];
      top = std::max(top, lw[g]);
    }
    if (!std::isfinite(top)) throw DegenerateLaw("conditional law has no mass");
    double sum = 0.0;
    for (double v : lw) sum += std::exp(v - top);
    const double log_norm = top + std::log(sum);
    for (double& v : lw) v -= log_norm;
    return lw;
  }
};

struct LawOptions {
  std::size_t points = 100;
  double span = 10.0;  ///< grid covers theta_hat +- span * sigma
};

inline constexpr double kMinSelectionProb = 1e-300;

/// `log_pi` maps a d x G matrix of basis points (columns) to G values of
/// log pi_hat.
template <class LogPi>
  requires std::invocable<const LogPi&, const Eigen::MatrixXd&>
ConditionalLaw build_law(const LogPi& log_pi, const UnivariateTarget& target, const LawOptions& opts = {}) {
  require(target.sigma2 > 0.0 && std::isfinite(target.sigma2), "conditional law needs sigma2 > 0");
  require(opts.points >= 2 && opts.span > 0.0, "invalid grid options");
  require(target.direction.size() == target.offset.size(), "direction and offset differ in size");

  ConditionalLaw law;
  law.sigma2 = target.sigma2;
  law.theta_hat = target.theta_hat;
  law.direction = target.direction;
  law.offset = target.offset;

  const double sd = std::sqrt(target.sigma2);
  const double lo = target.theta_hat - opts.span * sd;
  const double hi = target.theta_hat + opts.span * sd;
  const auto G = static_cast<Eigen::Index>(opts.points);
  law.grid.resize(opts.points);
  Eigen::MatrixXd pts(target.offset.size(), G);
  for (Eigen::Index g = 0; g < G; ++g) {
    const double x = lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(G - 1);
    law.grid[static_cast<std::size_t>(g)] = x;
    pts.col(g) = target.offset + target.direction * x;
  }
  const Eigen::VectorXd lp = log_pi(pts);
  require(lp.size() == G, "selection probability returned the wrong number of values");
  law.log_pi.assign(lp.data(), lp.data() + G);

  const double floor = std::log(kMinSelectionProb);
  if (std::none_of(law.log_pi.begin(), law.log_pi.end(), [&](double v) { return v >= floor; }))
    throw DegenerateLaw("selection probability is below 1e-300 on the whole grid");
  return law;
}

/// P(X <= x) under parameter theta.
inline double cdf(const ConditionalLaw& law, double theta, double x) {
  if (x < law.grid.front()) return 0.0;
  if (x >= law.grid.back()) return 1.0;
  const auto lw = law.log_weights(theta);
  double acc = 0.0;
  for (std::size_t g = 0; g < law.grid.size() && law.grid[g] <= x; ++g) acc += std::exp(lw[g]);
  return std::clamp(acc, 0.0, 1.0);
}

/// P(X < x) under parameter theta.
inline double cdf_below(const ConditionalLaw& law, double theta, double x) {
  if (x <= law.grid.front()) return 0.0;
  if (x > law.grid.back()) return 1.0;
  const auto lw = law.log_weights(theta);
  double acc = 0.0;
  for (std::size_t g = 0; g < law.grid.size() && law.grid[g] < x; ++g) acc += std::exp(lw[g]);
  return std::clamp(acc, 0.0, 1.0);
}

enum class Alternative { greater, less, two_sided };

/// The atom at x_obs counts toward the upper tail.
inline double pvalue(const ConditionalLaw& law, double theta0, double x_obs, Alternative alt) {
  const double upper = 1.0 - cdf_below(law, theta0, x_obs);
  const double lower = cdf(law, theta0, x_obs);
  switch (alt) {
    case Alternative::greater: return std::clamp(upper, 0.0, 1.0);
    case Alternative::less: return std::clamp(lower, 0.0, 1.0);
    case Alternative::two_sided: return std::min(1.0, 2.0 * std::min(upper, lower));
  }
  return 1.0;
}

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 0.0;
  bool lower_clipped = false;  ///< endpoint pinned to the search bound
  bool upper_clipped = false;

  [[nodiscard]] double length() const { return upper - lower; }
  [[nodiscard]] bool clipped() const { return lower_clipped || upper_clipped; }
  [[nodiscard]] bool covers(double v) const { return lower <= v && v <= upper; }
};

/// Finds theta in [lo, hi] with f(theta) = level for non-increasing f.
/// Returns the bound whose side the root lies beyond when not bracketed.
template <class F>
double bisect_decreasing(const F& f, double level, double lo, double hi, double tol, bool* clipped) {
  const double f_lo = f(lo);
  const double f_hi = f(hi);
  *clipped = false;
  if (f_lo < level) {
    *clipped = true;
    return lo;
  }
  if (f_hi > level) {
    *clipped = true;
    return hi;
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) >= level) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// Equal-tailed interval {theta : alpha/2 <= cdf(theta, x_obs) <= 1 - alpha/2},
/// searched on theta_hat +- search_span * sigma.
inline ConfidenceInterval invert_ci(const ConditionalLaw& law, double x_obs, double alpha = 0.1,
                                    double search_span = 12.0) {
  require(alpha > 0.0 && alpha < 1.0, "alpha must be in (0, 1)");
  const double sd = law.sigma();
  const double lo = law.theta_hat - search_span * sd;
  const double hi = law.theta_hat + search_span * sd;
  const double tol = 1e-6 * sd;
  auto f = [&](double theta) { return cdf(law, theta, x_obs); };
  ConfidenceInterval ci;
  ci.lower = bisect_decreasing(f, 1.0 - alpha / 2.0, lo, hi, tol, &ci.lower_clipped);
  ci.upper = bisect_decreasing(f, alpha / 2.0, lo, hi, tol, &ci.upper_clipped);
  return ci;
}

/// Flat text block: header, then one "x log_pi" pair per line.
inline void write_law(const ConditionalLaw& law, std::ostream& os) {
  os << std::setprecision(17) << "bbsi-law " << law.grid.size() << ' ' << law.sigma2 << ' '
     << law.theta_hat << '\n';
  for (std::size_t g = 0; g < law.grid.size(); ++g) os << law.grid[g] << ' ' << law.log_pi[g] << '\n';
}

inline ConditionalLaw read_law(std::istream& is) {
  std::string magic;
  std::size_t n = 0;
  ConditionalLaw law;
  is >> magic >> n >> law.sigma2 >> law.theta_hat;
  require(is && magic == "bbsi-law" && n >= 2, "not a bbsi-law block");
  law.grid.resize(n);
  law.log_pi.resize(n);
  for (std::size_t g = 0; g < n; ++g) {
    std::string x;
    std::string lp;
    is >> x >> lp;
    law.grid[g] = std::stod(x);
    law.log_pi[g] = std::stod(lp);  // stod accepts "-inf"
  }
  require(static_cast<bool>(is), "truncated bbsi-law block");
  return law;
}

}  // namespace bbsi
