#pragma once

#include <algorithm>
#include <cstddef>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "bbsi/conditional_law.hpp"
#include "bbsi/moments.hpp"
#include "bbsi/selectors/selector.hpp"
#include "bbsi/training_set.hpp"

namespace bbsi {

/// Bootstrap pivots H*(theta_hat*) from replicates that reselect the
/// observed model.
struct PivotSample {
  std::vector<double> values;
  std::size_t attempts = 0;
  std::size_t accepted = 0;

  [[nodiscard]] double acceptance_rate() const {
    return attempts == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(attempts);
  }
};

class DiagnosticFailure : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

struct PivotOptions {
  std::size_t target = 300;
  std::size_t max_attempts = 0;  ///< 0 means 50 * target
  Eigen::Index coordinate = 0;
  LawOptions law;
  std::size_t chunk = 64;  ///< attempts evaluated per parallel block
};

/// For each replicate that reselects M: W* = basis* + v_hat - Gamma theta_hat*,
/// law ~ phi(x; theta_hat, sigma^2) pi_hat(Gamma x + W*) centered at the
/// observed theta_hat, pivot = its CDF at theta_hat*. Sigma and Gamma stay
/// those of the main inference.
template <Selector S, class LogPi>
PivotSample pivot_sample(const Dataset& data, const S& selector, const OutputOf<S>& observed,
                         const LogPi& log_pi, const GaussianDecomposition& dec, const PivotOptions& opts,
                         RandomSeed seed) {
  require(observed.model.has_value(), "observed run selected nothing");
  const Eigen::Index j = opts.coordinate;
  require(j >= 0 && j < observed.theta_hat.size(), "pivot coordinate out of range");
  const std::size_t max_attempts = opts.max_attempts == 0 ? 50 * opts.target : opts.max_attempts;

  PivotSample out;
  if (opts.target == 0) return out;

  std::size_t next = 0;
  while (out.accepted < opts.target && next < max_attempts) {
    const std::size_t block = std::min(opts.chunk, max_attempts - next);
    std::vector<std::optional<double>> results(block);

#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(block); ++b) {
      const auto seeds = replicate_seeds(seed, next + static_cast<std::size_t>(b));
      try {
        const Dataset boot = resample(data, seeds.data);
        CounterEngine omega(seeds.omega);
        auto rep = selector.run(boot, omega, nullptr);
        if (!rep.model || *rep.model != *observed.model) continue;
        const Eigen::VectorXd z = rep.basis + observed.v_hat;
        const Eigen::VectorXd w_star = z - dec.gamma * rep.theta_hat;
        UnivariateTarget target = rep.theta_hat.size() == 1
                                      ? UnivariateTarget{dec.sigma2(), rep.theta_hat(0), dec.gamma_column(), w_star}
                                      : nuisance_condition(rep.theta_hat, dec.sigma, j, dec.gamma, w_star);
        const double theta_star = target.theta_hat;
        target.theta_hat = observed.theta_hat(j);
        const auto law = build_law(log_pi, target, opts.law);
        results[static_cast<std::size_t>(b)] = cdf(law, law.theta_hat, theta_star);
      } catch (const std::exception&) {
        results[static_cast<std::size_t>(b)].reset();
      }
    }

    for (std::size_t b = 0; b < block && out.accepted < opts.target; ++b) {
      ++out.attempts;
      if (results[b]) {
        out.values.push_back(*results[b]);
        ++out.accepted;
      }
    }
    next += block;
  }
  if (out.accepted == 0)
    throw DiagnosticFailure("no bootstrap replicate reselected the observed model in " +
                            std::to_string(out.attempts) + " attempts");
  return out;
}

/// Right-continuous empirical CDF.
class Ecdf {
 public:
  explicit Ecdf(std::vector<double> values) : sorted_(std::move(values)) {
    std::sort(sorted_.begin(), sorted_.end());
  }

  double operator()(double t) const {
    if (sorted_.empty()) return 0.0;
    const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), t);
    return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
  }

  [[nodiscard]] const std::vector<double>& sorted() const { return sorted_; }

 private:
  std::vector<double> sorted_;
};

/// sup_t |ECDF(t) - t| against the uniform distribution on [0, 1].
inline double ks_uniform(std::vector<double> values) {
  require(!values.empty(), "KS statistic of an empty sample");
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = std::clamp(values[i], 0.0, 1.0);
    d = std::max({d, static_cast<double>(i + 1) / n - v, v - static_cast<double>(i) / n});
  }
  return d;
}

inline void write_pivots_csv(const PivotSample& s, std::ostream& os) {
  os << "pivot\n" << std::setprecision(17);
  for (double v : s.values) os << v << '\n';
}

/// (t, ECDF(t)) at 0, each distinct pivot and 1.
inline void write_ecdf_csv(const PivotSample& s, std::ostream& os) {
  const Ecdf f(s.values);
  os << "t,ecdf\n" << std::setprecision(17);
  os << 0.0 << ',' << f(0.0) << '\n';
  const auto& v = f.sorted();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i + 1 < v.size() && v[i + 1] == v[i]) continue;
    os << v[i] << ',' << f(v[i]) << '\n';
  }
  os << 1.0 << ',' << f(1.0) << '\n';
}

}  // namespace bbsi
