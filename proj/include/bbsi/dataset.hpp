#pragma once

#include <cmath>
#include <cstddef>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "bbsi/errors.hpp"
#include "bbsi/random.hpp"

namespace bbsi {

/// K independent samples, one real-valued observation list per group.
struct Grouped {
  std::vector<std::vector<double>> groups;
};

/// Design matrix (n x p) and response (n). Rows are i.i.d. pairs.
struct Regression {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};

/// Two arms observed in stages; `arm_a[t]` is the block of observations
/// added to arm A at stage t (not cumulative).
struct StagedTwoSample {
  std::vector<std::vector<double>> arm_a;
  std::vector<std::vector<double>> arm_b;
};

using Dataset = std::variant<Grouped, Regression, StagedTwoSample>;

namespace detail {

inline void require_finite(const std::vector<double>& v, const char* what) {
  for (double x : v) require(std::isfinite(x), what);
}

inline std::vector<double> resample_block(const std::vector<double>& block, CounterEngine& rng) {
  std::vector<double> out(block.size());
  for (auto& v : out) v = block[rng.below(block.size())];
  return out;
}

}  // namespace detail

inline void validate(const Grouped& d) {
  require(!d.groups.empty(), "grouped dataset has no groups");
  for (const auto& g : d.groups) {
    require(!g.empty(), "grouped dataset has an empty group");
    detail::require_finite(g, "grouped dataset has a non-finite observation");
  }
}

inline void validate(const Regression& d) {
  require(d.x.rows() > 0 && d.x.cols() > 0, "regression design is empty");
  require(d.x.rows() == d.y.size(), "regression row count differs from response length");
  require(d.x.allFinite() && d.y.allFinite(), "regression data has non-finite entries");
}

inline void validate(const StagedTwoSample& d) {
  require(!d.arm_a.empty() && d.arm_a.size() == d.arm_b.size(),
          "staged dataset needs the same positive number of stages per arm");
  for (std::size_t t = 0; t < d.arm_a.size(); ++t) {
    require(!d.arm_a[t].empty() && !d.arm_b[t].empty(), "staged dataset has an empty block");
    detail::require_finite(d.arm_a[t], "staged dataset has a non-finite observation");
    detail::require_finite(d.arm_b[t], "staged dataset has a non-finite observation");
  }
}

inline void validate(const Dataset& d) {
  std::visit([](const auto& v) { validate(v); }, d);
}

/// Nonparametric bootstrap within strata: per group, jointly over
/// regression rows, and per (stage, arm) block.
inline Grouped resample(const Grouped& d, RandomSeed seed) {
  CounterEngine rng(seed);
  Grouped out;
  out.groups.reserve(d.groups.size());
  for (const auto& g : d.groups) out.groups.push_back(detail::resample_block(g, rng));
  return out;
}

inline Regression resample(const Regression& d, RandomSeed seed) {
  CounterEngine rng(seed);
  const auto n = d.x.rows();
  Regression out{Eigen::MatrixXd(n, d.x.cols()), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
    out.x.row(i) = d.x.row(r);
    out.y(i) = d.y(r);
  }
  return out;
}

inline StagedTwoSample resample(const StagedTwoSample& d, RandomSeed seed) {
  CounterEngine rng(seed);
  StagedTwoSample out;
  for (std::size_t t = 0; t < d.arm_a.size(); ++t) {
    out.arm_a.push_back(detail::resample_block(d.arm_a[t], rng));
    out.arm_b.push_back(detail::resample_block(d.arm_b[t], rng));
  }
  return out;
}

inline Dataset resample(const Dataset& d, RandomSeed seed) {
  return std::visit([&](const auto& v) -> Dataset { return resample(v, seed); }, d);
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Sample standard deviation (divisor n - 1); zero for singletons.
inline double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace bbsi
