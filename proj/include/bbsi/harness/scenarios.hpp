#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "bbsi/dataset.hpp"
#include "bbsi/random.hpp"

namespace bbsi::harness {

inline std::vector<double> normal_block(std::size_t n, double mean, double sd, CounterEngine& rng) {
  std::normal_distribution<double> dist(mean, sd);
  std::vector<double> out(n);
  for (auto& v : out) v = dist(rng);
  return out;
}

struct DtlScenario {
  std::size_t k = 50;
  std::size_t n1 = 100;
  std::size_t n2 = 25;
  double theta = 0.0;  ///< common arm mean
};

/// First-stage groups followed by the winner's second-stage sample.
struct DtlDraw {
  Grouped data;
  std::size_t winner = 0;
};

inline DtlDraw simulate_dtl(const DtlScenario& sc, RandomSeed seed) {
  CounterEngine rng(seed);
  DtlDraw out;
  std::size_t best = 0;
  double best_mean = 0.0;
  for (std::size_t j = 0; j < sc.k; ++j) {
    out.data.groups.push_back(normal_block(sc.n1, sc.theta, 1.0, rng));
    const double m = mean(out.data.groups.back());
    if (j == 0 || m > best_mean) {
      best = j;
      best_mean = m;
    }
  }
  out.winner = best;
  out.data.groups.push_back(normal_block(sc.n2, sc.theta, 1.0, rng));
  return out;
}

struct LassoScenario {
  std::size_t n = 400;
  std::size_t p = 50;
  std::size_t sparsity = 10;
  double c0 = 0.9;
  double rho = 0.3;
  double fraction = 0.8;

  [[nodiscard]] double lambda() const {
    return std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(n));
  }
  [[nodiscard]] double signal() const {
    return std::sqrt(2.0 * c0 * std::log(static_cast<double>(p)) / static_cast<double>(n));
  }
  [[nodiscard]] Eigen::MatrixXd covariance() const {
    const auto q = static_cast<Eigen::Index>(p);
    Eigen::MatrixXd s(q, q);
    for (Eigen::Index i = 0; i < q; ++i)
      for (Eigen::Index j = 0; j < q; ++j) s(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
    return s;
  }
};

struct LassoDraw {
  Regression data;
  Eigen::VectorXd beta;
};

/// x_i ~ N(0, Sigma_X) with AR(rho) covariance, y_i | x_i ~ N(x_i' beta, 1);
/// beta has `sparsity` entries of size signal() at random positions with
/// random signs.
inline LassoDraw simulate_lasso(const LassoScenario& sc, RandomSeed seed) {
  CounterEngine rng(seed);
  const auto n = static_cast<Eigen::Index>(sc.n);
  const auto p = static_cast<Eigen::Index>(sc.p);
  LassoDraw out;
  out.beta = Eigen::VectorXd::Zero(p);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) idx[static_cast<std::size_t>(j)] = j;
  const std::size_t s = std::min(sc.sparsity, sc.p);
  for (std::size_t i = 0; i < s; ++i) {
    std::swap(idx[i], idx[i + rng.below(sc.p - i)]);
    out.beta(idx[i]) = (rng() & 1U) != 0 ? sc.signal() : -sc.signal();
  }
  const Eigen::MatrixXd chol = sc.covariance().llt().matrixL();
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd raw(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) raw(i, j) = z(rng);
  out.data.x = raw * chol.transpose();
  out.data.y = out.data.x * out.beta;
  for (Eigen::Index i = 0; i < n; ++i) out.data.y(i) += z(rng);
  return out;
}

/// Population projection (Sigma_MM)^-1 Sigma_M. beta for the support M.
inline Eigen::VectorXd projection_target(const Eigen::MatrixXd& sigma_x, const Eigen::VectorXd& beta,
                                         const std::vector<std::size_t>& support) {
  const auto m = static_cast<Eigen::Index>(support.size());
  Eigen::MatrixXd smm(m, m);
  Eigen::VectorXd rhs(m);
  const Eigen::VectorXd sb = sigma_x * beta;
  for (Eigen::Index a = 0; a < m; ++a) {
    rhs(a) = sb(static_cast<Eigen::Index>(support[static_cast<std::size_t>(a)]));
    for (Eigen::Index b = 0; b < m; ++b)
      smm(a, b) = sigma_x(static_cast<Eigen::Index>(support[static_cast<std::size_t>(a)]),
                          static_cast<Eigen::Index>(support[static_cast<std::size_t>(b)]));
  }
  return smm.llt().solve(rhs);
}

struct BhScenario {
  std::size_t k = 20;
  std::size_t n = 300;
  double theta0 = 0.1;
  double q = 0.2;

  /// theta_{1:4} = theta0, theta_{5:8} = -theta0, the rest 0.
  [[nodiscard]] std::vector<double> means() const {
    std::vector<double> m(k, 0.0);
    for (std::size_t j = 0; j < k && j < 8; ++j) m[j] = j < 4 ? theta0 : -theta0;
    return m;
  }
};

inline Grouped simulate_bh(const BhScenario& sc, RandomSeed seed) {
  CounterEngine rng(seed);
  Grouped g;
  for (double m : sc.means()) g.groups.push_back(normal_block(sc.n, m, 1.0, rng));
  return g;
}

struct RepeatedScenario {
  std::size_t init = 100;
  std::size_t step = 50;
  std::size_t max_stages = 20;
  double alpha0 = 0.1;
  double effect = 0.0;  ///< mu_1 - mu_2
};

/// All `max_stages` blocks for both arms; arm A ~ N(effect, 1), arm B ~ N(0, 1).
inline StagedTwoSample simulate_repeated(const RepeatedScenario& sc, RandomSeed seed) {
  CounterEngine rng(seed);
  StagedTwoSample d;
  for (std::size_t t = 0; t < sc.max_stages; ++t) {
    const std::size_t n = t == 0 ? sc.init : sc.step;
    d.arm_a.push_back(normal_block(n, sc.effect, 1.0, rng));
    d.arm_b.push_back(normal_block(n, 0.0, 1.0, rng));
  }
  return d;
}

/// The first `stages` stages, i.e. what the experimenter actually observed.
inline StagedTwoSample truncate_stages(const StagedTwoSample& d, std::size_t stages) {
  StagedTwoSample out;
  out.arm_a.assign(d.arm_a.begin(), d.arm_a.begin() + static_cast<std::ptrdiff_t>(stages));
  out.arm_b.assign(d.arm_b.begin(), d.arm_b.begin() + static_cast<std::ptrdiff_t>(stages));
  return out;
}

}  // namespace bbsi::harness
