#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "bbsi/diagnostics.hpp"
#include "bbsi/pipeline.hpp"

using namespace bbsi;

namespace {

struct NoAux {};

// Always picks `pick`; the target is the mean of the single group.
struct FixedSelector {
  using aux_type = NoAux;
  std::size_t pick = 0;

  [[nodiscard]] SelectorOutput<NoAux> run(const Dataset& data, CounterEngine&, const ModelId*) const {
    const double m = mean(std::get<Grouped>(data).groups[0]);
    SelectorOutput<NoAux> out;
    out.model = Winner{pick};
    out.basis = Eigen::VectorXd::Constant(1, m);
    out.theta_hat = Eigen::VectorXd::Constant(1, m);
    out.v_hat = Eigen::VectorXd::Zero(1);
    return out;
  }
};

Dataset normal_data(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> z;
  std::vector<double> v(n);
  for (auto& x : v) x = z(gen);
  return Grouped{{v}};
}

// Basis equals the target: Gamma = 1, W = 0, Sigma = sd^2 / n.
GaussianDecomposition identity_decomposition(const Dataset& data) {
  const auto& v = std::get<Grouped>(data).groups[0];
  const double var = sample_sd(v) * sample_sd(v) / static_cast<double>(v.size());
  GaussianDecomposition dec;
  dec.sigma = Eigen::MatrixXd::Constant(1, 1, var);
  dec.gamma = Eigen::MatrixXd::Ones(1, 1);
  dec.w = Eigen::VectorXd::Zero(1);
  return dec;
}

}  // namespace

TEST(Ecdf, StepsAndRightContinuity) {
  const Ecdf f({0.3, 0.1, 0.3, 0.8});
  EXPECT_EQ(f(0.0), 0.0);
  EXPECT_EQ(f(0.1), 0.25);
  EXPECT_EQ(f(0.2999), 0.25);
  EXPECT_EQ(f(0.3), 0.75);
  EXPECT_EQ(f(1.0), 1.0);
  EXPECT_EQ(Ecdf({})(0.5), 0.0);
}

TEST(KsUniform, HandCases) {
  EXPECT_NEAR(ks_uniform({0.5}), 0.5, 1e-15);
  EXPECT_NEAR(ks_uniform({0.25, 0.75}), 0.25, 1e-15);
  EXPECT_NEAR(ks_uniform({1.0, 1.0, 1.0}), 1.0, 1e-15);
  EXPECT_NEAR(ks_uniform({0.0}), 1.0, 1e-15);
  EXPECT_THROW(ks_uniform({}), InvalidInput);
}

TEST(KsUniform, MatchesGridSupremum) {
  CounterEngine rng(RandomSeed{41, 0});
  std::vector<double> v(50);
  for (auto& x : v) x = rng.uniform() * rng.uniform();
  const Ecdf f(v);
  // Brute force over the jump points, where the supremum is attained.
  double worst = 0.0;
  for (double t : f.sorted()) {
    worst = std::max(worst, std::abs(f(t) - t));
    worst = std::max(worst, std::abs(f(std::nextafter(t, -1.0)) - t));
  }
  EXPECT_NEAR(ks_uniform(v), worst, 1e-12);
}

TEST(KsUniform, UniformSamplesStayWithinDkwBound) {
  // DKW: P(KS > eps) <= 2 exp(-2 n eps^2); eps below is the 1e-4 quantile.
  const std::size_t n = 1000;
  const double eps = std::sqrt(std::log(2.0 / 1e-4) / (2.0 * n));
  for (std::uint64_t s = 0; s < 20; ++s) {
    CounterEngine rng(RandomSeed{42, s});
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform();
    EXPECT_LT(ks_uniform(v), eps);
  }
}

TEST(KsUniform, DetectsSkew) {
  CounterEngine rng(RandomSeed{43, 0});
  std::vector<double> v(300);
  for (auto& x : v) x = rng.uniform() * rng.uniform();
  EXPECT_GT(ks_uniform(v), 0.15);
}

TEST(PivotSample, AcceptAllSelectorGivesUniformPivots) {
  const auto data = normal_data(200, 44);
  const FixedSelector sel;
  CounterEngine omega(RandomSeed{});
  const auto obs = sel.run(data, omega, nullptr);
  PivotOptions po;
  po.target = 400;
  const auto s = pivot_sample(data, sel, obs, unit_log_pi, identity_decomposition(data), po, RandomSeed{45, 0});
  EXPECT_EQ(s.accepted, 400U);
  EXPECT_EQ(s.attempts, 400U);
  EXPECT_DOUBLE_EQ(s.acceptance_rate(), 1.0);
  // A grid CDF adds up to one spacing of discreteness to the KS distance.
  EXPECT_LT(ks_uniform(s.values), 0.1);
}

TEST(PivotSample, DeterministicInSeed) {
  const auto data = normal_data(50, 46);
  const FixedSelector sel;
  CounterEngine omega(RandomSeed{});
  const auto obs = sel.run(data, omega, nullptr);
  PivotOptions po;
  po.target = 30;
  const auto dec = identity_decomposition(data);
  EXPECT_EQ(pivot_sample(data, sel, obs, unit_log_pi, dec, po, RandomSeed{47, 0}).values,
            pivot_sample(data, sel, obs, unit_log_pi, dec, po, RandomSeed{47, 0}).values);
}

TEST(PivotSample, ZeroTargetIsEmpty) {
  const auto data = normal_data(20, 48);
  const FixedSelector sel;
  CounterEngine omega(RandomSeed{});
  const auto obs = sel.run(data, omega, nullptr);
  PivotOptions po;
  po.target = 0;
  const auto s = pivot_sample(data, sel, obs, unit_log_pi, identity_decomposition(data), po, RandomSeed{});
  EXPECT_TRUE(s.values.empty());
  EXPECT_EQ(s.attempts, 0U);
}

TEST(PivotSample, NeverReselectedThrows) {
  const auto data = normal_data(20, 49);
  CounterEngine omega(RandomSeed{});
  auto obs = FixedSelector{}.run(data, omega, nullptr);
  obs.model = Winner{1};
  PivotOptions po;
  po.target = 5;
  po.max_attempts = 20;
  EXPECT_THROW(pivot_sample(data, FixedSelector{}, obs, unit_log_pi, identity_decomposition(data), po, RandomSeed{}),
               DiagnosticFailure);
}

TEST(DiagnosticsCsv, PivotsAndEcdf) {
  PivotSample s;
  s.values = {0.5, 0.25};
  std::stringstream pivots;
  write_pivots_csv(s, pivots);
  EXPECT_EQ(pivots.str(), "pivot\n0.5\n0.25\n");
  std::stringstream ecdf;
  write_ecdf_csv(s, ecdf);
  EXPECT_EQ(ecdf.str().substr(0, 6), "t,ecdf");
  EXPECT_NE(ecdf.str().find("0.25,0.5\n"), std::string::npos);
  EXPECT_NE(ecdf.str().find("1,1\n"), std::string::npos);
}
