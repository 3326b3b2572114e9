#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "bbsi/selectors/selector.hpp"

namespace bbsi {

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
};

/// Pooled-variance two-sample t-test, two-sided. A zero pooled variance
/// yields t = 0 and p = 1.
inline TTestResult two_sample_t(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() >= 2 && y.size() >= 2, "t-test needs at least two observations per sample");
  const auto nx = static_cast<double>(x.size());
  const auto ny = static_cast<double>(y.size());
  const double mx = mean(x);
  const double my = mean(y);
  double ss = 0.0;
  for (double v : x) ss += (v - mx) * (v - mx);
  for (double v : y) ss += (v - my) * (v - my);
  const double df = nx + ny - 2.0;
  const double pooled = ss / df;
  if (!(pooled > 0.0)) return {};
  const double t = (mx - my) / std::sqrt(pooled * (1.0 / nx + 1.0 / ny));
  const boost::math::students_t_distribution<double> dist(df);
  const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  return {t, std::min(1.0, p)};
}

struct StageAux {
  std::vector<double> pvalues;  ///< one per stage tested
};

/// Repeated significance testing: a t-test on the accumulated data after
/// each stage, stopping at the first p < alpha0.
///
/// The basis holds (mean_a, sd_a, mean_b, sd_b) of the accumulated samples
/// at every stage up to the (reference) stopping stage T, so d = 4T.
/// theta_hat is mean_a - mean_b over all data up to stage T.
struct RepeatedTestSelector {
  using aux_type = StageAux;

  double alpha0 = 0.1;
  std::size_t max_stages = 20;

  [[nodiscard]] SelectorOutput<StageAux> run(const Dataset& data, CounterEngine& /*omega*/,
                                             const ModelId* reference) const {
    const auto* staged = std::get_if<StagedTwoSample>(&data);
    require(staged != nullptr, "repeated testing expects a staged two-sample dataset");
    validate(*staged);

    std::size_t horizon = std::min(max_stages, staged->arm_a.size());
    std::size_t target_stage = 0;
    if (reference != nullptr) {
      const auto* s = std::get_if<StoppedAt>(reference);
      require(s != nullptr, "repeated testing reference model must be a stopping stage");
      require(s->stage >= 1 && s->stage <= staged->arm_a.size(),
              "reference stopping stage exceeds the available stages");
      target_stage = s->stage;
      horizon = std::min(horizon, target_stage);
    }

    SelectorOutput<StageAux> out;
    std::vector<double> acc_a;
    std::vector<double> acc_b;
    std::vector<double> stats;
    const std::size_t stats_stages = reference != nullptr ? target_stage : horizon;
    for (std::size_t t = 0; t < std::max(horizon, stats_stages); ++t) {
      acc_a.insert(acc_a.end(), staged->arm_a[t].begin(), staged->arm_a[t].end());
      acc_b.insert(acc_b.end(), staged->arm_b[t].begin(), staged->arm_b[t].end());
      stats.insert(stats.end(), {mean(acc_a), sample_sd(acc_a), mean(acc_b), sample_sd(acc_b)});
      if (t < horizon && !out.model) {
        const auto test = two_sample_t(acc_a, acc_b);
        out.aux.pvalues.push_back(test.p);
        if (test.p < alpha0) {
          out.model = StoppedAt{t + 1};
          if (reference == nullptr) break;
        }
      }
    }

    const std::size_t stages =
        reference != nullptr ? target_stage : (out.model ? std::get<StoppedAt>(*out.model).stage : 0);
    if (stages == 0) return out;
    out.basis = Eigen::Map<const Eigen::VectorXd>(stats.data(), static_cast<Eigen::Index>(4 * stages));
    out.v_hat = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(4 * stages));
    const double diff = stats[4 * (stages - 1)] - stats[4 * (stages - 1) + 2];
    out.theta_hat = Eigen::VectorXd::Constant(1, diff);
    return out;
  }
};

/// Runs the stopping rule once; raises NothingSelected if no stage within
/// `max_stages` is significant.
inline SelectorOutput<StageAux> repeated_test_run(const StagedTwoSample& data, double alpha0 = 0.1,
                                                  std::size_t max_stages = 20) {
  CounterEngine unused(RandomSeed{});
  auto out = RepeatedTestSelector{alpha0, max_stages}.run(Dataset{data}, unused, nullptr);
  if (!out.selected()) throw NothingSelected("no stage reached significance");
  return out;
}

}  // namespace bbsi
