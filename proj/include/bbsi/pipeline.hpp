#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "bbsi/conditional_law.hpp"
#include "bbsi/mlp.hpp"
#include "bbsi/moments.hpp"
#include "bbsi/selectors/selector.hpp"
#include "bbsi/training_set.hpp"

namespace bbsi {

struct PipelineOptions {
  std::size_t boot = 1000;
  TrainOptions train;
  LawOptions law;
  double balance_fraction = 0.2;
  double balance_trigger = 0.1;
  double alpha = 0.1;
};

/// Bootstrap, moment estimates and learned selection probability for one
/// observed selection.
struct FittedSelection {
  BootstrapSample bootstrap;
  MomentEstimate moments;
  SelectionProbEstimate estimate;
  bool single_class = false;

  [[nodiscard]] auto log_pi() const {
    return [this](const Eigen::MatrixXd& pts) -> Eigen::VectorXd { return estimate.log_prob(pts); };
  }
};

inline RandomSeed bootstrap_stream(RandomSeed seed) { return seed.split(0); }
inline RandomSeed training_stream(RandomSeed seed) { return seed.split(1); }

template <Selector S>
FittedSelection fit_selection(const Dataset& data, const S& selector, const OutputOf<S>& observed,
                              const PipelineOptions& opts, RandomSeed seed) {
  FittedSelection fit;
  fit.bootstrap = build_training_set(data, selector, observed, opts.boot, bootstrap_stream(seed));
  fit.moments = estimate_joint_moments(fit.bootstrap.replicates);
  auto balanced = balance(fit.bootstrap.training, opts.balance_fraction, opts.balance_trigger);
  fit.single_class = balanced.single_class;
  fit.estimate = train(balanced.set, opts.train, training_stream(seed));
  return fit;
}

/// Law and interval for coordinate j of theta_hat.
struct CoordinateInference {
  UnivariateTarget target;
  ConditionalLaw law;
  ConfidenceInterval ci;
};

inline UnivariateTarget coordinate_target(const MomentEstimate& moments, const Eigen::VectorXd& theta_hat,
                                          const Eigen::VectorXd& basis, Eigen::Index j) {
  const auto dec = decompose(moments, theta_hat, basis);
  if (theta_hat.size() == 1) return univariate_target(dec, theta_hat(0));
  return nuisance_condition(theta_hat, dec.sigma, j, dec.gamma, dec.w);
}

template <class LogPi>
CoordinateInference infer_coordinate(const LogPi& log_pi, const MomentEstimate& moments,
                                     const Eigen::VectorXd& theta_hat, const Eigen::VectorXd& basis,
                                     Eigen::Index j, const PipelineOptions& opts) {
  CoordinateInference out;
  out.target = coordinate_target(moments, theta_hat, basis, j);
  out.law = build_law(log_pi, out.target, opts.law);
  out.ci = invert_ci(out.law, out.target.theta_hat, opts.alpha);
  return out;
}

/// log pi_hat == 0: the law reduces to the unadjusted normal.
inline Eigen::VectorXd unit_log_pi(const Eigen::MatrixXd& pts) { return Eigen::VectorXd::Zero(pts.cols()); }

}  // namespace bbsi
