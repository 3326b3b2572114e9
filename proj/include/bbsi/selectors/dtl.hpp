#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "bbsi/selectors/selector.hpp"

namespace bbsi {

/// Index of the largest group mean; ties go to the lowest index.
inline Winner dtl_select(std::span<const double> group_means) {
  require(group_means.size() >= 2, "drop-the-losers needs at least two groups");
  std::size_t best = 0;
  for (std::size_t k = 0; k < group_means.size(); ++k) {
    require(std::isfinite(group_means[k]), "drop-the-losers got a non-finite mean");
    if (group_means[k] > group_means[best]) best = k;
  }
  return {best};
}

struct DtlAux {
  double a = 0.0;  ///< largest first-stage mean among the losers
  double b = 0.0;  ///< winner's first-stage mean minus the pooled estimate
  std::size_t n1 = 0;
  std::size_t n2 = 0;
};

/// Statistics of a two-stage drop-the-losers trial for the arm `target`.
///
/// theta_hat pools the target's first-stage sample with `second_stage`.
/// With `marginalize`, the target coordinate of the basis is replaced by
/// theta_hat and v_hat carries the difference X_bar_target - theta_hat.
inline SelectorOutput<DtlAux> dtl_outputs(const std::vector<std::vector<double>>& first_stage,
                                          const std::vector<double>& second_stage, bool marginalize,
                                          std::optional<std::size_t> target = std::nullopt) {
  const std::size_t k = first_stage.size();
  std::vector<double> means(k);
  for (std::size_t j = 0; j < k; ++j) {
    require(!first_stage[j].empty(), "drop-the-losers group is empty");
    means[j] = mean(first_stage[j]);
  }
  const Winner winner = dtl_select(means);
  const std::size_t arm = target.value_or(winner.index);
  require(arm < k, "drop-the-losers target arm out of range");

  const auto n1 = first_stage[arm].size();
  const auto n2 = second_stage.size();
  double second_sum = 0.0;
  for (double y : second_stage) second_sum += y;
  const double theta =
      (static_cast<double>(n1) * means[arm] + second_sum) / static_cast<double>(n1 + n2);

  SelectorOutput<DtlAux> out;
  out.model = winner;
  out.theta_hat = Eigen::VectorXd::Constant(1, theta);
  out.basis = Eigen::Map<const Eigen::VectorXd>(means.data(), static_cast<Eigen::Index>(k));
  out.v_hat = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
  if (marginalize) {
    out.v_hat(static_cast<Eigen::Index>(arm)) = means[arm] - theta;
    out.basis(static_cast<Eigen::Index>(arm)) = theta;
  }

  out.aux.a = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < k; ++j)
    if (j != arm) out.aux.a = std::max(out.aux.a, means[j]);
  out.aux.b = means[arm] - theta;
  out.aux.n1 = n1;
  out.aux.n2 = n2;
  return out;
}

/// Drop-the-losers on a Grouped dataset whose last group is the
/// second-stage sample of the continuing arm.
struct DtlSelector {
  using aux_type = DtlAux;

  bool marginalize = false;
  /// Arm that actually received the second stage; checked on unreferenced runs.
  std::optional<std::size_t> continued_arm;

  [[nodiscard]] SelectorOutput<DtlAux> run(const Dataset& data, CounterEngine& /*omega*/,
                                           const ModelId* reference) const {
    const auto* grouped = std::get_if<Grouped>(&data);
    require(grouped != nullptr, "drop-the-losers expects a grouped dataset");
    require(grouped->groups.size() >= 3, "drop-the-losers needs >= 2 arms plus a second stage");
    const std::vector<std::vector<double>> first(grouped->groups.begin(), grouped->groups.end() - 1);
    const auto& second = grouped->groups.back();

    std::optional<std::size_t> target;
    if (reference != nullptr) {
      const auto* w = std::get_if<Winner>(reference);
      require(w != nullptr, "drop-the-losers reference model must be a winner");
      target = w->index;
    }
    auto out = dtl_outputs(first, second, marginalize, target);
    if (reference == nullptr && continued_arm &&
        std::get<Winner>(*out.model).index != *continued_arm) {
      throw InvalidInput("second-stage data belongs to an arm other than the winner");
    }
    return out;
  }
};

}  // namespace bbsi
