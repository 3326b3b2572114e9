#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "bbsi/normal.hpp"
#include "bbsi/selectors/selector.hpp"

namespace bbsi {

/// Benjamini-Hochberg step-up: with k_hat = max{k : p_(k) <= q k / K},
/// reject every hypothesis whose p-value is <= p_(k_hat).
inline RejectionSet bh_select(std::span<const double> pvalues, double q) {
  require(q > 0.0 && q < 1.0, "BH level must be in (0, 1)");
  const std::size_t m = pvalues.size();
  for (double p : pvalues) require(p >= 0.0 && p <= 1.0, "BH p-value outside [0, 1]");

  std::vector<double> sorted(pvalues.begin(), pvalues.end());
  std::sort(sorted.begin(), sorted.end());
  double cutoff = -1.0;
  for (std::size_t k = m; k >= 1; --k) {
    if (sorted[k - 1] <= q * static_cast<double>(k) / static_cast<double>(m)) {
      cutoff = sorted[k - 1];
      break;
    }
  }
  RejectionSet out;
  for (std::size_t i = 0; i < m; ++i)
    if (pvalues[i] <= cutoff) out.indices.push_back(i);
  return out;
}

struct BhAux {
  std::vector<double> pvalues;
};

/// Screens group means with two-sided z-tests (known unit-scale noise)
/// followed by BH. The basis is the vector of group means; theta_hat lists
/// the means of the (reference) rejected groups.
struct BhSelector {
  using aux_type = BhAux;

  double q = 0.2;
  double noise_sd = 1.0;

  [[nodiscard]] SelectorOutput<BhAux> run(const Dataset& data, CounterEngine& /*omega*/,
                                          const ModelId* reference) const {
    const auto* grouped = std::get_if<Grouped>(&data);
    require(grouped != nullptr, "BH screening expects a grouped dataset");
    const auto k = grouped->groups.size();

    SelectorOutput<BhAux> out;
    out.basis.resize(static_cast<Eigen::Index>(k));
    out.aux.pvalues.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
      const auto& g = grouped->groups[j];
      require(!g.empty(), "BH screening group is empty");
      const double m = mean(g);
      out.basis(static_cast<Eigen::Index>(j)) = m;
      const double z = std::sqrt(static_cast<double>(g.size())) * std::abs(m) / noise_sd;
      out.aux.pvalues[j] = std::min(1.0, 2.0 * normal::sf(z));
    }
    out.v_hat = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));

    auto rejected = bh_select(out.aux.pvalues, q);
    const std::vector<std::size_t>* target = nullptr;
    if (!rejected.indices.empty()) {
      out.model = rejected;
      target = &std::get<RejectionSet>(*out.model).indices;
    }
    if (reference != nullptr) {
      const auto* r = std::get_if<RejectionSet>(reference);
      require(r != nullptr, "BH reference model must be a rejection set");
      target = &r->indices;
    }
    if (target != nullptr) {
      out.theta_hat.resize(static_cast<Eigen::Index>(target->size()));
      for (std::size_t i = 0; i < target->size(); ++i)
        out.theta_hat(static_cast<Eigen::Index>(i)) = out.basis(static_cast<Eigen::Index>((*target)[i]));
    }
    return out;
  }
};

}  // namespace bbsi
