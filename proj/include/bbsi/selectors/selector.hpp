#pragma once

#include <concepts>
#include <optional>

#include <Eigen/Dense>

#include "bbsi/dataset.hpp"
#include "bbsi/model_id.hpp"
#include "bbsi/random.hpp"

namespace bbsi {

/// Result of running a selection algorithm on one dataset.
///
/// `basis` is the marginalized basis (raw basis minus `v_hat`); `v_hat` is
/// all zeros for selectors that do not marginalize. When the run was given
/// a reference model, `basis`, `theta_hat` and `v_hat` describe that
/// reference model's target rather than whatever was selected.
template <class Aux>
struct SelectorOutput {
  std::optional<ModelId> model;
  Eigen::VectorXd basis;
  Eigen::VectorXd theta_hat;
  Eigen::VectorXd v_hat;
  Aux aux{};

  [[nodiscard]] bool selected() const { return model.has_value(); }
};

/// A re-runnable selection algorithm S(Z + V, omega).
///
/// `run(data, omega, reference)` must be a pure function of (data, the
/// omega stream). A `nullopt` model means "nothing selected", which is a
/// legitimate outcome (label 0 during training). Invalid inputs throw.
template <class S>
concept Selector = requires(const S& s, const Dataset& d, CounterEngine& omega, const ModelId* ref) {
  typename S::aux_type;
  { s.run(d, omega, ref) } -> std::same_as<SelectorOutput<typename S::aux_type>>;
};

template <Selector S>
using OutputOf = SelectorOutput<typename S::aux_type>;

}  // namespace bbsi
