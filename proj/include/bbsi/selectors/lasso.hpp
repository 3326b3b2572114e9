#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "bbsi/selectors/selector.hpp"

namespace bbsi {

inline double soft_threshold(double z, double lambda) noexcept {
  if (z > lambda) return z - lambda;
  if (z < -lambda) return z + lambda;
  return 0.0;
}

struct LassoOptions {
  double tolerance = 1e-8;  ///< max absolute coordinate update at convergence
  int max_sweeps = 10000;
  bool record_objective = false;
};

struct LassoFit {
  Eigen::VectorXd beta;
  int sweeps = 0;
  bool converged = false;
  std::vector<double> objective;  ///< after each sweep, when recorded
};

/// (1/2n) ||y - X beta||^2 + lambda ||beta||_1
inline double lasso_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& beta, double lambda) {
  const auto n = static_cast<double>(x.rows());
  return (y - x * beta).squaredNorm() / (2.0 * n) + lambda * beta.lpNorm<1>();
}

/// Cyclic coordinate descent with a maintained residual.
inline LassoFit lasso_cd_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda,
                             const LassoOptions& opts = {}) {
  require(x.rows() == y.size(), "lasso: X rows differ from y length");
  require(lambda > 0.0, "lasso: lambda must be positive");
  require(x.allFinite() && y.allFinite(), "lasso: non-finite entries");

  const auto n = static_cast<double>(x.rows());
  const Eigen::Index p = x.cols();
  const Eigen::VectorXd col_sq = x.colwise().squaredNorm().transpose() / n;

  LassoFit fit;
  fit.beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd resid = y;
  for (fit.sweeps = 1; fit.sweeps <= opts.max_sweeps; ++fit.sweeps) {
    double max_delta = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (col_sq(j) == 0.0) continue;
      const double old = fit.beta(j);
      const double z = x.col(j).dot(resid) / n + col_sq(j) * old;
      const double updated = soft_threshold(z, lambda) / col_sq(j);
      const double delta = updated - old;
      if (delta != 0.0) {
        resid.noalias() -= delta * x.col(j);
        fit.beta(j) = updated;
        max_delta = std::max(max_delta, std::abs(delta));
      }
    }
    if (opts.record_objective) fit.objective.push_back(lasso_objective(x, y, fit.beta, lambda));
    if (max_delta < opts.tolerance) {
      fit.converged = true;
      break;
    }
  }
  fit.sweeps = std::min(fit.sweeps, opts.max_sweeps);
  return fit;
}

inline Eigen::VectorXd lasso_cd(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda) {
  return lasso_cd_fit(x, y, lambda).beta;
}

/// Least-squares coefficients of y on the listed columns (no intercept).
inline Eigen::VectorXd ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                           const std::vector<std::size_t>& columns) {
  Eigen::MatrixXd xm(x.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j)
    xm.col(static_cast<Eigen::Index>(j)) = x.col(static_cast<Eigen::Index>(columns[j]));
  return xm.colPivHouseholderQr().solve(y);
}

struct CarveAux {
  std::vector<std::size_t> subset;  ///< rows used for selection, sorted
};

/// Data carving: the lasso runs on a random fraction of the rows, inference
/// uses all of them.
///
/// The subset is drawn from `omega`. Columns are scaled to unit sample
/// variance on the subset before the lasso; the basis X1'Y1/n1 is computed
/// on the unscaled subset. theta_hat is the full-data OLS fit on the
/// (reference) support.
struct CarveSelector {
  using aux_type = CarveAux;

  double fraction = 0.8;
  double lambda = 0.1;

  [[nodiscard]] SelectorOutput<CarveAux> run(const Dataset& data, CounterEngine& omega,
                                             const ModelId* reference) const {
    const auto* reg = std::get_if<Regression>(&data);
    require(reg != nullptr, "carving expects a regression dataset");
    require(fraction > 0.0 && fraction <= 1.0, "carving fraction must be in (0, 1]");
    const auto n = static_cast<std::size_t>(reg->x.rows());
    const auto p = reg->x.cols();
    const auto n1 = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
    require(n1 >= 2, "carving subset is too small");

    // Partial Fisher-Yates: the first n1 slots form a uniform subset.
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = 0; i < n1; ++i) std::swap(perm[i], perm[i + omega.below(n - i)]);
    std::vector<std::size_t> subset(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n1));
    std::sort(subset.begin(), subset.end());

    Eigen::MatrixXd x1(static_cast<Eigen::Index>(n1), p);
    Eigen::VectorXd y1(static_cast<Eigen::Index>(n1));
    for (std::size_t i = 0; i < n1; ++i) {
      x1.row(static_cast<Eigen::Index>(i)) = reg->x.row(static_cast<Eigen::Index>(subset[i]));
      y1(static_cast<Eigen::Index>(i)) = reg->y(static_cast<Eigen::Index>(subset[i]));
    }

    SelectorOutput<CarveAux> out;
    out.basis = x1.transpose() * y1 / static_cast<double>(n1);
    out.v_hat = Eigen::VectorXd::Zero(p);

    Eigen::MatrixXd scaled = x1;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double m = scaled.col(j).mean();
      const double sd = std::sqrt((scaled.col(j).array() - m).square().sum() /
                                  static_cast<double>(n1 - 1));
      if (sd > 0.0) scaled.col(j) /= sd;
    }
    const Eigen::VectorXd beta = lasso_cd(scaled, y1, lambda);
    std::vector<std::size_t> support;
    for (Eigen::Index j = 0; j < p; ++j)
      if (beta(j) != 0.0) support.push_back(static_cast<std::size_t>(j));
    if (!support.empty()) out.model = Support{support};

    const std::vector<std::size_t>* target = out.model ? &support : nullptr;
    if (reference != nullptr) {
      const auto* s = std::get_if<Support>(reference);
      require(s != nullptr, "carving reference model must be a support");
      target = &s->indices;
    }
    if (target != nullptr && !target->empty()) out.theta_hat = ols(reg->x, reg->y, *target);
    out.aux.subset = std::move(subset);
    return out;
  }
};

/// Runs carving once; an empty support raises NothingSelected.
inline SelectorOutput<CarveAux> carve_select(const Regression& data, double fraction, double lambda,
                                             CounterEngine& omega) {
  auto out = CarveSelector{fraction, lambda}.run(Dataset{data}, omega, nullptr);
  if (!out.selected()) throw NothingSelected("lasso selected an empty support");
  return out;
}

}  // namespace bbsi
