#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "bbsi/errors.hpp"

namespace bbsi {

/// Sample mean and covariance of stacked (theta_hat, basis) replicates.
struct MomentEstimate {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

/// Gaussian decomposition basis = Gamma * theta_hat + W.
///
/// `sigma` is Var(theta_hat) (s x s), `gamma` is Cov(basis, theta_hat) *
/// Var(theta_hat)^-1 (d x s) and `w` the offset at the observed data.
struct GaussianDecomposition {
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd gamma;
  Eigen::VectorXd w;

  [[nodiscard]] double sigma2() const { return sigma(0, 0); }
  [[nodiscard]] Eigen::VectorXd gamma_column() const { return gamma.col(0); }
};

/// Rows of `replicates` are bootstrap draws of (theta_hat*, basis*).
inline MomentEstimate estimate_joint_moments(const Eigen::MatrixXd& replicates) {
  require(replicates.rows() >= 2, "moment estimation needs at least two replicates");
  require(replicates.allFinite(), "moment estimation got non-finite replicates");
  MomentEstimate m;
  m.mean = replicates.colwise().mean().transpose();
  const Eigen::MatrixXd centered = replicates.rowwise() - m.mean.transpose();
  m.covariance = (centered.transpose() * centered) / static_cast<double>(replicates.rows() - 1);
  // Exact symmetry; the product above is symmetric only up to rounding.
  m.covariance = 0.5 * (m.covariance + m.covariance.transpose()).eval();
  return m;
}

/// The first `theta_hat.size()` coordinates of the moments belong to
/// theta_hat, the remaining ones to the basis.
inline GaussianDecomposition decompose(const MomentEstimate& moments,
                                       const Eigen::VectorXd& theta_hat,
                                       const Eigen::VectorXd& basis) {
  const Eigen::Index s = theta_hat.size();
  const Eigen::Index d = basis.size();
  require(s >= 1, "decompose needs a non-empty target");
  require(moments.covariance.rows() == s + d && moments.covariance.cols() == s + d,
          "moment dimensions do not match (theta_hat, basis)");

  GaussianDecomposition out;
  out.sigma = moments.covariance.topLeftCorner(s, s);
  const Eigen::MatrixXd cross = moments.covariance.bottomLeftCorner(d, s);

  if (s == 1) {
    const double v = out.sigma(0, 0);
    if (!(v > 0.0) || !std::isfinite(v)) throw NumericalFailure("variance of theta_hat is not positive");
    out.gamma = cross / v;
  } else {
    Eigen::LLT<Eigen::MatrixXd> llt(out.sigma);
    if (llt.info() != Eigen::Success) throw NumericalFailure("covariance of theta_hat is singular");
    out.gamma = llt.solve(cross.transpose()).transpose();
  }
  out.w = basis - out.gamma * theta_hat;
  return out;
}

}  // namespace bbsi
