#pragma once

// Direct N x N evaluation of the conjugate Normal / scaled-inverse-chi-square
// update. Uses the N-dimensional prior predictive covariance I + V K V'
// instead of the 3 x 3 precision form of the library.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

namespace oracle {

struct DenseUpdate {
  Eigen::Vector3d beta_mean;
  Eigen::Matrix3d cov_factor;
  double sigma_scale = 0.0;
  double sigma_df = 0.0;
  double log_ml = 0.0;
  double quad = 0.0;
  double log_det = 0.0;
};

inline DenseUpdate dense_update(const Eigen::MatrixXd& v, const Eigen::VectorXd& y,
                                const Eigen::Vector3d& mu, const Eigen::Vector3d& k, double nu,
                                double scale) {
  const auto n = v.rows();
  const Eigen::Matrix3d kd = k.asDiagonal();
  const Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(n, n) + v * kd * v.transpose();
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(sigma);
  const Eigen::VectorXd r = y - v * mu;
  const Eigen::VectorXd sr = ldlt.solve(r);

  DenseUpdate out;
  out.quad = r.dot(sr);
  out.log_det = ldlt.vectorD().array().log().sum();
  // beta | y, sigma^2 via the N-space form of the Gaussian conditional.
  const Eigen::MatrixXd kvt = kd * v.transpose();
  out.beta_mean = mu + kvt * sr;
  out.cov_factor = kd - kvt * ldlt.solve(kvt.transpose());
  out.sigma_df = static_cast<double>(n) + nu;
  out.sigma_scale = (out.quad + nu * scale) / out.sigma_df;
  // Multivariate t density of y with nu df, location V mu, scale s^2 (I + V K V').
  const double nd = static_cast<double>(n);
  out.log_ml = std::lgamma(0.5 * (nu + nd)) - std::lgamma(0.5 * nu) -
               0.5 * nd * std::log(nu * std::numbers::pi * scale) - 0.5 * out.log_det -
               0.5 * (nu + nd) * std::log(1.0 + out.quad / (nu * scale));
  return out;
}

}  // namespace oracle
