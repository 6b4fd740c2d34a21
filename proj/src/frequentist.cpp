#include "bprocova/frequentist.hpp"

#include "bprocova/error.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <stdexcept>

namespace bprocova {

std::string to_string(HcVariant v) {
  switch (v) {
    case HcVariant::HC0:
      return "HC0";
    case HcVariant::HC1:
      return "HC1";
    case HcVariant::HC3:
      return "HC3";
  }
  return "HC1";
}

HcVariant parse_hc_variant(const std::string& name) {
  if (name == "HC0") return HcVariant::HC0;
  if (name == "HC1") return HcVariant::HC1;
  if (name == "HC3") return HcVariant::HC3;
  throw ConfigError("unknown HC variant '" + name + "' (expected HC0, HC1 or HC3)");
}

double OlsFit::hc_se_beta1() const { return std::sqrt(std::max(hc_cov(1, 1), 0.0)); }

double OlsFit::classical_se_beta1() const { return std::sqrt(std::max(classical_cov(1, 1), 0.0)); }

OlsFit procova_fit(const TrialDataset& trial, HcVariant variant) {
  // Rank and finiteness are checked on the centered design; centering does
  // not change the column space.
  (void)build_design(trial);
  const auto n = static_cast<Eigen::Index>(trial.size());
  if (n < 4) {
    throw RankDeficient("PROCOVA needs N > 3 for a residual variance");
  }
  Eigen::MatrixX3d x(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = trial.subjects[static_cast<std::size_t>(i)];
    x(i, 0) = 1.0;
    x(i, 1) = s.treatment;
    x(i, 2) = s.prognostic_score;
    y(i) = s.outcome;
  }

  OlsFit fit;
  fit.n = static_cast<int>(n);
  fit.variant = variant;
  Eigen::ColPivHouseholderQR<Eigen::MatrixX3d> qr(x);
  if (qr.rank() < 3) {
    throw RankDeficient("PROCOVA design (1, w, m) is rank deficient");
  }
  fit.coefficients = qr.solve(y);
  fit.residuals = y - x * fit.coefficients;
  const double rss = fit.residuals.squaredNorm();
  fit.s_sq = rss / static_cast<double>(n - 3);

  const Matrix3 xtx = x.transpose() * x;
  Eigen::LLT<Matrix3> llt(xtx);
  if (llt.info() != Eigen::Success) {
    throw RankDeficient("X'X is not positive definite");
  }
  const Matrix3 bread = llt.solve(Matrix3::Identity());
  fit.classical_cov = fit.s_sq * bread;

  Matrix3 meat = Matrix3::Zero();
  const double hc1 = static_cast<double>(n) / static_cast<double>(n - 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector3 xi = x.row(i).transpose();
    const double e2 = fit.residuals(i) * fit.residuals(i);
    double a = 1.0;
    if (variant == HcVariant::HC1) {
      a = hc1;
    } else if (variant == HcVariant::HC3) {
      const double h = xi.dot(bread * xi);
      a = 1.0 / ((1.0 - h) * (1.0 - h));
    }
    meat.noalias() += (a * e2) * (xi * xi.transpose());
  }
  fit.hc_cov = bread * meat * bread;
  fit.hc_cov = 0.5 * (fit.hc_cov + fit.hc_cov.transpose()).eval();
  return fit;
}

WaldResult procova_ci_and_test(const OlsFit& fit, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("alpha must lie in (0, 1)");
  }
  boost::math::students_t dist(fit.n - 3);
  WaldResult out;
  out.critical = boost::math::quantile(dist, 1.0 - 0.5 * alpha);
  const double half = out.critical * fit.hc_se_beta1();
  out.lower = fit.beta1() - half;
  out.upper = fit.beta1() + half;
  out.reject = out.lower > 0.0 || out.upper < 0.0;
  return out;
}

}  // namespace bprocova
