#include "bprocova/random.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bprocova {

namespace {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

double sample_standard_normal(Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  return normal(rng);
}

double sample_open_uniform(Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = 0.0;
  do {
    u = unif(rng);
  } while (u <= 0.0 || u >= 1.0);
  return u;
}

double sample_chisq(double df, Rng& rng) {
  std::gamma_distribution<double> gamma(0.5 * df, 2.0);
  return gamma(rng);
}

double sample_scaled_inv_chisq(double df, double scale, Rng& rng) {
  if (!(df > 0.0) || !std::isfinite(df)) {
    throw std::invalid_argument("scaled inverse chi-square needs df > 0");
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw std::invalid_argument("scaled inverse chi-square needs scale > 0");
  }
  return df * scale / sample_chisq(df, rng);
}

double sample_beta(double a, double b, Rng& rng) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  return x / (x + y);
}

MvnFactor::MvnFactor(const Matrix3& cov) {
  const Matrix3 sym = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix3> eig(sym);
  if (eig.info() != Eigen::Success) {
    throw std::invalid_argument("eigen decomposition of covariance failed");
  }
  const Vector3 values = eig.eigenvalues();
  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
  if (values.minCoeff() < -1e-8 * scale) {
    throw std::invalid_argument("covariance is not positive semidefinite");
  }
  const Vector3 roots = values.cwiseMax(0.0).cwiseSqrt();
  root_ = eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
}

Vector3 MvnFactor::draw(const Vector3& mean, double scale, Rng& rng) const {
  Vector3 z;
  for (int i = 0; i < 3; ++i) {
    z(i) = sample_standard_normal(rng);
  }
  return mean + std::sqrt(scale) * (root_ * z);
}

Vector3 sample_mvn(const Vector3& mean, const Matrix3& cov, Rng& rng) {
  return MvnFactor(cov).draw(mean, 1.0, rng);
}

}  // namespace bprocova
