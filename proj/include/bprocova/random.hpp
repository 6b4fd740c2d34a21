#pragma once

#include "bprocova/data.hpp"

#include <cstdint>
#include <random>

namespace bprocova {

using Rng = std::mt19937_64;

/// Seed for the `index`-th independent stream under a master seed. Streams
/// are derived by SplitMix64 mixing so task results never depend on which
/// thread ran them.
std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index) noexcept;

inline Rng make_stream(std::uint64_t master, std::uint64_t index) {
  return Rng(stream_seed(master, index));
}

double sample_standard_normal(Rng& rng);

/// Uniform on the open interval (0, 1).
double sample_open_uniform(Rng& rng);

double sample_chisq(double df, Rng& rng);

/// Draws df * scale / chi2_df. Throws std::invalid_argument for df <= 0 or
/// scale <= 0.
double sample_scaled_inv_chisq(double df, double scale, Rng& rng);

double sample_beta(double a, double b, Rng& rng);

/// Symmetric square root of a PSD covariance, computed once and reused for
/// repeated draws at different variance scales.
class MvnFactor {
public:
  /// Throws std::invalid_argument when the smallest eigenvalue is below
  /// -1e-8 (relative to the largest magnitude eigenvalue when that exceeds 1).
  explicit MvnFactor(const Matrix3& cov);

  /// mean + sqrt(scale) * L z with z standard normal.
  Vector3 draw(const Vector3& mean, double scale, Rng& rng) const;

  const Matrix3& root() const noexcept { return root_; }

private:
  Matrix3 root_;
};

Vector3 sample_mvn(const Vector3& mean, const Matrix3& cov, Rng& rng);

}  // namespace bprocova
