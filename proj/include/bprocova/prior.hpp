#pragma once

#include "bprocova/data.hpp"
#include "bprocova/parallel.hpp"

#include <cstdint>
#include <utility>

namespace bprocova {

/// Informative component fit from historical controls:
///   beta | sigma^2 ~ N((b0_H, 0, b2_H), sigma^2 diag(K)),
///   sigma^2 ~ df_H s2_H / chi2_{df_H},  df_H = N_H - 2.
struct InformativeComponent {
  double beta0_hat_H = 0.0;
  double beta2_hat_H = 0.0;
  double s2_H = 1.0;
  int df_H = 2;
  Vector3 K = Vector3::Constant(1.0);
  double ss_m_H = 1.0;  // sum (m_iH - m_bar_H)^2

  int n_H() const noexcept { return df_H + 2; }
  Vector3 mean() const { return {beta0_hat_H, 0.0, beta2_hat_H}; }
};

/// beta | sigma^2 ~ N(0, sigma^2 k I), sigma^2 ~ nu0 sigma0_sq / chi2_{nu0}.
struct FlatComponent {
  double k = 100.0;
  double nu0 = 1.0;
  double sigma0_sq = 1.0;
};

/// Beta(alpha1, alpha2) prior on the mixture weight.
struct WeightPrior {
  double alpha1 = 1.0;
  double alpha2 = 1.0;
};

struct MixturePrior {
  InformativeComponent informative;
  FlatComponent flat;
  WeightPrior weight;
};

/// Throws ConfigError when a component violates its invariants.
void validate(const InformativeComponent& comp);
void validate(const FlatComponent& comp);
void validate(const WeightPrior& weight);
void validate(const MixturePrior& prior);

/// How K = diag(K0, K1, K2) is chosen when fitting the informative component.
struct KSpec {
  enum class Mode { inverse_n, inverse_sqrt_n, explicit_values };
  Mode mode = Mode::inverse_n;
  double k1 = 100.0;
  Vector3 values = Vector3::Constant(1.0);  // used by explicit_values only

  static KSpec inverse_n(double k1 = 100.0) { return {Mode::inverse_n, k1, {}}; }
  static KSpec inverse_sqrt_n(double k1 = 100.0) { return {Mode::inverse_sqrt_n, k1, {}}; }
  static KSpec explicit_k(const Vector3& k) { return {Mode::explicit_values, k(1), k}; }
};

/// Least-squares fit of y_H - m_bar_H on (1, m_H - m_bar_H). Throws
/// DegenerateFit when the residual sum of squares vanishes and RankDeficient
/// for constant scores.
InformativeComponent fit_informative_component(const HistoricalDataset& hist,
                                               const KSpec& k_spec = {});

/// Normal x scaled-inverse-chi-square log densities, fully normalized.
double log_prior_density_informative(const Vector3& beta, double sigma_sq,
                                     const InformativeComponent& comp);
double log_prior_density_flat(const Vector3& beta, double sigma_sq, const FlatComponent& comp);

/// Log density of Beta(alpha1, alpha2) at omega in (0, 1).
double log_beta_density(double omega, const WeightPrior& weight);

/// Sample variance of the centered-regression intercept over J bootstrap
/// resamples of size trial_n. Resamples with constant scores are redrawn up
/// to 100 times before DegenerateResample is thrown.
double bootstrap_delta_variance(const HistoricalDataset& hist, int trial_n, int replicates,
                                std::uint64_t seed, Execution ex = Execution::parallel);

struct CalibratedK {
  double K0 = 0.0;
  double K2 = 0.0;
};

/// K0 = gamma / N_H + var_delta / s2_H,  K2 = gamma / (N_H * ss_m_H).
CalibratedK calibrate_k(const InformativeComponent& comp, double gamma, double var_delta);

/// Copy of `comp` with K0 and K2 replaced by the calibrated values.
InformativeComponent with_calibrated_k(InformativeComponent comp, double gamma, double var_delta);

/// Prior Var(beta1 | omega) from the mixture's conditional moments; returns
/// +infinity when a required sigma^2 moment does not exist (df <= 2).
double prior_beta1_variance(const MixturePrior& prior, double omega);

/// 4 s^2 / Var(beta1 | omega). Throws UndefinedPriorESS when the variance
/// is infinite.
double prior_effective_sample_size(const MixturePrior& prior, double omega, double s_sq);

}  // namespace bprocova
