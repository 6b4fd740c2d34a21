#pragma once

#include "bprocova/data.hpp"
#include "bprocova/prior.hpp"

#include <span>
#include <vector>

namespace bprocova {

/// Normal / scaled-inverse-chi-square posterior of one mixture component:
///   beta | sigma^2 ~ N(beta_mean, sigma^2 cov_factor),
///   sigma^2 ~ sigma_df * sigma_scale / chi2_{sigma_df}.
struct ComponentPosterior {
  Vector3 beta_mean = Vector3::Zero();
  Matrix3 cov_factor = Matrix3::Zero();
  double sigma_scale = 0.0;
  double sigma_df = 0.0;
};

/// Both component posteriors plus their log marginal likelihoods. None of
/// these depend on omega, so they are computed once per dataset.
struct ComponentFits {
  ComponentPosterior informative;
  ComponentPosterior flat;
  double log_ml_informative = 0.0;
  double log_ml_flat = 0.0;
};

struct ConditionalPosterior {
  double omega_star = 0.0;
  ComponentPosterior informative;
  ComponentPosterior flat;
  double log_ml_informative = 0.0;
  double log_ml_flat = 0.0;
};

struct BetaMoments {
  Vector3 mean = Vector3::Zero();
  Matrix3 cov = Matrix3::Zero();
};

// The N x N matrices (I + V K V') of the closed forms are never formed: the
// inverse goes through I - V (K^-1 + V'V)^-1 V' and the determinant through
// det(I_3 + K^1/2 V'V K^1/2). Both throw NumericalFailure if the 3 x 3 system
// is not positive definite.
ComponentPosterior component_posterior_informative(const DesignMatrix& design,
                                                   const InformativeComponent& comp);
ComponentPosterior component_posterior_flat(const DesignMatrix& design, const FlatComponent& comp);

/// Log density of the observed outcomes under each component's prior
/// predictive (multivariate t).
double log_marginal_likelihood_informative(const DesignMatrix& design,
                                           const InformativeComponent& comp);
double log_marginal_likelihood_flat(const DesignMatrix& design, const FlatComponent& comp);

ComponentFits fit_components(const DesignMatrix& design, const MixturePrior& prior);

/// Posterior probability of the informative component given omega. omega may
/// sit on the closed boundary {0, 1}, where it acts as a point mass.
double mixture_weight(double omega, double log_ml_informative, double log_ml_flat);

ConditionalPosterior posterior_mixture_weight(double omega, const ComponentFits& fits);
ConditionalPosterior posterior_mixture_weight(double omega, const DesignMatrix& design,
                                              const MixturePrior& prior);

/// Student-t moments of beta under one component; UndefinedVariance when
/// sigma_df <= 2.
BetaMoments component_beta_moments(const ComponentPosterior& post);

/// E(beta | omega, y) and Cov(beta | omega, y) by the law of total variance.
BetaMoments conditional_beta_moments(double omega, const ComponentFits& fits);
BetaMoments conditional_beta_moments(double omega, const DesignMatrix& design,
                                     const MixturePrior& prior);

// ---- mixture weight densities ---------------------------------------------

/// Open midpoint grid on (0, 1).
struct OmegaGrid {
  std::vector<double> points;
  std::vector<double> log_points;       // log(omega_i)
  std::vector<double> log1m_points;     // log(1 - omega_i)
  double spacing = 0.0;

  static OmegaGrid midpoint(std::size_t size = 2048);
  std::size_t size() const noexcept { return points.size(); }
};

/// Grid density normalized so the midpoint rule integrates to one.
struct OmegaDensity {
  std::vector<double> points;
  std::vector<double> density;
  double spacing = 0.0;
  bool fallback = false;  // true when the Beta prior was substituted

  double integral() const;
  double mean() const;
};

/// Unnormalized log p(omega | beta, sigma^2, y).
double log_conditional_omega_density(double omega, const Vector3& beta, double sigma_sq,
                                     const MixturePrior& prior);

/// Same density when the two component log prior densities at (beta, sigma^2)
/// are already known.
double log_conditional_omega_density(double omega, double log_p_informative, double log_p_flat,
                                     const WeightPrior& weight);

/// Exponentiates and normalizes grid log densities. Throws NonFiniteDensity
/// when no grid value is finite.
OmegaDensity normalize_omega_density(const OmegaGrid& grid, std::span<const double> log_density);

/// Normalized conditional density on the grid; falls back to the Beta prior
/// (with a warning on stderr) if every grid value underflows.
OmegaDensity conditional_omega_density(const Vector3& beta, double sigma_sq,
                                       const MixturePrior& prior, const OmegaGrid& grid);

/// Unnormalized log p(omega | y) = log p(omega) + log(omega ML_I + (1 - omega) ML_F).
double log_marginal_omega_density(double omega, const ComponentFits& fits,
                                  const WeightPrior& weight);
double log_marginal_omega_density(double omega, const DesignMatrix& design,
                                  const MixturePrior& prior);

/// The same quantity evaluated as p(beta, sigma^2, omega | y) / p(beta, sigma^2 | omega, y)
/// at an arbitrary (beta, sigma^2); the result does not depend on that point.
double log_marginal_omega_density_ratio(double omega, const Vector3& beta, double sigma_sq,
                                        const DesignMatrix& design, const MixturePrior& prior);

OmegaDensity marginal_omega_density(const ComponentFits& fits, const WeightPrior& weight,
                                    const OmegaGrid& grid);

/// Log density of the Normal x scaled-inverse-chi-square posterior of one
/// component at (beta, sigma^2).
double log_component_posterior_density(const Vector3& beta, double sigma_sq,
                                       const ComponentPosterior& post);

/// Gaussian log likelihood of the centered outcomes, all constants included.
double log_likelihood(const Vector3& beta, double sigma_sq, const DesignMatrix& design);

struct EssResult {
  double ess = 0.0;
  double reduction = 0.0;  // ESS - N
};

/// ESS = N V1 / V2 with V1 the reference-analysis variance.
EssResult ess(int n, double v1, double v2);

}  // namespace bprocova
