#include "bprocova/posterior.hpp"

#include "bprocova/error.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace bprocova {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;
constexpr double kLogPi = 1.1447298858494001741;

struct ConjugateUpdate {
  ComponentPosterior post;
  double log_ml = 0.0;
};

// Shared Normal / scaled-inverse-chi-square update with prior
// beta | s2 ~ N(mu, s2 diag(k)), s2 ~ nu scale / chi2_nu.
ConjugateUpdate conjugate_update(const DesignMatrix& d, const Vector3& mu, const Vector3& k,
                                 double nu, double scale) {
  const auto n = static_cast<double>(d.rows());
  const Vector3 k_inv = k.cwiseInverse();

  Matrix3 precision = d.gram;
  precision.diagonal() += k_inv;
  Eigen::LLT<Matrix3> llt(precision);
  if (llt.info() != Eigen::Success) {
    throw NumericalFailure("K^-1 + V'V is not positive definite");
  }

  ConjugateUpdate out;
  auto& post = out.post;
  post.cov_factor = llt.solve(Matrix3::Identity());
  post.cov_factor = 0.5 * (post.cov_factor + post.cov_factor.transpose()).eval();
  post.beta_mean = llt.solve(k_inv.cwiseProduct(mu) + d.vt_y);

  // Residual sum of squares at the posterior mean, in one O(N) pass.
  const double rss = (d.y_centered - d.V * post.beta_mean).squaredNorm();
  const Vector3 dev = post.beta_mean - mu;
  const double penalty = dev.cwiseProduct(dev).cwiseProduct(k_inv).sum();

  // (y - V mu)' (I + V K V')^-1 (y - V mu) equals rss + penalty at the
  // posterior mean; the sum of two non-negative terms avoids cancellation.
  const double quad = rss + penalty;

  post.sigma_df = n + nu;
  post.sigma_scale = (quad + nu * scale) / post.sigma_df;
  if (!std::isfinite(post.sigma_scale) || !post.beta_mean.allFinite()) {
    throw NumericalFailure("non-finite component posterior");
  }

  // Matrix determinant lemma: det(I_N + V K V') = det(I_3 + K^1/2 V'V K^1/2).
  const Vector3 root_k = k.cwiseSqrt();
  Matrix3 inner = root_k.asDiagonal() * d.gram * root_k.asDiagonal();
  inner.diagonal().array() += 1.0;
  Eigen::LLT<Matrix3> inner_llt(inner);
  if (inner_llt.info() != Eigen::Success) {
    throw NumericalFailure("I + K^1/2 V'V K^1/2 is not positive definite");
  }
  const double log_det = 2.0 * inner_llt.matrixLLT().diagonal().array().log().sum();

  out.log_ml = std::lgamma(0.5 * (n + nu)) - std::lgamma(0.5 * nu) - 0.5 * n * (std::log(nu) + kLogPi) -
               0.5 * n * std::log(scale) - 0.5 * log_det -
               0.5 * (n + nu) * std::log1p(quad / (nu * scale));
  return out;
}

ConjugateUpdate informative_update(const DesignMatrix& d, const InformativeComponent& comp) {
  validate(comp);
  return conjugate_update(d, comp.mean(), comp.K, comp.df_H, comp.s2_H);
}

ConjugateUpdate flat_update(const DesignMatrix& d, const FlatComponent& comp) {
  validate(comp);
  return conjugate_update(d, Vector3::Zero(), Vector3::Constant(comp.k), comp.nu0, comp.sigma0_sq);
}

double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity() && b == a) {
    return a;
  }
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace

ComponentPosterior component_posterior_informative(const DesignMatrix& design,
                                                   const InformativeComponent& comp) {
  return informative_update(design, comp).post;
}

ComponentPosterior component_posterior_flat(const DesignMatrix& design, const FlatComponent& comp) {
  return flat_update(design, comp).post;
}

double log_marginal_likelihood_informative(const DesignMatrix& design,
                                           const InformativeComponent& comp) {
  return informative_update(design, comp).log_ml;
}

double log_marginal_likelihood_flat(const DesignMatrix& design, const FlatComponent& comp) {
  return flat_update(design, comp).log_ml;
}

ComponentFits fit_components(const DesignMatrix& design, const MixturePrior& prior) {
  validate(prior.weight);
  auto inf = informative_update(design, prior.informative);
  auto flat = flat_update(design, prior.flat);
  return {inf.post, flat.post, inf.log_ml, flat.log_ml};
}

double mixture_weight(double omega, double log_ml_informative, double log_ml_flat) {
  if (!(omega >= 0.0 && omega <= 1.0)) {
    throw std::invalid_argument("omega must lie in [0, 1]");
  }
  // omega* = 1 / (1 + exp(log((1 - omega) / omega) + lml_F - lml_I))
  const double t = std::log1p(-omega) - std::log(omega) + log_ml_flat - log_ml_informative;
  if (std::isnan(t)) {
    throw NumericalFailure("mixture weight is undefined (NaN log odds)");
  }
  return 1.0 / (1.0 + std::exp(t));
}

ConditionalPosterior posterior_mixture_weight(double omega, const ComponentFits& fits) {
  ConditionalPosterior out;
  out.omega_star = mixture_weight(omega, fits.log_ml_informative, fits.log_ml_flat);
  out.informative = fits.informative;
  out.flat = fits.flat;
  out.log_ml_informative = fits.log_ml_informative;
  out.log_ml_flat = fits.log_ml_flat;
  return out;
}

ConditionalPosterior posterior_mixture_weight(double omega, const DesignMatrix& design,
                                              const MixturePrior& prior) {
  return posterior_mixture_weight(omega, fit_components(design, prior));
}

BetaMoments component_beta_moments(const ComponentPosterior& post) {
  if (!(post.sigma_df > 2.0)) {
    throw UndefinedVariance("posterior sigma^2 degrees of freedom must exceed 2");
  }
  BetaMoments m;
  m.mean = post.beta_mean;
  m.cov = (post.sigma_df * post.sigma_scale / (post.sigma_df - 2.0)) * post.cov_factor;
  return m;
}

BetaMoments conditional_beta_moments(double omega, const ComponentFits& fits) {
  const double w = mixture_weight(omega, fits.log_ml_informative, fits.log_ml_flat);
  const auto inf = component_beta_moments(fits.informative);
  const auto flat = component_beta_moments(fits.flat);
  const Vector3 diff = inf.mean - flat.mean;

  BetaMoments m;
  m.mean = w * inf.mean + (1.0 - w) * flat.mean;
  m.cov = w * inf.cov + (1.0 - w) * flat.cov + w * (1.0 - w) * diff * diff.transpose();
  return m;
}

BetaMoments conditional_beta_moments(double omega, const DesignMatrix& design,
                                     const MixturePrior& prior) {
  return conditional_beta_moments(omega, fit_components(design, prior));
}

// ---- omega densities ------------------------------------------------------

OmegaGrid OmegaGrid::midpoint(std::size_t size) {
  if (size == 0) {
    throw std::invalid_argument("omega grid needs at least one point");
  }
  OmegaGrid g;
  g.spacing = 1.0 / static_cast<double>(size);
  g.points.resize(size);
  g.log_points.resize(size);
  g.log1m_points.resize(size);
  for (std::size_t i = 0; i < size; ++i) {
    const double w = (static_cast<double>(i) + 0.5) * g.spacing;
    g.points[i] = w;
    g.log_points[i] = std::log(w);
    g.log1m_points[i] = std::log1p(-w);
  }
  return g;
}

double OmegaDensity::integral() const {
  double total = 0.0;
  for (double p : density) {
    total += p;
  }
  return total * spacing;
}

double OmegaDensity::mean() const {
  double total = 0.0;
  for (std::size_t i = 0; i < density.size(); ++i) {
    total += points[i] * density[i];
  }
  return total * spacing;
}

double log_conditional_omega_density(double omega, double log_p_informative, double log_p_flat,
                                     const WeightPrior& weight) {
  if (!(omega > 0.0 && omega < 1.0)) {
    throw std::invalid_argument("omega must lie in (0, 1)");
  }
  return log_beta_density(omega, weight) +
         log_sum_exp(std::log(omega) + log_p_informative, std::log1p(-omega) + log_p_flat);
}

double log_conditional_omega_density(double omega, const Vector3& beta, double sigma_sq,
                                     const MixturePrior& prior) {
  return log_conditional_omega_density(omega,
                                       log_prior_density_informative(beta, sigma_sq, prior.informative),
                                       log_prior_density_flat(beta, sigma_sq, prior.flat), prior.weight);
}

OmegaDensity normalize_omega_density(const OmegaGrid& grid, std::span<const double> log_density) {
  if (log_density.size() != grid.size()) {
    throw std::invalid_argument("log density size does not match the omega grid");
  }
  double max_log = -std::numeric_limits<double>::infinity();
  for (double v : log_density) {
    if (std::isfinite(v)) {
      max_log = std::max(max_log, v);
    }
  }
  if (!std::isfinite(max_log)) {
    throw NonFiniteDensity("omega density underflows at every grid point");
  }
  OmegaDensity out;
  out.points = grid.points;
  out.spacing = grid.spacing;
  out.density.resize(grid.size());
  double total = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = log_density[i];
    out.density[i] = std::isnan(v) ? 0.0 : std::exp(v - max_log);
    total += out.density[i];
  }
  const double norm = 1.0 / (total * grid.spacing);
  for (double& p : out.density) {
    p *= norm;
  }
  return out;
}

namespace {

OmegaDensity beta_prior_on_grid(const WeightPrior& weight, const OmegaGrid& grid) {
  std::vector<double> logs(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    logs[i] = log_beta_density(grid.points[i], weight);
  }
  auto out = normalize_omega_density(grid, logs);
  out.fallback = true;
  return out;
}

}  // namespace

OmegaDensity conditional_omega_density(const Vector3& beta, double sigma_sq,
                                       const MixturePrior& prior, const OmegaGrid& grid) {
  const double lp_inf = log_prior_density_informative(beta, sigma_sq, prior.informative);
  const double lp_flat = log_prior_density_flat(beta, sigma_sq, prior.flat);
  std::vector<double> logs(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    logs[i] = log_conditional_omega_density(grid.points[i], lp_inf, lp_flat, prior.weight);
  }
  try {
    return normalize_omega_density(grid, logs);
  } catch (const NonFiniteDensity&) {
    std::cerr << "warning: conditional omega density underflowed; using the Beta prior\n";
    return beta_prior_on_grid(prior.weight, grid);
  }
}

double log_marginal_omega_density(double omega, const ComponentFits& fits,
                                  const WeightPrior& weight) {
  if (!(omega > 0.0 && omega < 1.0)) {
    throw std::invalid_argument("omega must lie in (0, 1)");
  }
  return log_beta_density(omega, weight) +
         log_sum_exp(std::log(omega) + fits.log_ml_informative,
                     std::log1p(-omega) + fits.log_ml_flat);
}

double log_marginal_omega_density(double omega, const DesignMatrix& design,
                                  const MixturePrior& prior) {
  return log_marginal_omega_density(omega, fit_components(design, prior), prior.weight);
}

double log_likelihood(const Vector3& beta, double sigma_sq, const DesignMatrix& design) {
  const auto n = static_cast<double>(design.rows());
  const double rss = (design.y_centered - design.V * beta).squaredNorm();
  return -0.5 * n * (kLogTwoPi + std::log(sigma_sq)) - 0.5 * rss / sigma_sq;
}

double log_component_posterior_density(const Vector3& beta, double sigma_sq,
                                       const ComponentPosterior& post) {
  Eigen::LLT<Matrix3> llt(post.cov_factor);
  if (llt.info() != Eigen::Success) {
    throw NumericalFailure("component covariance factor is not positive definite");
  }
  const Vector3 dev = beta - post.beta_mean;
  const double quad = dev.dot(llt.solve(dev));
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double half = 0.5 * post.sigma_df;
  const double log_sigma = half * std::log(half * post.sigma_scale) - std::lgamma(half) -
                           (half + 1.0) * std::log(sigma_sq) -
                           half * post.sigma_scale / sigma_sq;
  return -1.5 * (kLogTwoPi + std::log(sigma_sq)) - 0.5 * log_det - 0.5 * quad / sigma_sq +
         log_sigma;
}

double log_marginal_omega_density_ratio(double omega, const Vector3& beta, double sigma_sq,
                                        const DesignMatrix& design, const MixturePrior& prior) {
  if (!(omega > 0.0 && omega < 1.0)) {
    throw std::invalid_argument("omega must lie in (0, 1)");
  }
  const auto fits = fit_components(design, prior);
  const double w_star = mixture_weight(omega, fits.log_ml_informative, fits.log_ml_flat);

  const double numerator =
      log_likelihood(beta, sigma_sq, design) + log_beta_density(omega, prior.weight) +
      log_sum_exp(std::log(omega) + log_prior_density_informative(beta, sigma_sq, prior.informative),
                  std::log1p(-omega) + log_prior_density_flat(beta, sigma_sq, prior.flat));
  const double denominator =
      log_sum_exp(std::log(w_star) + log_component_posterior_density(beta, sigma_sq, fits.informative),
                  std::log1p(-w_star) + log_component_posterior_density(beta, sigma_sq, fits.flat));
  return numerator - denominator;
}

OmegaDensity marginal_omega_density(const ComponentFits& fits, const WeightPrior& weight,
                                    const OmegaGrid& grid) {
  std::vector<double> logs(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    logs[i] = log_marginal_omega_density(grid.points[i], fits, weight);
  }
  try {
    return normalize_omega_density(grid, logs);
  } catch (const NonFiniteDensity&) {
    std::cerr << "warning: marginal omega density underflowed; using the Beta prior\n";
    return beta_prior_on_grid(weight, grid);
  }
}

EssResult ess(int n, double v1, double v2) {
  if (n <= 0) {
    throw std::invalid_argument("ESS needs N > 0");
  }
  if (!(v1 > 0.0) || !(v2 > 0.0)) {
    throw std::invalid_argument("ESS needs positive variances");
  }
  const double ratio = v1 / v2;
  const double nd = static_cast<double>(n);
  return {nd * ratio, nd * (ratio - 1.0)};
}

}  // namespace bprocova
