#include "bprocova/prior.hpp"

#include "bprocova/error.hpp"
#include "bprocova/random.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace bprocova {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;

void require_positive(double x, const char* what) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw ConfigError(std::string(what) + " must be positive and finite");
  }
}

// log of the scaled-inverse-chi-square(df, scale) density at sigma_sq.
double log_scaled_inv_chisq(double sigma_sq, double df, double scale) {
  const double half = 0.5 * df;
  return half * std::log(half * scale) - std::lgamma(half) - (half + 1.0) * std::log(sigma_sq) -
         half * scale / sigma_sq;
}

struct CenteredFit {
  double intercept = 0.0;
  double slope = 0.0;
  double rss = 0.0;
  double ss_m = 0.0;
  double ss_y = 0.0;
};

// Least squares of y - m_bar on (1, m - m_bar).
template <class Outcome, class Score>
CenteredFit centered_fit(std::size_t n, Outcome&& y_at, Score&& m_at) {
  double m_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    m_sum += m_at(i);
  }
  const double m_bar = m_sum / static_cast<double>(n);

  double yc_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    yc_sum += y_at(i) - m_bar;
  }
  CenteredFit fit;
  fit.intercept = yc_sum / static_cast<double>(n);

  double sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = m_at(i) - m_bar;
    sxy += x * (y_at(i) - m_bar - fit.intercept);
    fit.ss_m += x * x;
  }
  if (fit.ss_m > 0.0) {
    fit.slope = sxy / fit.ss_m;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double yc = y_at(i) - m_bar;
    const double r = yc - fit.intercept - fit.slope * (m_at(i) - m_bar);
    fit.rss += r * r;
    fit.ss_y += yc * yc;
  }
  return fit;
}

}  // namespace

void validate(const InformativeComponent& comp) {
  for (int j = 0; j < 3; ++j) {
    require_positive(comp.K(j), "informative K entries");
  }
  require_positive(comp.s2_H, "s2_H");
  if (comp.df_H < 2) {
    throw ConfigError("informative df_H must be at least 2");
  }
  if (!std::isfinite(comp.beta0_hat_H) || !std::isfinite(comp.beta2_hat_H)) {
    throw ConfigError("informative prior means must be finite");
  }
  if (!(comp.ss_m_H >= 0.0) || !std::isfinite(comp.ss_m_H)) {
    throw ConfigError("ss_m_H must be non-negative");
  }
}

void validate(const FlatComponent& comp) {
  require_positive(comp.k, "flat k");
  require_positive(comp.nu0, "flat nu0");
  require_positive(comp.sigma0_sq, "flat sigma0_sq");
}

void validate(const WeightPrior& weight) {
  require_positive(weight.alpha1, "alpha1");
  require_positive(weight.alpha2, "alpha2");
}

void validate(const MixturePrior& prior) {
  validate(prior.informative);
  validate(prior.flat);
  validate(prior.weight);
}

InformativeComponent fit_informative_component(const HistoricalDataset& hist,
                                               const KSpec& k_spec) {
  validate(hist);
  const std::size_t n = hist.size();
  const auto fit = centered_fit(
      n, [&](std::size_t i) { return hist.outcomes[i]; },
      [&](std::size_t i) { return hist.prognostic_scores[i]; });

  if (fit.rss == 0.0 || fit.rss <= 1e-26 * fit.ss_y) {
    throw DegenerateFit("historical residual sum of squares is zero; s2_H would be 0");
  }

  InformativeComponent comp;
  comp.beta0_hat_H = fit.intercept;
  comp.beta2_hat_H = fit.slope;
  comp.df_H = static_cast<int>(n) - 2;
  comp.s2_H = fit.rss / static_cast<double>(comp.df_H);
  comp.ss_m_H = fit.ss_m;

  const double nh = static_cast<double>(n);
  switch (k_spec.mode) {
    case KSpec::Mode::inverse_n:
      comp.K = {1.0 / nh, k_spec.k1, 1.0 / fit.ss_m};
      break;
    case KSpec::Mode::inverse_sqrt_n:
      comp.K = {1.0 / std::sqrt(nh), k_spec.k1, 1.0 / fit.ss_m};
      break;
    case KSpec::Mode::explicit_values:
      comp.K = k_spec.values;
      break;
  }
  validate(comp);
  return comp;
}

double log_prior_density_informative(const Vector3& beta, double sigma_sq,
                                     const InformativeComponent& comp) {
  if (!(sigma_sq > 0.0)) {
    throw std::invalid_argument("sigma_sq must be positive");
  }
  const Vector3 dev = beta - comp.mean();
  const double quad = (dev.array().square() / comp.K.array()).sum();
  const double log_det_k = comp.K.array().log().sum();
  const double log_normal =
      -1.5 * (kLogTwoPi + std::log(sigma_sq)) - 0.5 * log_det_k - 0.5 * quad / sigma_sq;
  return log_normal + log_scaled_inv_chisq(sigma_sq, comp.df_H, comp.s2_H);
}

double log_prior_density_flat(const Vector3& beta, double sigma_sq, const FlatComponent& comp) {
  if (!(sigma_sq > 0.0)) {
    throw std::invalid_argument("sigma_sq must be positive");
  }
  const double log_normal = -1.5 * (kLogTwoPi + std::log(comp.k * sigma_sq)) -
                            0.5 * beta.squaredNorm() / (comp.k * sigma_sq);
  return log_normal + log_scaled_inv_chisq(sigma_sq, comp.nu0, comp.sigma0_sq);
}

double log_beta_density(double omega, const WeightPrior& weight) {
  const double a = weight.alpha1;
  const double b = weight.alpha2;
  return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + (a - 1.0) * std::log(omega) +
         (b - 1.0) * std::log1p(-omega);
}

double bootstrap_delta_variance(const HistoricalDataset& hist, int trial_n, int replicates,
                                std::uint64_t seed, Execution ex) {
  validate(hist);
  if (replicates < 100) {
    throw std::invalid_argument("bootstrap needs at least 100 replicates");
  }
  if (trial_n < 3) {
    throw std::invalid_argument("bootstrap resample size must be at least 3");
  }
  constexpr int kMaxRedraws = 100;
  const std::size_t n_h = hist.size();
  const auto n = static_cast<std::size_t>(trial_n);

  std::vector<double> intercepts(static_cast<std::size_t>(replicates));
  for_each_index(intercepts.size(), ex, [&](std::size_t j) {
    Rng rng = make_stream(seed, j);
    std::uniform_int_distribution<std::size_t> pick(0, n_h - 1);
    std::vector<std::size_t> idx(n);
    for (int attempt = 0;; ++attempt) {
      if (attempt > kMaxRedraws) {
        throw DegenerateResample("replicate " + std::to_string(j) +
                                 " drew constant scores on every retry");
      }
      for (auto& i : idx) {
        i = pick(rng);
      }
      const auto fit = centered_fit(
          n, [&](std::size_t i) { return hist.outcomes[idx[i]]; },
          [&](std::size_t i) { return hist.prognostic_scores[idx[i]]; });
      if (fit.ss_m > 0.0) {
        intercepts[j] = fit.intercept;
        return;
      }
    }
  });

  double mean = 0.0;
  for (double b : intercepts) {
    mean += b;
  }
  mean /= static_cast<double>(intercepts.size());
  double ss = 0.0;
  for (double b : intercepts) {
    ss += (b - mean) * (b - mean);
  }
  return ss / static_cast<double>(intercepts.size() - 1);
}

CalibratedK calibrate_k(const InformativeComponent& comp, double gamma, double var_delta) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw ConfigError("gamma must be positive; gamma = 0 gives K2 = 0");
  }
  if (!(var_delta >= 0.0) || !std::isfinite(var_delta)) {
    throw ConfigError("Var(Delta) must be non-negative");
  }
  if (!(comp.s2_H > 0.0)) {
    throw ConfigError("s2_H must be positive");
  }
  if (!(comp.ss_m_H > 0.0)) {
    throw ConfigError("historical score sum of squares must be positive");
  }
  const double n_h = comp.n_H();
  return {gamma / n_h + var_delta / comp.s2_H, gamma / (n_h * comp.ss_m_H)};
}

InformativeComponent with_calibrated_k(InformativeComponent comp, double gamma,
                                       double var_delta) {
  const auto k = calibrate_k(comp, gamma, var_delta);
  comp.K(0) = k.K0;
  comp.K(2) = k.K2;
  return comp;
}

double prior_beta1_variance(const MixturePrior& prior, double omega) {
  if (!(omega > 0.0 && omega < 1.0)) {
    throw std::invalid_argument("omega must lie in (0, 1)");
  }
  constexpr double inf = std::numeric_limits<double>::infinity();
  const auto& inf_c = prior.informative;
  const auto& flat = prior.flat;
  const double df_h = inf_c.df_H;
  const double e_sigma_inf = df_h > 2.0 ? df_h * inf_c.s2_H / (df_h - 2.0) : inf;
  const double e_sigma_flat = flat.nu0 > 2.0 ? flat.nu0 * flat.sigma0_sq / (flat.nu0 - 2.0) : inf;
  if (std::isinf(e_sigma_inf) || std::isinf(e_sigma_flat)) {
    return inf;
  }
  // Both components centre beta1 at 0, so there is no between-component term.
  return omega * inf_c.K(1) * e_sigma_inf + (1.0 - omega) * flat.k * e_sigma_flat;
}

double prior_effective_sample_size(const MixturePrior& prior, double omega, double s_sq) {
  const double v = prior_beta1_variance(prior, omega);
  if (std::isinf(v)) {
    throw UndefinedPriorESS("prior Var(beta1 | omega) is infinite (a sigma^2 prior has df <= 2)");
  }
  if (!(v > 0.0)) {
    throw UndefinedPriorESS("prior Var(beta1 | omega) is not positive");
  }
  return 4.0 * s_sq / v;
}

}  // namespace bprocova
