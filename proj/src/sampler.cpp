#include "bprocova/sampler.hpp"

#include "bprocova/error.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace bprocova {

namespace {

// Inverse CDF of a grid density given at the midpoints `points` (spacing h),
// with unnormalized non-negative `weights`. Nodes are 0, the midpoints and 1;
// the endpoint values copy their nearest midpoint.
class GridInverseCdf {
public:
  double sample(const std::vector<double>& points, const std::vector<double>& weights,
                double u) {
    const std::size_t g = points.size();
    nodes_.resize(g + 2);
    cdf_.resize(g + 2);
    nodes_[0] = 0.0;
    for (std::size_t i = 0; i < g; ++i) {
      nodes_[i + 1] = points[i];
    }
    nodes_[g + 1] = 1.0;

    cdf_[0] = 0.0;
    double prev_w = weights[0];
    for (std::size_t k = 1; k < g + 2; ++k) {
      const double w = k <= g ? weights[k - 1] : weights[g - 1];
      cdf_[k] = cdf_[k - 1] + 0.5 * (prev_w + w) * (nodes_[k] - nodes_[k - 1]);
      prev_w = w;
    }
    const double total = cdf_.back();
    if (!(total > 0.0) || !std::isfinite(total)) {
      throw NonFiniteDensity("grid density has no mass");
    }
    const double target = u * total;
    // First node whose cumulative mass exceeds the target.
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
    std::size_t k = static_cast<std::size_t>(it - cdf_.begin());
    k = std::clamp<std::size_t>(k, 1, g + 1);
    const double span = cdf_[k] - cdf_[k - 1];
    const double frac = span > 0.0 ? (target - cdf_[k - 1]) / span : 0.5;
    double x = nodes_[k - 1] + frac * (nodes_[k] - nodes_[k - 1]);
    constexpr double tiny = 1e-12;
    return std::clamp(x, tiny, 1.0 - tiny);
  }

private:
  std::vector<double> nodes_;
  std::vector<double> cdf_;
};

}  // namespace

void validate(const GibbsConfig& config) {
  if (config.iterations <= 0) {
    throw ConfigError("iterations must be positive");
  }
  if (config.burn_in < 0 || config.burn_in >= config.iterations) {
    throw ConfigError("burn_in must lie in [0, iterations)");
  }
  if (!(config.omega_init > 0.0 && config.omega_init < 1.0)) {
    throw ConfigError("omega_init must lie in (0, 1)");
  }
  if (config.omega_grid_size <= 0) {
    throw ConfigError("omega_grid_size must be positive");
  }
  if (config.fixed_omega && !(*config.fixed_omega >= 0.0 && *config.fixed_omega <= 1.0)) {
    throw ConfigError("fixed omega must lie in [0, 1]");
  }
  if (!(config.sigma_sq_draw_scale > 0.0)) {
    throw ConfigError("sigma_sq_draw_scale must be positive");
  }
}

double sample_omega_inverse_cdf(const OmegaDensity& density, double u) {
  if (!(u > 0.0 && u < 1.0)) {
    throw std::invalid_argument("u must lie in (0, 1)");
  }
  if (density.points.empty() || density.points.size() != density.density.size()) {
    throw std::invalid_argument("malformed omega density table");
  }
  GridInverseCdf inv;
  return inv.sample(density.points, density.density, u);
}

Chain gibbs_run(const ComponentFits& fits, const MixturePrior& prior, const GibbsConfig& config) {
  validate(config);
  validate(prior);

  const OmegaGrid grid = OmegaGrid::midpoint(static_cast<std::size_t>(config.omega_grid_size));
  const std::size_t g = grid.size();
  std::vector<double> log_beta(g);
  for (std::size_t i = 0; i < g; ++i) {
    log_beta[i] = log_beta_density(grid.points[i], prior.weight);
  }
  std::vector<double> log_dens(g);
  std::vector<double> weights(g);
  GridInverseCdf inverse_cdf;
  bool warned = false;

  const MvnFactor factor_inf(fits.informative.cov_factor);
  const MvnFactor factor_flat(fits.flat.cov_factor);

  Rng rng(config.seed);
  double omega = config.fixed_omega.value_or(config.omega_init);

  Chain chain;
  chain.reserve(static_cast<std::size_t>(config.iterations));
  for (int j = 0; j < config.iterations; ++j) {
    GibbsDraw draw;
    // Steps 1-2: component weight given the previous omega, then the indicator.
    draw.omega_star = mixture_weight(omega, fits.log_ml_informative, fits.log_ml_flat);
    draw.z = sample_open_uniform(rng) < draw.omega_star ? 1 : 0;

    // Steps 3-4: sigma^2 then beta from the selected component.
    const ComponentPosterior& post = draw.z == 1 ? fits.informative : fits.flat;
    const MvnFactor& factor = draw.z == 1 ? factor_inf : factor_flat;
    draw.sigma_sq = sample_scaled_inv_chisq(post.sigma_df, post.sigma_scale, rng) *
                    config.sigma_sq_draw_scale;
    if (!std::isfinite(draw.sigma_sq) || !(draw.sigma_sq > 0.0)) {
      throw ChainDiverged("sigma^2 draw is not finite and positive at iteration " +
                          std::to_string(j));
    }
    draw.beta = factor.draw(post.beta_mean, draw.sigma_sq, rng);

    // Step 5: omega by inverse CDF of its grid-normalized full conditional.
    if (!config.fixed_omega) {
      const double la = log_prior_density_informative(draw.beta, draw.sigma_sq, prior.informative);
      const double lb = log_prior_density_flat(draw.beta, draw.sigma_sq, prior.flat);
      double max_log = -std::numeric_limits<double>::infinity();
      if (std::isfinite(la) || std::isfinite(lb)) {
        // log(w e^la + (1 - w) e^lb) with the larger term factored out.
        const bool inf_larger = la >= lb;
        const double top = inf_larger ? la : lb;
        const double ratio = std::exp((inf_larger ? lb : la) - top);
        for (std::size_t i = 0; i < g; ++i) {
          const double w = grid.points[i];
          const double mix = inf_larger ? w + (1.0 - w) * ratio : w * ratio + (1.0 - w);
          log_dens[i] = log_beta[i] + top + std::log(mix);
          max_log = std::max(max_log, log_dens[i]);
        }
      }
      if (std::isfinite(max_log)) {
        for (std::size_t i = 0; i < g; ++i) {
          weights[i] = std::exp(log_dens[i] - max_log);
        }
      } else {
        if (!warned) {
          std::cerr << "warning: conditional omega density underflowed; using the Beta prior\n";
          warned = true;
        }
        const double top = *std::max_element(log_beta.begin(), log_beta.end());
        for (std::size_t i = 0; i < g; ++i) {
          weights[i] = std::exp(log_beta[i] - top);
        }
      }
      omega = inverse_cdf.sample(grid.points, weights, sample_open_uniform(rng));
    }
    draw.omega = omega;
    chain.push_back(draw);
  }
  return chain;
}

Chain gibbs_run(const DesignMatrix& design, const MixturePrior& prior, const GibbsConfig& config) {
  return gibbs_run(fit_components(design, prior), prior, config);
}

std::vector<Chain> gibbs_run_chains(const DesignMatrix& design, const MixturePrior& prior,
                                    const GibbsConfig& config, int chains, Execution ex) {
  if (chains <= 0) {
    throw ConfigError("chains must be positive");
  }
  const ComponentFits fits = fit_components(design, prior);
  std::vector<Chain> out(static_cast<std::size_t>(chains));
  for_each_index(out.size(), ex, [&](std::size_t c) {
    GibbsConfig cfg = config;
    cfg.seed = chains == 1 ? config.seed : stream_seed(config.seed, c);
    out[c] = gibbs_run(fits, prior, cfg);
  });
  return out;
}

Chain pool_after_burn_in(const std::vector<Chain>& chains, int burn_in) {
  Chain pooled;
  for (const auto& chain : chains) {
    if (static_cast<std::size_t>(burn_in) < chain.size()) {
      pooled.insert(pooled.end(), chain.begin() + burn_in, chain.end());
    }
  }
  return pooled;
}

double sample_quantile(std::vector<double> values, double p) {
  if (values.empty()) {
    throw std::invalid_argument("quantile of an empty sample");
  }
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double batch_means_se(const std::vector<double>& values, int batches) {
  const std::size_t n = values.size();
  if (n < 2) {
    return 0.0;
  }
  const std::size_t b = n / static_cast<std::size_t>(batches);
  if (b < 1 || batches < 2) {
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : values) {
      ss += (v - mean) * (v - mean);
    }
    return std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
  }
  std::vector<double> means(static_cast<std::size_t>(batches), 0.0);
  for (std::size_t k = 0; k < means.size(); ++k) {
    for (std::size_t i = 0; i < b; ++i) {
      means[k] += values[k * b + i];
    }
    means[k] /= static_cast<double>(b);
  }
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(batches);
  double ss = 0.0;
  for (double m : means) {
    ss += (m - grand) * (m - grand);
  }
  return std::sqrt(ss / static_cast<double>(batches - 1) / static_cast<double>(batches));
}

ChainSummary summarize(const Chain& chain, int burn_in) {
  if (burn_in < 0 || static_cast<std::size_t>(burn_in) >= chain.size()) {
    throw std::invalid_argument("burn_in leaves no draws to summarize");
  }
  std::vector<double> beta1;
  beta1.reserve(chain.size() - static_cast<std::size_t>(burn_in));
  ChainSummary s;
  std::size_t positive = 0;
  std::size_t informative = 0;
  for (std::size_t j = static_cast<std::size_t>(burn_in); j < chain.size(); ++j) {
    const auto& d = chain[j];
    beta1.push_back(d.beta(1));
    s.omega_mean += d.omega;
    s.omega_star_mean += d.omega_star;
    positive += d.beta(1) > 0.0 ? 1 : 0;
    informative += static_cast<std::size_t>(d.z);
  }
  const auto n = static_cast<double>(beta1.size());
  s.draws = beta1.size();
  s.omega_mean /= n;
  s.omega_star_mean /= n;
  s.prob_beta1_positive = static_cast<double>(positive) / n;
  s.informative_fraction = static_cast<double>(informative) / n;

  s.beta1_mean = std::accumulate(beta1.begin(), beta1.end(), 0.0) / n;
  double ss = 0.0;
  for (double b : beta1) {
    ss += (b - s.beta1_mean) * (b - s.beta1_mean);
  }
  s.beta1_var = beta1.size() > 1 ? ss / (n - 1.0) : 0.0;
  s.mc_se_beta1 = batch_means_se(beta1);
  s.beta1_q025 = sample_quantile(beta1, 0.025);
  s.beta1_q50 = sample_quantile(beta1, 0.5);
  s.beta1_q975 = sample_quantile(beta1, 0.975);
  return s;
}

void write_chain_csv(std::ostream& out, const Chain& chain) {
  out << "iter,beta0,beta1,beta2,sigma_sq,omega,z\n";
  char buf[256];
  for (std::size_t j = 0; j < chain.size(); ++j) {
    const auto& d = chain[j];
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", j + 1, d.beta(0),
                  d.beta(1), d.beta(2), d.sigma_sq, d.omega, d.z);
    out << buf;
  }
}

// ---- SBC --------------------------------------------------------------------

PriorDraw sample_mixture_prior(const MixturePrior& prior, Rng& rng) {
  PriorDraw d;
  d.omega = sample_beta(prior.weight.alpha1, prior.weight.alpha2, rng);
  d.z = sample_open_uniform(rng) < d.omega ? 1 : 0;
  if (d.z == 1) {
    const auto& c = prior.informative;
    d.sigma_sq = sample_scaled_inv_chisq(c.df_H, c.s2_H, rng);
    Vector3 sd = c.K.cwiseSqrt() * std::sqrt(d.sigma_sq);
    const Vector3 mean = c.mean();
    for (int i = 0; i < 3; ++i) {
      d.beta(i) = mean(i) + sd(i) * sample_standard_normal(rng);
    }
  } else {
    const auto& c = prior.flat;
    d.sigma_sq = sample_scaled_inv_chisq(c.nu0, c.sigma0_sq, rng);
    const double sd = std::sqrt(c.k * d.sigma_sq);
    for (int i = 0; i < 3; ++i) {
      d.beta(i) = sd * sample_standard_normal(rng);
    }
  }
  return d;
}

TrialGenerator linear_model_generator(int n, double rand_prob) {
  if (n < 4) {
    throw ConfigError("generated trials need at least 4 subjects");
  }
  const int treated = static_cast<int>(std::floor(n * rand_prob));
  if (treated < 1 || treated >= n) {
    throw ConfigError("randomization must leave both arms non-empty");
  }
  return [n, treated](const Vector3& beta, double sigma_sq, Rng& rng) {
    TrialDataset trial;
    trial.subjects.resize(static_cast<std::size_t>(n));
    double m_sum = 0.0;
    for (auto& s : trial.subjects) {
      s.prognostic_score = sample_standard_normal(rng);
      m_sum += s.prognostic_score;
    }
    const double m_bar = m_sum / n;
    std::vector<int> arm(static_cast<std::size_t>(n), 0);
    std::fill(arm.begin(), arm.begin() + treated, 1);
    std::shuffle(arm.begin(), arm.end(), rng);
    const double sigma = std::sqrt(sigma_sq);
    for (std::size_t i = 0; i < trial.subjects.size(); ++i) {
      auto& s = trial.subjects[i];
      s.treatment = arm[i];
      s.outcome = beta(0) + beta(1) * s.treatment + beta(2) * (s.prognostic_score - m_bar) +
                  m_bar + sigma * sample_standard_normal(rng);
    }
    return trial;
  };
}

SbcResult rank_uniformity(std::vector<int> ranks, int rank_levels, int bins) {
  if (bins < 2 || rank_levels < bins || rank_levels % bins != 0) {
    throw std::invalid_argument("rank levels must be a positive multiple of the bin count");
  }
  SbcResult out;
  out.rank_levels = rank_levels;
  out.bin_counts.assign(static_cast<std::size_t>(bins), 0);
  const int per_bin = rank_levels / bins;
  for (int r : ranks) {
    if (r < 0 || r >= rank_levels) {
      throw std::invalid_argument("rank out of range");
    }
    ++out.bin_counts[static_cast<std::size_t>(r / per_bin)];
  }
  const double expected = static_cast<double>(ranks.size()) / bins;
  for (int c : out.bin_counts) {
    out.chi_square += (c - expected) * (c - expected) / expected;
  }
  out.df = bins - 1;
  boost::math::chi_squared dist(out.df);
  out.p_value = boost::math::cdf(boost::math::complement(dist, out.chi_square));
  out.ranks = std::move(ranks);
  return out;
}

MixturePrior reference_sbc_prior() {
  MixturePrior p;
  p.informative.beta0_hat_H = 0.0;
  p.informative.beta2_hat_H = 0.5;
  p.informative.s2_H = 1.0;
  p.informative.df_H = 98;
  p.informative.K = Vector3(0.05, 1.0, 0.05);
  p.informative.ss_m_H = 100.0;
  p.flat = {10.0, 5.0, 1.0};
  p.weight = {1.0, 1.0};
  return p;
}

SbcResult sbc_validate(const MixturePrior& prior, const TrialGenerator& generator,
                       const SbcConfig& config, Execution ex) {
  if (config.replications <= 0) {
    throw ConfigError("SBC needs at least one replication");
  }
  if (config.thin <= 0 || config.rank_bins < 2) {
    throw ConfigError("SBC thinning and bin count must be positive");
  }
  validate(config.gibbs);
  validate(prior);

  const int kept = (config.gibbs.iterations - config.gibbs.burn_in + config.thin - 1) / config.thin;
  // Use the last L thinned draws with L + 1 a multiple of the bin count so
  // every bin covers the same number of rank values.
  const int levels = ((kept + 1) / config.rank_bins) * config.rank_bins;
  if (levels < config.rank_bins) {
    throw ConfigError("too few thinned draws for the requested rank bins");
  }
  const int used = levels - 1;

  std::vector<int> ranks(static_cast<std::size_t>(config.replications));
  for_each_index(ranks.size(), ex, [&](std::size_t r) {
    Rng rng = make_stream(config.seed, 2 * r);
    const PriorDraw truth = sample_mixture_prior(prior, rng);
    const TrialDataset trial = generator(truth.beta, truth.sigma_sq, rng);
    const DesignMatrix design = build_design(trial);

    GibbsConfig gibbs = config.gibbs;
    gibbs.seed = stream_seed(config.seed, 2 * r + 1);
    const Chain chain = gibbs_run(design, prior, gibbs);

    std::vector<double> thinned;
    for (int j = config.gibbs.burn_in; j < config.gibbs.iterations; j += config.thin) {
      thinned.push_back(chain[static_cast<std::size_t>(j)].beta(1));
    }
    int rank = 0;
    for (std::size_t i = thinned.size() - static_cast<std::size_t>(used); i < thinned.size(); ++i) {
      rank += thinned[i] < truth.beta(1) ? 1 : 0;
    }
    ranks[r] = rank;
  });
  return rank_uniformity(std::move(ranks), levels, config.rank_bins);
}

}  // namespace bprocova
