#pragma once

#include "bprocova/data.hpp"
#include "bprocova/parallel.hpp"
#include "bprocova/posterior.hpp"
#include "bprocova/prior.hpp"
#include "bprocova/random.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

namespace bprocova {

struct GibbsConfig {
  int iterations = 1000;
  int burn_in = 100;
  std::uint64_t seed = 0;
  double omega_init = 0.5;
  int omega_grid_size = 2048;
  /// Holds omega at this value (point mass, boundary values allowed) and
  /// skips the omega update, leaving the beta / sigma^2 steps only.
  std::optional<double> fixed_omega;
  /// Multiplies every sigma^2 draw. Only for SBC negative controls; 1 gives
  /// the correct sampler.
  double sigma_sq_draw_scale = 1.0;
};

void validate(const GibbsConfig& config);

struct GibbsDraw {
  Vector3 beta = Vector3::Zero();
  double sigma_sq = 0.0;
  double omega = 0.0;
  int z = 0;
  double omega_star = 0.0;  // P(z = 1 | omega^(j-1), y) used for this draw
};

using Chain = std::vector<GibbsDraw>;

/// Runs `config.iterations` Gibbs sweeps; the returned chain includes the
/// burn-in draws. Deterministic given config.seed.
Chain gibbs_run(const DesignMatrix& design, const MixturePrior& prior, const GibbsConfig& config);
Chain gibbs_run(const ComponentFits& fits, const MixturePrior& prior, const GibbsConfig& config);

/// Independent chains seeded from (config.seed, chain index).
std::vector<Chain> gibbs_run_chains(const DesignMatrix& design, const MixturePrior& prior,
                                    const GibbsConfig& config, int chains,
                                    Execution ex = Execution::parallel);

/// Post-burn-in draws of every chain, concatenated in chain order.
Chain pool_after_burn_in(const std::vector<Chain>& chains, int burn_in);

/// Inverse of the cumulative trapezoid of a normalized grid density,
/// interpolated linearly between nodes. u must lie in (0, 1).
double sample_omega_inverse_cdf(const OmegaDensity& density, double u);

struct ChainSummary {
  std::size_t draws = 0;
  double beta1_mean = 0.0;
  double beta1_var = 0.0;
  double beta1_q025 = 0.0;
  double beta1_q50 = 0.0;
  double beta1_q975 = 0.0;
  double omega_mean = 0.0;
  double omega_star_mean = 0.0;
  double prob_beta1_positive = 0.0;
  double informative_fraction = 0.0;  // share of draws with z = 1
  double mc_se_beta1 = 0.0;           // batch means, 20 batches
};

ChainSummary summarize(const Chain& chain, int burn_in);

/// Batch-means Monte Carlo standard error of the mean of `values`.
double batch_means_se(const std::vector<double>& values, int batches = 20);

/// Linear-interpolation sample quantile of unsorted values.
double sample_quantile(std::vector<double> values, double p);

/// CSV with columns iter,beta0,beta1,beta2,sigma_sq,omega,z.
void write_chain_csv(std::ostream& out, const Chain& chain);

// ---- simulation-based calibration ------------------------------------------

struct PriorDraw {
  Vector3 beta = Vector3::Zero();
  double sigma_sq = 1.0;
  double omega = 0.5;
  int z = 1;
};

/// Draw (omega, z, sigma^2, beta) from the full mixture prior.
PriorDraw sample_mixture_prior(const MixturePrior& prior, Rng& rng);

/// Simulates a trial from the centered-score regression at given parameters.
using TrialGenerator = std::function<TrialDataset(const Vector3& beta, double sigma_sq, Rng& rng)>;

/// Standard-normal scores, exactly floor(n * rand_prob) treated.
TrialGenerator linear_model_generator(int n, double rand_prob = 0.5);

/// Proper prior with finite sigma^2 moments; the sbc subcommand default.
MixturePrior reference_sbc_prior();

struct SbcConfig {
  int replications = 500;
  int rank_bins = 20;
  int thin = 5;
  std::uint64_t seed = 0;
  GibbsConfig gibbs;
};

struct SbcResult {
  std::vector<int> ranks;
  std::vector<int> bin_counts;
  int rank_levels = 0;  // ranks take values 0 .. rank_levels - 1
  double chi_square = 0.0;
  int df = 0;
  double p_value = 0.0;
};

SbcResult sbc_validate(const MixturePrior& prior, const TrialGenerator& generator,
                       const SbcConfig& config, Execution ex = Execution::parallel);

/// Pearson chi-square test of equal bin counts.
SbcResult rank_uniformity(std::vector<int> ranks, int rank_levels, int bins);

}  // namespace bprocova
