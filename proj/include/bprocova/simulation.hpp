#pragma once

#include "bprocova/data.hpp"
#include "bprocova/frequentist.hpp"
#include "bprocova/parallel.hpp"
#include "bprocova/prior.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace bprocova {

enum class K0Mode { inverse_n, inverse_sqrt_n, appendix_b };

std::string to_string(K0Mode mode);
K0Mode parse_k0_mode(const std::string& name);

/// One simulation cell. Defaults follow the fixed settings of the reference
/// design (beta_0H = 0, beta_1 = 0, sigma^2 = 1, pi = 0.5, K1 = k = 100).
struct ScenarioConfig {
  std::string name = "scenario";
  int trial_N = 100;
  int hist_N = 500;
  double rho_H = 0.0;
  double rho_shift = 0.0;   // rho_T - rho_H
  double bias_shift = 0.0;  // beta_0T - beta_0H
  double beta1_true = 0.0;
  double sigma_sq_true = 1.0;
  double rand_prob = 0.5;
  K0Mode K0_mode = K0Mode::inverse_n;
  double gamma = 1.0;       // appendix_b only
  double var_delta = 0.0;   // appendix_b only
  double K1 = 100.0;
  double k = 100.0;
  WeightPrior weight_prior;
  double nu0 = 1.0;
  double sigma0_sq = 1.0;
  int replicates = 100;
  std::uint64_t seed = 1;
  int iterations = 1000;
  int burn_in = 100;
  int omega_grid_size = 2048;
  HcVariant hc_variant = HcVariant::HC1;
  double credible_alpha = 0.05;
};

/// Throws ConfigError on invalid settings (rho_H + rho_shift outside [0, 0.99],
/// empty arms, non-positive hyperparameters, ...).
void validate(const ScenarioConfig& config);

/// beta2 = rho sigma / sqrt(1 - rho^2), the slope giving Corr(m, y | w = 0) = rho
/// for standard-normal scores. Requires 0 <= rho <= 0.99.
double beta2_from_correlation(double rho, double sigma);

/// Historical and trial datasets for one replicate; deterministic in
/// (config.seed, replicate_index).
std::pair<HistoricalDataset, TrialDataset> generate_pair(const ScenarioConfig& config,
                                                         std::size_t replicate_index);

/// Mixture prior implied by the config and a historical dataset.
MixturePrior scenario_prior(const ScenarioConfig& config, const HistoricalDataset& hist);

struct ReplicateRecord {
  std::size_t index = 0;
  bool ok = false;
  std::string error;
  double posterior_mean = 0.0;  // Bayesian estimate of beta1
  double posterior_var = 0.0;   // V2
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  bool reject = false;
  double procova_beta1 = 0.0;
  double procova_var = 0.0;  // V1 = squared HC standard error
  bool procova_reject = false;
  double variance_reduction_pct = 0.0;
  double ess_ratio = 0.0;
  double ess = 0.0;
  double ess_minus_n = 0.0;
  double omega_star_mean = 0.0;  // posterior weight of the informative component
  double omega_mean = 0.0;       // posterior mean of the omega draws
};

struct DistributionSummary {
  double mean = 0.0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double min = 0.0;
  double max = 0.0;
};

DistributionSummary summarize_distribution(const std::vector<double>& values);

struct ScenarioResult {
  ScenarioConfig config;
  std::size_t succeeded = 0;
  std::size_t failed = 0;
  double mean_signed_bias = 0.0;  // mean(beta1_hat - beta1)
  double mean_abs_bias = 0.0;     // |mean(beta1_hat - beta1)|
  double mean_abs_error = 0.0;    // mean |beta1_hat - beta1|
  DistributionSummary variance_reduction_pct;
  DistributionSummary ess_ratio;
  double avg_posterior_omega = 0.0;
  double avg_omega_draw = 0.0;
  double type1_error_rate = 0.0;
  double procova_type1_error_rate = 0.0;
  std::vector<ReplicateRecord> records;
};

/// Fits one replicate (Bayesian PROCOVA via Gibbs and PROCOVA). Errors are
/// captured in the record rather than thrown.
ReplicateRecord run_replicate(const ScenarioConfig& config, std::size_t index);

/// Runs every replicate and aggregates. Throws ScenarioFailed when more than
/// 1% of replicates fail. Parallel and serial runs give identical records.
ScenarioResult run_scenario(const ScenarioConfig& config, Execution ex = Execution::parallel);

/// Aggregates records in index order with compensated sums.
ScenarioResult aggregate(const ScenarioConfig& config, std::vector<ReplicateRecord> records);

struct Type1Row {
  double gamma = 0.0;
  double shift = 0.0;
  double type1_error_rate = 0.0;
  double procova_type1_error_rate = 0.0;
  double mean_variance_reduction_pct = 0.0;
  double median_variance_reduction_pct = 0.0;
  double avg_posterior_omega = 0.0;
};

/// For every (gamma, shift) pair: calibrate K0/K2 per replicate with the
/// given Var(Delta) and tabulate the error rate and variance reduction.
std::vector<Type1Row> type1_error_curve(const ScenarioConfig& base,
                                        const std::vector<double>& shifts,
                                        const std::vector<double>& gamma_grid,
                                        Execution ex = Execution::parallel);

/// Cells of one of the five reference scenarios (1-5) over the N, N_H and
/// rho_H grids. Scenario-4 cells with rho_H + shift outside [0, 1) are
/// skipped with a note on stderr.
std::vector<ScenarioConfig> reference_grid(int scenario, const ScenarioConfig& base);

}  // namespace bprocova
