#include "bprocova/simulation.hpp"

#include "bprocova/error.hpp"
#include "bprocova/posterior.hpp"
#include "bprocova/random.hpp"
#include "bprocova/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

namespace bprocova {

namespace {

// Neumaier compensated summation.
class CompensatedSum {
public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      c_ += (sum_ - t) + x;
    } else {
      c_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + c_; }

private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

void require(bool ok, const std::string& what) {
  if (!ok) {
    throw ConfigError(what);
  }
}

}  // namespace

std::string to_string(K0Mode mode) {
  switch (mode) {
    case K0Mode::inverse_n:
      return "inverse_N";
    case K0Mode::inverse_sqrt_n:
      return "inverse_sqrt_N";
    case K0Mode::appendix_b:
      return "appendix_B";
  }
  return "inverse_N";
}

K0Mode parse_k0_mode(const std::string& name) {
  if (name == "inverse_N") return K0Mode::inverse_n;
  if (name == "inverse_sqrt_N") return K0Mode::inverse_sqrt_n;
  if (name == "appendix_B") return K0Mode::appendix_b;
  throw ConfigError("unknown K0_mode '" + name + "' (expected inverse_N, inverse_sqrt_N or appendix_B)");
}

void validate(const ScenarioConfig& c) {
  require(c.trial_N >= 4, "trial_N must be at least 4");
  require(c.hist_N >= 4, "hist_N must be at least 4");
  require(c.rand_prob > 0.0 && c.rand_prob < 1.0, "rand_prob must lie in (0, 1)");
  const int treated = static_cast<int>(std::floor(c.trial_N * c.rand_prob));
  require(treated >= 1 && treated < c.trial_N, "randomization leaves an empty arm");
  require(c.rho_H >= 0.0 && c.rho_H <= 0.99, "rho_H must lie in [0, 0.99]");
  const double rho_t = c.rho_H + c.rho_shift;
  require(rho_t >= 0.0 && rho_t <= 0.99, "rho_H + rho_shift must lie in [0, 0.99]");
  require(std::isfinite(c.bias_shift) && std::isfinite(c.beta1_true), "shifts must be finite");
  require(c.sigma_sq_true > 0.0, "sigma_sq_true must be positive");
  require(c.K1 > 0.0 && c.k > 0.0, "K1 and k must be positive");
  require(c.nu0 > 0.0 && c.sigma0_sq > 0.0, "flat sigma^2 prior must be positive");
  require(c.weight_prior.alpha1 > 0.0 && c.weight_prior.alpha2 > 0.0, "Beta prior must be positive");
  require(c.replicates > 0, "replicates must be positive");
  require(c.iterations > 0 && c.burn_in >= 0 && c.burn_in < c.iterations,
          "burn_in must lie in [0, iterations)");
  require(c.omega_grid_size > 0, "omega_grid_size must be positive");
  require(c.credible_alpha > 0.0 && c.credible_alpha < 1.0, "credible_alpha must lie in (0, 1)");
  if (c.K0_mode == K0Mode::appendix_b) {
    require(c.gamma > 0.0, "gamma must be positive");
    require(c.var_delta >= 0.0, "var_delta must be non-negative");
  }
}

double beta2_from_correlation(double rho, double sigma) {
  if (!(rho >= 0.0 && rho <= 0.99)) {
    throw std::invalid_argument("rho must lie in [0, 0.99]");
  }
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("sigma must be positive");
  }
  return rho * sigma / std::sqrt(1.0 - rho * rho);
}

std::pair<HistoricalDataset, TrialDataset> generate_pair(const ScenarioConfig& config,
                                                         std::size_t replicate_index) {
  validate(config);
  Rng rng = make_stream(config.seed, 2 * replicate_index);
  const double sigma = std::sqrt(config.sigma_sq_true);

  HistoricalDataset hist;
  const auto n_h = static_cast<std::size_t>(config.hist_N);
  hist.prognostic_scores.resize(n_h);
  hist.outcomes.resize(n_h);
  double m_sum = 0.0;
  for (auto& m : hist.prognostic_scores) {
    m = sample_standard_normal(rng);
    m_sum += m;
  }
  const double m_bar_h = m_sum / static_cast<double>(n_h);
  const double beta2_h = beta2_from_correlation(config.rho_H, sigma);
  for (std::size_t i = 0; i < n_h; ++i) {
    hist.outcomes[i] = beta2_h * (hist.prognostic_scores[i] - m_bar_h) + m_bar_h +
                       sigma * sample_standard_normal(rng);
  }

  const double beta2_t = beta2_from_correlation(config.rho_H + config.rho_shift, sigma);
  const Vector3 beta_t{config.bias_shift, config.beta1_true, beta2_t};
  const auto generator = linear_model_generator(config.trial_N, config.rand_prob);
  TrialDataset trial = generator(beta_t, config.sigma_sq_true, rng);
  return {std::move(hist), std::move(trial)};
}

MixturePrior scenario_prior(const ScenarioConfig& config, const HistoricalDataset& hist) {
  MixturePrior prior;
  switch (config.K0_mode) {
    case K0Mode::inverse_n:
      prior.informative = fit_informative_component(hist, KSpec::inverse_n(config.K1));
      break;
    case K0Mode::inverse_sqrt_n:
      prior.informative = fit_informative_component(hist, KSpec::inverse_sqrt_n(config.K1));
      break;
    case K0Mode::appendix_b:
      prior.informative = with_calibrated_k(fit_informative_component(hist, KSpec::inverse_n(config.K1)),
                                            config.gamma, config.var_delta);
      break;
  }
  prior.flat = {config.k, config.nu0, config.sigma0_sq};
  prior.weight = config.weight_prior;
  return prior;
}

ReplicateRecord run_replicate(const ScenarioConfig& config, std::size_t index) {
  ReplicateRecord rec;
  rec.index = index;
  try {
    const auto [hist, trial] = generate_pair(config, index);
    const MixturePrior prior = scenario_prior(config, hist);
    const DesignMatrix design = build_design(trial);

    GibbsConfig gibbs;
    gibbs.iterations = config.iterations;
    gibbs.burn_in = config.burn_in;
    gibbs.omega_grid_size = config.omega_grid_size;
    gibbs.seed = stream_seed(config.seed, 2 * index + 1);
    const Chain chain = gibbs_run(design, prior, gibbs);
    const ChainSummary summary = summarize(chain, config.burn_in);

    std::vector<double> beta1;
    beta1.reserve(summary.draws);
    for (std::size_t j = static_cast<std::size_t>(config.burn_in); j < chain.size(); ++j) {
      beta1.push_back(chain[j].beta(1));
    }
    rec.posterior_mean = summary.beta1_mean;
    rec.posterior_var = summary.beta1_var;
    rec.ci_lower = sample_quantile(beta1, 0.5 * config.credible_alpha);
    rec.ci_upper = sample_quantile(beta1, 1.0 - 0.5 * config.credible_alpha);
    rec.reject = rec.ci_lower > 0.0 || rec.ci_upper < 0.0;
    rec.omega_star_mean = summary.omega_star_mean;
    rec.omega_mean = summary.omega_mean;

    const OlsFit fit = procova_fit(trial, config.hc_variant);
    rec.procova_beta1 = fit.beta1();
    rec.procova_var = fit.hc_cov(1, 1);
    rec.procova_reject = procova_ci_and_test(fit, config.credible_alpha).reject;

    const EssResult e = ess(config.trial_N, rec.procova_var, rec.posterior_var);
    rec.ess = e.ess;
    rec.ess_minus_n = e.reduction;
    rec.ess_ratio = rec.procova_var / rec.posterior_var;
    rec.variance_reduction_pct = 100.0 * (1.0 - rec.posterior_var / rec.procova_var);
    rec.ok = true;
  } catch (const std::exception& ex) {
    rec.ok = false;
    rec.error = ex.what();
  }
  return rec;
}

DistributionSummary summarize_distribution(const std::vector<double>& values) {
  DistributionSummary s;
  if (values.empty()) {
    return s;
  }
  CompensatedSum total;
  for (double v : values) {
    total.add(v);
  }
  s.mean = total.value() / static_cast<double>(values.size());
  s.median = sample_quantile(values, 0.5);
  s.q25 = sample_quantile(values, 0.25);
  s.q75 = sample_quantile(values, 0.75);
  s.min = *std::min_element(values.begin(), values.end());
  s.max = *std::max_element(values.begin(), values.end());
  return s;
}

ScenarioResult aggregate(const ScenarioConfig& config, std::vector<ReplicateRecord> records) {
  ScenarioResult out;
  out.config = config;
  CompensatedSum signed_bias;
  CompensatedSum abs_error;
  CompensatedSum omega_star;
  CompensatedSum omega_draw;
  std::size_t rejects = 0;
  std::size_t procova_rejects = 0;
  std::vector<double> reductions;
  std::vector<double> ratios;
  for (const auto& r : records) {
    if (!r.ok) {
      ++out.failed;
      continue;
    }
    ++out.succeeded;
    const double err = r.posterior_mean - config.beta1_true;
    signed_bias.add(err);
    abs_error.add(std::abs(err));
    omega_star.add(r.omega_star_mean);
    omega_draw.add(r.omega_mean);
    rejects += r.reject ? 1 : 0;
    procova_rejects += r.procova_reject ? 1 : 0;
    reductions.push_back(r.variance_reduction_pct);
    ratios.push_back(r.ess_ratio);
  }
  if (out.succeeded > 0) {
    const auto n = static_cast<double>(out.succeeded);
    out.mean_signed_bias = signed_bias.value() / n;
    out.mean_abs_bias = std::abs(out.mean_signed_bias);
    out.mean_abs_error = abs_error.value() / n;
    out.avg_posterior_omega = omega_star.value() / n;
    out.avg_omega_draw = omega_draw.value() / n;
    out.type1_error_rate = static_cast<double>(rejects) / n;
    out.procova_type1_error_rate = static_cast<double>(procova_rejects) / n;
  }
  out.variance_reduction_pct = summarize_distribution(reductions);
  out.ess_ratio = summarize_distribution(ratios);
  out.records = std::move(records);
  return out;
}

ScenarioResult run_scenario(const ScenarioConfig& config, Execution ex) {
  validate(config);
  std::vector<ReplicateRecord> records(static_cast<std::size_t>(config.replicates));
  for_each_index(records.size(), ex,
                 [&](std::size_t i) { records[i] = run_replicate(config, i); });

  ScenarioResult result = aggregate(config, std::move(records));
  if (static_cast<double>(result.failed) > 0.01 * static_cast<double>(config.replicates)) {
    std::string first;
    for (const auto& r : result.records) {
      if (!r.ok) {
        first = r.error;
        break;
      }
    }
    throw ScenarioFailed(std::to_string(result.failed) + " of " +
                         std::to_string(config.replicates) + " replicates failed; first: " + first);
  }
  return result;
}

std::vector<Type1Row> type1_error_curve(const ScenarioConfig& base,
                                        const std::vector<double>& shifts,
                                        const std::vector<double>& gamma_grid, Execution ex) {
  if (gamma_grid.empty()) {
    throw ConfigError("gamma grid is empty");
  }
  if (shifts.empty()) {
    throw ConfigError("shift grid is empty");
  }
  std::vector<Type1Row> rows;
  for (double gamma : gamma_grid) {
    for (double shift : shifts) {
      ScenarioConfig cfg = base;
      cfg.K0_mode = K0Mode::appendix_b;
      cfg.gamma = gamma;
      cfg.bias_shift = shift;
      const ScenarioResult res = run_scenario(cfg, ex);
      Type1Row row;
      row.gamma = gamma;
      row.shift = shift;
      row.type1_error_rate = res.type1_error_rate;
      row.procova_type1_error_rate = res.procova_type1_error_rate;
      row.mean_variance_reduction_pct = res.variance_reduction_pct.mean;
      row.median_variance_reduction_pct = res.variance_reduction_pct.median;
      row.avg_posterior_omega = res.avg_posterior_omega;
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<ScenarioConfig> reference_grid(int scenario, const ScenarioConfig& base) {
  if (scenario < 1 || scenario > 5) {
    throw ConfigError("reference scenarios are numbered 1 to 5");
  }
  ScenarioConfig proto = base;
  proto.weight_prior = {1.0, 1.0};
  proto.nu0 = 1.0;
  proto.sigma0_sq = 1.0;
  std::vector<double> rho_shifts{0.0};
  std::vector<double> bias_shifts{0.0};
  std::vector<std::pair<double, double>> sigma_priors{{1.0, 1.0}};
  switch (scenario) {
    case 2:
      proto.weight_prior = {0.5, 0.5};
      break;
    case 3:
      sigma_priors = {{3.0, 100.0}};
      break;
    case 4:
      rho_shifts = {-0.2, -0.1, 0.1, 0.2};
      break;
    case 5:
      bias_shifts = {1.0, 2.0, 3.0, 4.0, 5.0};
      sigma_priors = {{1.0, 1.0}, {3.0, 100.0}};
      break;
    default:
      break;
  }

  std::vector<ScenarioConfig> cells;
  for (int n : {25, 50, 100, 250}) {
    for (int n_h : {100, 300, 500}) {
      for (double rho : {0.0, 0.1, 0.2, 0.3, 0.4, 0.5}) {
        for (double rs : rho_shifts) {
          const double rho_t = rho + rs;
          if (rho_t < -1e-12 || rho_t >= 1.0) {
            if (n == 25 && n_h == 100) {
              std::cerr << "note: skipping scenario " << scenario << " cells rho_H=" << rho
                        << " shift=" << rs << " (trial correlation outside [0, 1))\n";
            }
            continue;
          }
          for (double bs : bias_shifts) {
            for (const auto& [nu0, s0] : sigma_priors) {
              ScenarioConfig c = proto;
              c.trial_N = n;
              c.hist_N = n_h;
              c.rho_H = rho;
              c.rho_shift = std::abs(rho_t) < 1e-12 ? -rho : rs;
              c.bias_shift = bs;
              c.nu0 = nu0;
              c.sigma0_sq = s0;
              c.name = "scenario" + std::to_string(scenario) + "_N" + std::to_string(n) + "_NH" +
                       std::to_string(n_h) + "_rho" + std::to_string(rho).substr(0, 3) +
                       "_rs" + std::to_string(rs).substr(0, rs < 0 ? 4 : 3) + "_bs" +
                       std::to_string(static_cast<int>(bs)) + "_nu" +
                       std::to_string(static_cast<int>(nu0));
              cells.push_back(std::move(c));
            }
          }
        }
      }
    }
  }
  return cells;
}

}  // namespace bprocova
