#include "bprocova/cli.hpp"

#include "bprocova/data.hpp"
#include "bprocova/error.hpp"
#include "bprocova/frequentist.hpp"
#include "bprocova/json_io.hpp"
#include "bprocova/posterior.hpp"
#include "bprocova/prior.hpp"
#include "bprocova/sampler.hpp"
#include "bprocova/simulation.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>
#include <boost/version.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

namespace bprocova {

namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kDefaultSeed = 20240101;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io:
      return 1;
    case ErrorKind::validation:
      return 2;
    case ErrorKind::numerical:
      return 3;
  }
  return 3;
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) {
    return *flag;
  }
  if (const char* env = std::getenv("PROCOVA_SEED"); env != nullptr && *env != '\0') {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(env, &used);
      if (used == std::string(env).size()) {
        return v;
      }
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string("PROCOVA_SEED is not a non-negative integer: '") + env + "'");
  }
  return kDefaultSeed;
}

Json software_versions() {
  return {{"bprocova", BPROCOVA_VERSION},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                        "." + std::to_string(EIGEN_MINOR_VERSION)},
          {"boost", std::to_string(BOOST_VERSION / 100000) + "." +
                        std::to_string(BOOST_VERSION / 100 % 1000) + "." +
                        std::to_string(BOOST_VERSION % 100)}};
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) {
    throw IoError("cannot write '" + path.string() + "'");
  }
  f << text;
  if (!f) {
    throw IoError("write failed for '" + path.string() + "'");
  }
}

std::string fmt(double x, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, x);
  return buf;
}

// Hyperparameter flags shared by analyze and calibrate. Unset flags keep the
// defaults (or the values of a loaded prior).
struct PriorFlags {
  std::optional<double> k;
  std::optional<double> nu0;
  std::optional<double> sigma0_sq;
  std::optional<double> alpha1;
  std::optional<double> alpha2;
  double K1 = 100.0;
  std::string k_mode = "inverse_N";

  void add(CLI::App* app) {
    app->add_option("--k", k, "flat prior scale k (default 100)");
    app->add_option("--nu0", nu0, "flat sigma^2 prior degrees of freedom (default 1)");
    app->add_option("--sigma0-sq", sigma0_sq, "flat sigma^2 prior scale (default 1)");
    app->add_option("--alpha1", alpha1, "Beta prior on omega, first shape (default 1)");
    app->add_option("--alpha2", alpha2, "Beta prior on omega, second shape (default 1)");
    app->add_option("--K1", K1, "informative prior scale of beta1");
    app->add_option("--k-mode", k_mode, "K0/K2 rule: inverse_N or inverse_sqrt_N")
        ->check(CLI::IsMember({"inverse_N", "inverse_sqrt_N"}));
  }

  KSpec k_spec() const {
    return k_mode == "inverse_sqrt_N" ? KSpec::inverse_sqrt_n(K1) : KSpec::inverse_n(K1);
  }

  void apply(MixturePrior& prior) const {
    if (k) prior.flat.k = *k;
    if (nu0) prior.flat.nu0 = *nu0;
    if (sigma0_sq) prior.flat.sigma0_sq = *sigma0_sq;
    if (alpha1) prior.weight.alpha1 = *alpha1;
    if (alpha2) prior.weight.alpha2 = *alpha2;
    validate(prior);
  }
};

// ---- analyze ----------------------------------------------------------------

struct AnalyzeOptions {
  std::string trial_csv;
  std::string historical_csv;
  std::string prior_json;
  std::string out_path;
  std::string chain_csv;
  std::string prior_out;
  PriorFlags prior;
  std::optional<double> omega_fixed;
  int iterations = 5000;
  int burn_in = 1000;
  int chains = 1;
  int grid = 2048;
  std::optional<std::uint64_t> seed;
  std::string hc = "HC1";
  double alpha = 0.05;
};

int cmd_analyze(const AnalyzeOptions& o, std::ostream& out, std::ostream& err) {
  const std::uint64_t seed = resolve_seed(o.seed);
  if (o.prior_json.empty() && o.historical_csv.empty()) {
    throw ConfigError("analyze needs --historical or --prior");
  }
  if (o.chains < 1) {
    throw ConfigError("--chains must be at least 1");
  }
  if (!(o.alpha > 0.0 && o.alpha < 1.0)) {
    throw ConfigError("--alpha must lie in (0, 1)");
  }
  const HcVariant hc = parse_hc_variant(o.hc);
  const TrialDataset trial = load_trial_csv(o.trial_csv);
  validate(trial);

  MixturePrior prior;
  Json provenance;
  if (!o.prior_json.empty()) {
    prior = mixture_prior_from_json(read_json_file(o.prior_json));
    provenance["source"] = "prior_json";
    provenance["path"] = o.prior_json;
  } else {
    const HistoricalDataset hist = load_historical_csv(o.historical_csv);
    validate(hist);
    prior.informative = fit_informative_component(hist, o.prior.k_spec());
    provenance["source"] = "historical_fit";
    provenance["path"] = o.historical_csv;
    provenance["N_H"] = hist.size();
    provenance["K_mode"] = o.prior.k_mode;
  }
  o.prior.apply(prior);
  if (!o.prior_out.empty()) {
    write_text_file(o.prior_out, to_json(prior).dump(2) + "\n");
  }

  const DesignMatrix design = build_design(trial);
  GibbsConfig gibbs;
  gibbs.iterations = o.iterations;
  gibbs.burn_in = o.burn_in;
  gibbs.seed = seed;
  gibbs.omega_grid_size = o.grid;
  gibbs.fixed_omega = o.omega_fixed;
  validate(gibbs);

  const std::vector<Chain> chains =
      gibbs_run_chains(design, prior, gibbs, o.chains, o.chains > 1 ? Execution::parallel : Execution::serial);
  const Chain pooled = pool_after_burn_in(chains, o.burn_in);
  const ChainSummary s = summarize(pooled, 0);

  std::vector<double> beta1;
  beta1.reserve(pooled.size());
  for (const auto& d : pooled) {
    beta1.push_back(d.beta(1));
  }
  const double lo = sample_quantile(beta1, 0.5 * o.alpha);
  const double hi = sample_quantile(beta1, 1.0 - 0.5 * o.alpha);

  const OlsFit fit = procova_fit(trial, hc);
  const WaldResult wald = procova_ci_and_test(fit, o.alpha);
  const EssResult e = ess(static_cast<int>(trial.size()), fit.hc_cov(1, 1), s.beta1_var);

  if (!o.chain_csv.empty()) {
    std::ofstream f(o.chain_csv);
    if (!f) {
      throw IoError("cannot write '" + o.chain_csv + "'");
    }
    for (std::size_t c = 0; c < chains.size(); ++c) {
      if (c == 0) {
        write_chain_csv(f, chains[c]);
      } else {
        std::ostringstream tmp;
        write_chain_csv(tmp, chains[c]);
        const std::string body = tmp.str();
        f << body.substr(body.find('\n') + 1);
      }
    }
  }

  Json report;
  report["posterior"] = {
      {"beta1",
       {{"mean", s.beta1_mean},
        {"sd", std::sqrt(s.beta1_var)},
        {"median", s.beta1_q50},
        {"credible_interval", {lo, hi}},
        {"credible_level", 1.0 - o.alpha},
        {"prob_positive", s.prob_beta1_positive},
        {"mc_se", s.mc_se_beta1}}},
      {"omega_mean", s.omega_mean},
      {"omega_star_mean", s.omega_star_mean},
      {"informative_fraction", s.informative_fraction},
      {"draws", s.draws}};
  report["ess"] = {{"N", trial.size()},
                   {"ess", e.ess},
                   {"ess_minus_n", e.reduction},
                   {"procova_variance", fit.hc_cov(1, 1)},
                   {"posterior_variance", s.beta1_var}};
  report["procova"] = {{"beta1", fit.beta1()},
                       {"hc_variant", to_string(hc)},
                       {"hc_se", fit.hc_se_beta1()},
                       {"classical_se", fit.classical_se_beta1()},
                       {"confidence_interval", {wald.lower, wald.upper}},
                       {"reject", wald.reject}};
  provenance["hyperparameters"] = to_json(prior);
  provenance["defaults"] = {{"K1", 100.0}, {"k", 100.0}, {"nu0", 1.0}, {"sigma0_sq", 1.0},
                            {"alpha1", 1.0}, {"alpha2", 1.0}, {"K_mode", "inverse_N"}};
  report["prior"] = provenance;
  report["metadata"] = {{"seed", seed},
                        {"iterations", o.iterations},
                        {"burn_in", o.burn_in},
                        {"chains", o.chains},
                        {"omega_grid_size", o.grid},
                        {"omega_fixed", o.omega_fixed ? Json(*o.omega_fixed) : Json(nullptr)},
                        {"versions", software_versions()}};

  const std::string text = report.dump(2) + "\n";
  if (o.out_path.empty()) {
    out << text;
  } else {
    write_text_file(o.out_path, text);
  }

  err << "Bayesian PROCOVA (N = " << trial.size() << ", " << s.draws << " draws)\n"
      << "  beta1 mean " << fmt(s.beta1_mean) << "  sd " << fmt(std::sqrt(s.beta1_var)) << "  CI ["
      << fmt(lo) << ", " << fmt(hi) << "]  P(>0) " << fmt(s.prob_beta1_positive, 3) << "\n"
      << "  omega mean " << fmt(s.omega_mean, 3) << "  omega* mean " << fmt(s.omega_star_mean, 3)
      << "\n"
      << "PROCOVA (" << to_string(hc) << ")\n"
      << "  beta1 " << fmt(fit.beta1()) << "  SE " << fmt(fit.hc_se_beta1()) << "  CI ["
      << fmt(wald.lower) << ", " << fmt(wald.upper) << "]\n"
      << "ESS " << fmt(e.ess, 5) << "  (ESS - N = " << fmt(e.reduction, 5) << ")\n";
  return 0;
}

// ---- simulate ---------------------------------------------------------------

struct SimulateOptions {
  std::string config;
  std::string out_dir;
  std::optional<int> replicates;
  std::optional<std::uint64_t> seed;
  bool serial = false;
};

std::string file_stem(const std::string& name) {
  std::string s = name;
  for (char& c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) {
      c = '_';
    }
  }
  return s.empty() ? "scenario" : s;
}

int cmd_simulate(const SimulateOptions& o, std::ostream& out, std::ostream& err) {
  std::vector<ScenarioConfig> configs = scenario_configs_from_json(read_json_file(o.config));
  std::optional<std::uint64_t> seed = o.seed;
  if (!seed && std::getenv("PROCOVA_SEED") != nullptr) {
    seed = resolve_seed(std::nullopt);
  }
  for (auto& c : configs) {
    if (o.replicates) c.replicates = *o.replicates;
    if (seed) c.seed = *seed;
    validate(c);
  }
  std::error_code ec;
  fs::create_directories(o.out_dir, ec);
  if (ec || !fs::is_directory(o.out_dir)) {
    throw IoError("cannot create output directory '" + o.out_dir + "'");
  }

  Json summaries = Json::array();
  err << "scenario                                  reps  bias      VR med%  ESS:N med  omega*  T1E\n";
  for (std::size_t i = 0; i < configs.size(); ++i) {
    ScenarioConfig& c = configs[i];
    if (configs.size() > 1 && c.name == "scenario") {
      c.name = "scenario_" + std::to_string(i);
    }
    const ScenarioResult r = run_scenario(c, o.serial ? Execution::serial : Execution::parallel);
    const std::string stem = file_stem(c.name);
    write_text_file(fs::path(o.out_dir) / (stem + ".json"), to_json(r).dump(2) + "\n");
    std::ofstream csv(fs::path(o.out_dir) / (stem + "_replicates.csv"));
    if (!csv) {
      throw IoError("cannot write replicate CSV for '" + c.name + "'");
    }
    write_replicates_csv(csv, r.records);
    summaries.push_back(to_json(r));

    char line[256];
    std::snprintf(line, sizeof line, "%-40.40s %5d  %+8.4f  %8.2f  %9.3f  %6.3f  %5.3f\n",
                  c.name.c_str(), c.replicates, r.mean_signed_bias, r.variance_reduction_pct.median,
                  r.ess_ratio.median, r.avg_posterior_omega, r.type1_error_rate);
    err << line;
  }
  out << summaries.dump(2) << "\n";
  return 0;
}

// ---- calibrate --------------------------------------------------------------

struct CalibrateOptions {
  std::string historical_csv;
  int trial_n = 0;
  std::vector<std::string> gamma_grid;
  double target_alpha = 0.05;
  double shift_sd_max = 3.0;
  int shift_steps = 3;
  int bootstrap = 1000;
  int replicates = 100;
  int iterations = 1000;
  int burn_in = 100;
  std::optional<std::uint64_t> seed;
  std::string prior_out;
  PriorFlags prior;
};

double sample_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const auto n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

int cmd_calibrate(const CalibrateOptions& o, std::ostream& out, std::ostream& err) {
  const std::uint64_t seed = resolve_seed(o.seed);
  std::vector<double> grid;
  for (const auto& text : o.gamma_grid) {
    if (text.empty()) continue;
    double g = 0.0;
    try {
      std::size_t used = 0;
      g = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
    } catch (const std::exception&) {
      throw ConfigError("gamma grid value '" + text + "' is not a number");
    }
    if (!(g > 0.0) || !std::isfinite(g)) {
      throw ConfigError("gamma grid values must be positive");
    }
    grid.push_back(g);
  }
  if (grid.empty()) {
    throw ConfigError("--gamma-grid is empty");
  }
  if (!(o.target_alpha > 0.0 && o.target_alpha <= 1.0)) {
    throw ConfigError("--target-alpha must lie in (0, 1]");
  }
  if (!(o.shift_sd_max >= 0.0) || o.shift_steps < 1) {
    throw ConfigError("--shift-sd-max must be non-negative and --shift-steps positive");
  }
  if (o.trial_n < 4) {
    throw ConfigError("--trial-n must be at least 4");
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  const HistoricalDataset hist = load_historical_csv(o.historical_csv);
  validate(hist);
  const InformativeComponent fitted = fit_informative_component(hist, o.prior.k_spec());
  const double var_delta = bootstrap_delta_variance(hist, o.trial_n, o.bootstrap, seed);

  // Synthetic surrogate of the historical study: same N_H, residual variance
  // and (clamped) score-outcome correlation.
  ScenarioConfig base;
  base.name = "calibration";
  base.trial_N = o.trial_n;
  base.hist_N = static_cast<int>(hist.size());
  base.rho_H = std::clamp(sample_correlation(hist.prognostic_scores, hist.outcomes), 0.0, 0.99);
  base.sigma_sq_true = fitted.s2_H;
  base.var_delta = var_delta;
  base.K1 = o.prior.K1;
  MixturePrior defaults;
  o.prior.apply(defaults);
  base.k = defaults.flat.k;
  base.nu0 = defaults.flat.nu0;
  base.sigma0_sq = defaults.flat.sigma0_sq;
  base.weight_prior = defaults.weight;
  base.replicates = o.replicates;
  base.iterations = o.iterations;
  base.burn_in = o.burn_in;
  base.seed = seed;
  base.credible_alpha = 0.05;

  std::vector<double> shifts;
  const double sd = std::sqrt(var_delta);
  for (int i = 0; i <= o.shift_steps; ++i) {
    shifts.push_back(o.shift_sd_max * sd * static_cast<double>(i) / o.shift_steps);
  }
  const std::vector<Type1Row> rows = type1_error_curve(base, shifts, grid);

  Json table = Json::array();
  Json per_gamma = Json::array();
  std::optional<double> chosen;
  err << "gamma      shift      T1E    PROCOVA  VR med%  omega*\n";
  for (double g : grid) {
    double worst = 0.0;
    for (const auto& r : rows) {
      if (r.gamma != g) continue;
      worst = std::max(worst, r.type1_error_rate);
      table.push_back({{"gamma", r.gamma},
                       {"shift", r.shift},
                       {"type1_error_rate", r.type1_error_rate},
                       {"procova_type1_error_rate", r.procova_type1_error_rate},
                       {"mean_variance_reduction_pct", r.mean_variance_reduction_pct},
                       {"median_variance_reduction_pct", r.median_variance_reduction_pct},
                       {"avg_posterior_omega", r.avg_posterior_omega}});
      char line[160];
      std::snprintf(line, sizeof line, "%-9.4g  %-9.4g  %5.3f  %7.3f  %7.2f  %6.3f\n", r.gamma,
                    r.shift, r.type1_error_rate, r.procova_type1_error_rate,
                    r.median_variance_reduction_pct, r.avg_posterior_omega);
      err << line;
    }
    const bool feasible = worst <= o.target_alpha;
    per_gamma.push_back({{"gamma", g}, {"max_type1_error_rate", worst}, {"feasible", feasible}});
    if (feasible && !chosen) {
      chosen = g;
    }
  }

  // Trend report: error rate non-increasing in gamma at each shift.
  Json trend = Json::array();
  for (double shift : shifts) {
    double prev = 2.0;
    bool monotone = true;
    for (const auto& r : rows) {
      if (r.shift != shift) continue;
      monotone = monotone && r.type1_error_rate <= prev;
      prev = r.type1_error_rate;
    }
    trend.push_back({{"shift", shift}, {"non_increasing_in_gamma", monotone}});
  }

  Json report;
  report["var_delta"] = var_delta;
  report["bootstrap_replicates"] = o.bootstrap;
  report["target_alpha"] = o.target_alpha;
  report["shifts"] = shifts;
  report["surrogate"] = to_json(base);
  report["table"] = table;
  report["per_gamma"] = per_gamma;
  report["trend"] = trend;
  report["metadata"] = {{"seed", seed}, {"versions", software_versions()}};

  if (!chosen) {
    report["chosen_gamma"] = nullptr;
    out << report.dump(2) << "\n";
    throw NoFeasibleGamma("no gamma in the grid keeps the type I error rate at or below " +
                          fmt(o.target_alpha));
  }
  MixturePrior prior = defaults;
  prior.informative = with_calibrated_k(fitted, *chosen, var_delta);
  validate(prior);
  report["chosen_gamma"] = *chosen;
  report["prior"] = to_json(prior);
  if (!o.prior_out.empty()) {
    write_text_file(o.prior_out, to_json(prior).dump(2) + "\n");
  }
  out << report.dump(2) << "\n";
  err << "chosen gamma " << fmt(*chosen) << " (Var(Delta) = " << fmt(var_delta) << ")\n";
  return 0;
}

// ---- prior-ess --------------------------------------------------------------

struct PriorEssOptions {
  std::string prior_json;
  double omega = 0.5;
  double s_sq = 1.0;
};

int cmd_prior_ess(const PriorEssOptions& o, std::ostream& out, std::ostream& err) {
  if (!(o.omega > 0.0 && o.omega < 1.0)) {
    throw ConfigError("--omega must lie in (0, 1)");
  }
  if (!(o.s_sq > 0.0) || !std::isfinite(o.s_sq)) {
    throw ConfigError("--s-sq must be positive");
  }
  const MixturePrior prior = mixture_prior_from_json(read_json_file(o.prior_json));
  const double v = prior_beta1_variance(prior, o.omega);
  Json report{{"omega", o.omega}, {"s_sq", o.s_sq}};
  if (std::isinf(v)) {
    report["prior_beta1_variance"] = "infinite";
    report["ess"] = "undefined";
    report["reason"] =
        "a sigma^2 prior component has df <= 2, so its mean and Var(beta1 | omega) do not exist";
    err << "prior ESS: undefined (prior Var(beta1 | omega) is infinite)\n";
  } else {
    const double n = prior_effective_sample_size(prior, o.omega, o.s_sq);
    report["prior_beta1_variance"] = v;
    report["ess"] = n;
    err << "prior ESS: " << fmt(n, 6) << "  (Var(beta1 | omega) = " << fmt(v, 6) << ")\n";
  }
  out << report.dump(2) << "\n";
  return 0;
}

// ---- sbc --------------------------------------------------------------------

struct SbcOptions {
  std::string prior_json;
  int n = 25;
  double rand_prob = 0.5;
  int replications = 500;
  int bins = 20;
  int thin = 5;
  int iterations = 1100;
  int burn_in = 100;
  double sigma_scale = 1.0;
  std::optional<std::uint64_t> seed;
};

int cmd_sbc(const SbcOptions& o, std::ostream& out, std::ostream& err) {
  const std::uint64_t seed = resolve_seed(o.seed);
  const MixturePrior prior =
      o.prior_json.empty() ? reference_sbc_prior() : mixture_prior_from_json(read_json_file(o.prior_json));
  if (!(o.sigma_scale > 0.0)) {
    throw ConfigError("--sigma-scale must be positive");
  }
  SbcConfig cfg;
  cfg.replications = o.replications;
  cfg.rank_bins = o.bins;
  cfg.thin = o.thin;
  cfg.seed = seed;
  cfg.gibbs.iterations = o.iterations;
  cfg.gibbs.burn_in = o.burn_in;
  cfg.gibbs.sigma_sq_draw_scale = o.sigma_scale;
  const SbcResult r = sbc_validate(prior, linear_model_generator(o.n, o.rand_prob), cfg);

  Json report{{"parameter", "beta1"},
              {"replications", o.replications},
              {"N", o.n},
              {"rank_levels", r.rank_levels},
              {"bins", o.bins},
              {"bin_counts", r.bin_counts},
              {"chi_square", r.chi_square},
              {"df", r.df},
              {"p_value", r.p_value},
              {"sigma_sq_draw_scale", o.sigma_scale},
              {"prior", to_json(prior)},
              {"seed", seed}};
  out << report.dump(2) << "\n";
  err << "SBC rank uniformity: chi2 = " << fmt(r.chi_square) << " on " << r.df
      << " df, p = " << fmt(r.p_value) << "\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian PROCOVA: mixture-prior covariate adjustment for randomized trials",
               "bprocova"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", std::string(BPROCOVA_VERSION));
  int threads = 0;
  app.add_option("--threads", threads, "worker threads for parallel loops (0 = runtime default)");

  AnalyzeOptions an;
  auto* analyze = app.add_subcommand("analyze", "fit the mixture prior and run the Gibbs sampler");
  analyze->add_option("--trial", an.trial_csv, "trial CSV with columns y,w,m")->required();
  analyze->add_option("--historical", an.historical_csv, "historical control CSV with columns y,m");
  analyze->add_option("--prior", an.prior_json, "prior JSON (e.g. from calibrate); replaces --historical");
  analyze->add_option("--out", an.out_path, "write the JSON report here instead of stdout");
  analyze->add_option("--chain-csv", an.chain_csv, "write every draw as CSV");
  analyze->add_option("--prior-out", an.prior_out, "write the prior actually used as JSON");
  an.prior.add(analyze);
  analyze->add_option("--omega-fixed", an.omega_fixed, "hold omega at this value in [0, 1]");
  analyze->add_option("--iterations", an.iterations, "Gibbs iterations per chain");
  analyze->add_option("--burn-in", an.burn_in, "burn-in iterations per chain");
  analyze->add_option("--chains", an.chains, "independent chains pooled after burn-in");
  analyze->add_option("--omega-grid", an.grid, "grid size for the omega update");
  analyze->add_option("--seed", an.seed, "random seed (fallback: PROCOVA_SEED)");
  analyze->add_option("--hc", an.hc, "PROCOVA standard-error variant: HC0, HC1 or HC3");
  analyze->add_option("--alpha", an.alpha, "1 - credible/confidence level");

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "run simulation scenarios from a JSON config");
  simulate->add_option("--config", sim.config, "scenario config JSON")->required();
  simulate->add_option("--out-dir", sim.out_dir, "directory for result JSON and replicate CSV")->required();
  simulate->add_option("--replicates", sim.replicates, "override the replicate count");
  simulate->add_option("--seed", sim.seed, "override the config seed (fallback: PROCOVA_SEED)");
  simulate->add_flag("--serial", sim.serial, "use the serial reference loop");

  CalibrateOptions cal;
  auto* calibrate = app.add_subcommand("calibrate", "choose gamma for K0/K2 by simulated type I error");
  calibrate->add_option("--historical", cal.historical_csv, "historical control CSV")->required();
  calibrate->add_option("--trial-n", cal.trial_n, "planned trial size")->required();
  calibrate->add_option("--gamma-grid", cal.gamma_grid, "comma-separated gamma values")
      ->required()
      ->delimiter(',');
  calibrate->add_option("--target-alpha", cal.target_alpha, "maximum acceptable type I error");
  calibrate->add_option("--shift-sd-max", cal.shift_sd_max, "largest shift in sd(Delta) units");
  calibrate->add_option("--shift-steps", cal.shift_steps, "number of non-zero shifts");
  calibrate->add_option("--bootstrap", cal.bootstrap, "bootstrap resamples for Var(Delta)");
  calibrate->add_option("--replicates", cal.replicates, "simulated trials per (gamma, shift)");
  calibrate->add_option("--iterations", cal.iterations, "Gibbs iterations per trial");
  calibrate->add_option("--burn-in", cal.burn_in, "burn-in per trial");
  calibrate->add_option("--seed", cal.seed, "random seed (fallback: PROCOVA_SEED)");
  calibrate->add_option("--prior-out", cal.prior_out, "write the calibrated prior JSON here");
  cal.prior.add(calibrate);

  PriorEssOptions pe;
  auto* prior_ess = app.add_subcommand("prior-ess", "prior effective sample size of beta1");
  prior_ess->add_option("--prior", pe.prior_json, "prior JSON")->required();
  prior_ess->add_option("--omega", pe.omega, "mixture weight in (0, 1)");
  prior_ess->add_option("--s-sq", pe.s_sq, "outcome variance estimate");

  SbcOptions sb;
  auto* sbc = app.add_subcommand("sbc", "simulation-based calibration of the Gibbs sampler");
  sbc->add_option("--prior", sb.prior_json, "prior JSON (default: a built-in proper prior)");
  sbc->add_option("--n", sb.n, "trial size");
  sbc->add_option("--rand-prob", sb.rand_prob, "share of subjects treated");
  sbc->add_option("--replications", sb.replications, "prior-predictive replications");
  sbc->add_option("--bins", sb.bins, "rank histogram bins");
  sbc->add_option("--thin", sb.thin, "thinning interval");
  sbc->add_option("--iterations", sb.iterations, "Gibbs iterations per replication");
  sbc->add_option("--burn-in", sb.burn_in, "burn-in per replication");
  sbc->add_option("--sigma-scale", sb.sigma_scale,
                  "multiply sigma^2 draws (values other than 1 corrupt the sampler)");
  sbc->add_option("--seed", sb.seed, "random seed (fallback: PROCOVA_SEED)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (threads < 0) {
      throw ConfigError("--threads must be non-negative");
    }
    if (threads > 0) {
      set_thread_count(threads);
    }
    if (analyze->parsed()) return cmd_analyze(an, out, err);
    if (simulate->parsed()) return cmd_simulate(sim, out, err);
    if (calibrate->parsed()) return cmd_calibrate(cal, out, err);
    if (prior_ess->parsed()) return cmd_prior_ess(pe, out, err);
    if (sbc->parsed()) return cmd_sbc(sb, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}

}  // namespace bprocova
