// Acceptance suite: one PASS/FAIL line per criterion. `--only N` runs a
// single criterion. Tolerances are fixed below.

#include "bprocova/posterior.hpp"
#include "bprocova/prior.hpp"
#include "bprocova/random.hpp"
#include "bprocova/sampler.hpp"
#include "bprocova/simulation.hpp"

#include "oracles/dense.hpp"
#include "oracles/generators.hpp"
#include "oracles/monte_carlo.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <optional>
#include <string>

using namespace bprocova;

namespace tol {
constexpr double c1_mc_se_multiple = 3.0;
constexpr double c1_seconds = 10.0;
constexpr double c2_relative = 0.05;
constexpr double c2_seconds = 60.0;
constexpr double c3_mean_relative = 1e-3;
constexpr double c3_sd_relative = 0.02;
constexpr double c4_relative = 1e-10;
constexpr double c5_p_min = 0.01;
constexpr double c5_control_p_max = 0.001;
constexpr double c5_seconds = 15.0 * 60.0;
constexpr double c6_omega_min = 0.9;
constexpr double c6_omega_lo = 0.18;
constexpr double c6_omega_hi = 0.48;
constexpr double c7_bias = 0.05;
constexpr double c8_vr_points = 5.0;
constexpr double c9_relative = 1e-12;
constexpr double c10_relative = 0.05;
}  // namespace tol

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string format(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- shared scenario runs (criteria 6-9) ------------------------------------

ScenarioConfig scenario1(double nu0, double sigma0_sq) {
  ScenarioConfig c;
  c.name = "scenario1";
  c.trial_N = 100;
  c.hist_N = 500;
  c.rho_H = 0.5;
  c.nu0 = nu0;
  c.sigma0_sq = sigma0_sq;
  c.weight_prior = {1.0, 1.0};
  c.replicates = 200;
  c.seed = 20240601;
  return c;
}

ScenarioConfig large_shift() {
  ScenarioConfig c;
  c.name = "large_shift";
  c.trial_N = 100;
  c.hist_N = 300;
  c.rho_H = 0.3;
  c.bias_shift = 5.0;
  c.nu0 = 1.0;
  c.sigma0_sq = 1.0;
  c.replicates = 200;
  c.seed = 20240602;
  return c;
}

std::map<std::string, ScenarioResult> cache;

const ScenarioResult& cached(const std::string& key, const std::function<ScenarioConfig()>& make) {
  auto it = cache.find(key);
  if (it == cache.end()) {
    it = cache.emplace(key, run_scenario(make())).first;
  }
  return it->second;
}

const ScenarioResult& run_6a() { return cached("6a", [] { return scenario1(3.0, 100.0); }); }
const ScenarioResult& run_6b() { return cached("6b", [] { return scenario1(1.0, 1.0); }); }
const ScenarioResult& run_8() { return cached("8", large_shift); }

// ---- criteria -----------------------------------------------------------------

Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  ScenarioConfig c;
  c.trial_N = 50;
  c.hist_N = 500;
  c.rho_H = 0.3;
  c.seed = 101;
  const auto [hist, trial] = generate_pair(c, 0);
  const MixturePrior prior = scenario_prior(c, hist);
  const DesignMatrix d = build_design(trial);

  GibbsConfig g;
  g.iterations = 20000 + 100;
  g.burn_in = 100;
  g.seed = 7;
  g.fixed_omega = 0.5;
  const Chain chain = gibbs_run(d, prior, g);
  std::vector<double> b1;
  for (std::size_t j = 100; j < chain.size(); ++j) b1.push_back(chain[j].beta(1));
  double mean = 0.0;
  for (double x : b1) mean += x;
  mean /= static_cast<double>(b1.size());
  std::vector<double> sq;
  double var = 0.0;
  for (double x : b1) {
    sq.push_back((x - mean) * (x - mean));
    var += sq.back();
  }
  var /= static_cast<double>(b1.size() - 1);
  const double se_mean = batch_means_se(b1);
  const double se_var = batch_means_se(sq);

  const BetaMoments m = conditional_beta_moments(0.5, d, prior);
  const double z_mean = std::abs(mean - m.mean(1)) / se_mean;
  const double z_var = std::abs(var - m.cov(1, 1)) / se_var;
  const double secs = seconds_since(t0);
  return {z_mean <= tol::c1_mc_se_multiple && z_var <= tol::c1_mc_se_multiple && secs < tol::c1_seconds,
          format("mean %.5f vs %.5f (%.2f SE), var %.6f vs %.6f (%.2f SE), %.1f s; limits %.0f SE, %.0f s",
                 mean, m.mean(1), z_mean, var, m.cov(1, 1), z_var, secs, tol::c1_mc_se_multiple,
                 tol::c1_seconds)};
}

Outcome criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  TrialDataset t;
  t.subjects = {{0.3, 0, -0.8}, {1.9, 1, -0.1}, {0.2, 0, 0.4}, {2.4, 1, 0.9}, {1.1, 0, 1.5}};
  const DesignMatrix d = build_design(t);
  MixturePrior p;
  p.informative.beta0_hat_H = 0.2;
  p.informative.beta2_hat_H = 0.5;
  p.informative.s2_H = 0.8;
  p.informative.df_H = 8;
  p.informative.K = Vector3(0.5, 1.0, 0.5);
  p.informative.ss_m_H = 10.0;
  p.flat = {2.0, 6.0, 1.5};
  const double omega = 0.5;

  const double closed = posterior_mixture_weight(omega, d, p).omega_star;
  const auto& inf = p.informative;
  const auto mi = oracle::mc_log_marginal_likelihood(d.V, d.y_centered, inf.mean(), inf.K, inf.df_H,
                                                     inf.s2_H, 1000000, 1);
  const auto mf = oracle::mc_log_marginal_likelihood(d.V, d.y_centered, Eigen::Vector3d::Zero(),
                                                     Eigen::Vector3d::Constant(p.flat.k), p.flat.nu0,
                                                     p.flat.sigma0_sq, 1000000, 2);
  const double mc = 1.0 / (1.0 + (1.0 - omega) / omega * std::exp(mf.log_mean - mi.log_mean));
  const double rel = std::abs(closed - mc) / mc;
  const double secs = seconds_since(t0);
  return {rel <= tol::c2_relative && secs < tol::c2_seconds,
          format("omega* closed %.5f vs MC %.5f (rel %.4f; MC rel SE %.4f / %.4f), %.1f s; limits %.2f, %.0f s",
                 closed, mc, rel, mi.rel_se, mf.rel_se, secs, tol::c2_relative, tol::c2_seconds)};
}

Outcome criterion3() {
  ScenarioConfig c;
  c.trial_N = 100;
  c.hist_N = 300;
  c.rho_H = 0.3;
  c.beta1_true = 3.0;
  c.seed = 303;
  const auto [hist, trial] = generate_pair(c, 0);
  MixturePrior prior = scenario_prior(c, hist);
  prior.flat = {1e12, 1e-9, 1.0};
  GibbsConfig g;
  g.iterations = 100000 + 100;
  g.burn_in = 100;
  g.seed = 5;
  g.fixed_omega = 0.0;
  const Chain chain = gibbs_run(build_design(trial), prior, g);
  const ChainSummary s = summarize(chain, g.burn_in);
  const OlsFit fit = procova_fit(trial);
  const double rel_mean = std::abs(s.beta1_mean - fit.beta1()) / std::abs(fit.beta1());
  const double sd = std::sqrt(s.beta1_var);
  const double rel_sd = std::abs(sd - fit.classical_se_beta1()) / fit.classical_se_beta1();
  return {rel_mean <= tol::c3_mean_relative && rel_sd <= tol::c3_sd_relative,
          format("mean %.6f vs OLS %.6f (rel %.2e), sd %.5f vs classical SE %.5f (rel %.4f); limits %.0e, %.2f",
                 s.beta1_mean, fit.beta1(), rel_mean, sd, fit.classical_se_beta1(), rel_sd,
                 tol::c3_mean_relative, tol::c3_sd_relative)};
}

Outcome criterion4() {
  gen::Rng rng(404);
  double worst = 0.0;
  auto upd = [&](double a, double b) { worst = std::max(worst, std::abs(a - b) / std::abs(b)); };
  for (int rep = 0; rep < 100; ++rep) {
    const auto trial = gen::trial(rng, gen::integer(rng, 4, 50));
    const auto prior = gen::prior(rng);
    const DesignMatrix d = build_design(trial);
    const auto fits = fit_components(d, prior);
    const auto& inf = prior.informative;
    const auto oi = oracle::dense_update(d.V, d.y_centered, inf.mean(), inf.K, inf.df_H, inf.s2_H);
    const auto of = oracle::dense_update(d.V, d.y_centered, Eigen::Vector3d::Zero(),
                                         Eigen::Vector3d::Constant(prior.flat.k), prior.flat.nu0,
                                         prior.flat.sigma0_sq);
    for (const auto& [lib, ref, lml, ref_lml] :
         {std::tuple{fits.informative, oi, fits.log_ml_informative, oi.log_ml},
          std::tuple{fits.flat, of, fits.log_ml_flat, of.log_ml}}) {
      worst = std::max(worst, (lib.beta_mean - ref.beta_mean).norm() / ref.beta_mean.norm());
      worst = std::max(worst, (lib.cov_factor - ref.cov_factor).norm() / ref.cov_factor.norm());
      upd(lib.sigma_scale, ref.sigma_scale);
      upd(lml, ref_lml);
    }
  }
  return {worst <= tol::c4_relative,
          format("100 datasets, worst relative difference %.2e; limit %.0e", worst, tol::c4_relative)};
}

Outcome criterion5() {
  const auto t0 = std::chrono::steady_clock::now();
  SbcConfig cfg;
  cfg.replications = 500;
  cfg.rank_bins = 20;
  cfg.thin = 5;
  cfg.seed = 505;
  cfg.gibbs.iterations = 1100;
  cfg.gibbs.burn_in = 100;
  const auto prior = reference_sbc_prior();
  const auto generator = linear_model_generator(25);
  const SbcResult good = sbc_validate(prior, generator, cfg);
  cfg.gibbs.sigma_sq_draw_scale = 2.0;
  const SbcResult bad = sbc_validate(prior, generator, cfg);
  const double secs = seconds_since(t0);
  return {good.p_value > tol::c5_p_min && bad.p_value < tol::c5_control_p_max && secs < tol::c5_seconds,
          format("p = %.4f (chi2 %.1f on %d df), corrupted control p = %.2e, %.0f s; limits >%.2f, <%.0e, %.0f s",
                 good.p_value, good.chi_square, good.df, bad.p_value, secs, tol::c5_p_min,
                 tol::c5_control_p_max, tol::c5_seconds)};
}

Outcome criterion6() {
  const ScenarioResult& a = run_6a();
  const ScenarioResult& b = run_6b();
  const bool pass_a = a.avg_posterior_omega >= tol::c6_omega_min && a.variance_reduction_pct.median > 0.0;
  const bool pass_b = b.avg_posterior_omega >= tol::c6_omega_lo && b.avg_posterior_omega <= tol::c6_omega_hi;
  return {pass_a && pass_b,
          format("(a) %s: avg omega* %.4f (mean omega draw %.4f), median VR %.2f%%; "
                 "(b) %s: avg omega* %.4f (mean omega draw %.4f); limits >= %.2f, > 0, [%.2f, %.2f]",
                 pass_a ? "pass" : "fail", a.avg_posterior_omega, a.avg_omega_draw,
                 a.variance_reduction_pct.median, pass_b ? "pass" : "fail", b.avg_posterior_omega,
                 b.avg_omega_draw, tol::c6_omega_min, tol::c6_omega_lo, tol::c6_omega_hi)};
}

Outcome criterion7() {
  const ScenarioResult& a = run_6a();
  return {std::abs(a.mean_signed_bias) < tol::c7_bias,
          format("mean (beta1_hat - 0) = %+.4f over %zu replicates; limit %.2f", a.mean_signed_bias,
                 a.succeeded, tol::c7_bias)};
}

Outcome criterion8() {
  const ScenarioResult& r = run_8();
  const double vr = r.variance_reduction_pct.median;
  return {std::abs(vr) <= tol::c8_vr_points,
          format("median VR %.2f%% (avg omega* %.4f) over %zu replicates; limit +-%.0f points", vr,
                 r.avg_posterior_omega, r.succeeded, tol::c8_vr_points)};
}

Outcome criterion9() {
  double worst = 0.0;
  std::size_t checked = 0;
  for (const ScenarioResult* r : {&run_6a(), &run_6b(), &run_8()}) {
    const double n = r->config.trial_N;
    for (const auto& rec : r->records) {
      if (!rec.ok) continue;
      const double lhs = rec.ess - n;
      const double rhs = n * (rec.procova_var / rec.posterior_var - 1.0);
      const double scale = std::max({std::abs(rhs), std::abs(rec.ess), 1.0});
      worst = std::max({worst, std::abs(lhs - rhs) / scale, std::abs(lhs - rec.ess_minus_n) / scale});
      ++checked;
    }
  }
  return {checked > 0 && worst <= tol::c9_relative,
          format("%zu replicates, worst relative gap %.2e; limit %.0e", checked, worst, tol::c9_relative)};
}

Outcome criterion10() {
  InformativeComponent inf;
  inf.beta0_hat_H = 0.3;
  inf.beta2_hat_H = 0.6;
  inf.s2_H = 1.2;
  inf.df_H = 28;
  inf.K = Vector3(1.0, 1.0, 0.5);
  TrialDataset t;
  t.subjects = {{0.0, 0, -0.4}, {0.0, 1, -0.2}, {0.0, 0, 0.0}, {0.0, 1, 0.2}, {0.0, 1, 0.4}};
  const DesignMatrix d = build_design(t);
  const auto n = d.rows();

  Rng rng(1010);
  const long draws = 100000;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd outer = Eigen::MatrixXd::Zero(n, n);
  const MvnFactor root(Matrix3(inf.K.asDiagonal()));
  for (long j = 0; j < draws; ++j) {
    const double s2 = sample_scaled_inv_chisq(inf.df_H, inf.s2_H, rng);
    const Vector3 beta = root.draw(inf.mean(), s2, rng);
    Eigen::VectorXd y = d.V * beta;
    for (Eigen::Index i = 0; i < n; ++i) y(i) += std::sqrt(s2) * sample_standard_normal(rng);
    sum += y;
    outer += y * y.transpose();
  }
  const Eigen::VectorXd mean = sum / draws;
  const Eigen::MatrixXd cov = (outer - draws * mean * mean.transpose()) / (draws - 1.0);
  const double df = inf.df_H;
  const Eigen::MatrixXd expected =
      df / (df - 2.0) * inf.s2_H *
      (Eigen::MatrixXd::Identity(n, n) + d.V * inf.K.asDiagonal() * d.V.transpose());
  const double worst = ((cov - expected).array() / expected.array()).abs().maxCoeff();
  return {worst <= tol::c10_relative,
          format("10^5 draws at N = 5, worst elementwise relative difference %.4f; limit %.2f", worst,
                 tol::c10_relative)};
}

}  // namespace

int main(int argc, char** argv) {
  std::optional<int> only;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: acceptance [--only N]\n");
      return 2;
    }
  }
  const std::vector<std::pair<const char*, Outcome (*)()>> criteria = {
      {"C1  closed-form moments vs fixed-omega sampler", criterion1},
      {"C2  omega* closed form vs Monte Carlo marginal likelihoods", criterion2},
      {"C3  non-informative limit reproduces OLS", criterion3},
      {"C4  3x3 reduction equals dense N x N evaluation", criterion4},
      {"C5  SBC rank uniformity and corrupted control", criterion5},
      {"C6  scaled scenario 1 posterior weight", criterion6},
      {"C7  bias control under consistency", criterion7},
      {"C8  large-shift recovery of PROCOVA", criterion8},
      {"C9  ESS identity on every replicate", criterion9},
      {"C10 prior predictive multivariate t covariance", criterion10},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only && *only != static_cast<int>(i + 1)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("[%s] %s: %s\n", o.pass ? "PASS" : "FAIL", criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
