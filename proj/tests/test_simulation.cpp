#include "bprocova/error.hpp"
#include "bprocova/simulation.hpp"

#include "doctest.h"

#include <cmath>

using namespace bprocova;

namespace {

ScenarioConfig small() {
  ScenarioConfig c;
  c.trial_N = 40;
  c.hist_N = 100;
  c.rho_H = 0.3;
  c.replicates = 6;
  c.iterations = 300;
  c.burn_in = 50;
  c.seed = 17;
  return c;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("slope from correlation") {
  CHECK(beta2_from_correlation(0.0, 1.0) == 0.0);
  CHECK(beta2_from_correlation(0.5, 1.0) == doctest::Approx(0.5 / std::sqrt(0.75)));
  CHECK(beta2_from_correlation(0.5, 2.0) == doctest::Approx(1.0 / std::sqrt(0.75)));
  CHECK_THROWS_AS(beta2_from_correlation(-0.1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(beta2_from_correlation(0.995, 1.0), std::invalid_argument);
}

TEST_CASE("generated data hit the requested correlation and shifts") {
  ScenarioConfig c = small();
  c.hist_N = 40000;
  c.trial_N = 40000;
  c.rho_H = 0.4;
  c.rho_shift = 0.1;
  c.bias_shift = 2.0;
  const auto [h, t] = generate_pair(c, 0);
  CHECK(correlation(h.prognostic_scores, h.outcomes) == doctest::Approx(0.4).epsilon(0.05));
  std::vector<double> m0, y0;
  double treated = 0.0;
  for (const auto& s : t.subjects) {
    treated += s.treatment;
    if (s.treatment == 0) {
      m0.push_back(s.prognostic_score);
      y0.push_back(s.outcome);
    }
  }
  CHECK(treated == 20000.0);
  CHECK(correlation(m0, y0) == doctest::Approx(0.5).epsilon(0.05));
  // Control-arm outcomes: y = 2 + beta2 (m - m_bar) + m_bar + e, with mean score near 0.
  double y_mean = 0.0;
  for (double y : y0) y_mean += y;
  CHECK(y_mean / static_cast<double>(y0.size()) == doctest::Approx(2.0).epsilon(0.03));
}

TEST_CASE("generation is deterministic per replicate") {
  const ScenarioConfig c = small();
  const auto a = generate_pair(c, 3);
  const auto b = generate_pair(c, 3);
  const auto d = generate_pair(c, 4);
  CHECK(a.first.outcomes == b.first.outcomes);
  CHECK(a.second.subjects[5].outcome == b.second.subjects[5].outcome);
  CHECK(a.first.outcomes != d.first.outcomes);
}

TEST_CASE("scenario validation") {
  ScenarioConfig c = small();
  c.rho_shift = -0.4;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = small();
  c.trial_N = 3;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = small();
  c.burn_in = c.iterations;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = small();
  c.K0_mode = K0Mode::appendix_b;
  c.gamma = 0.0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  CHECK(parse_k0_mode(to_string(K0Mode::inverse_sqrt_n)) == K0Mode::inverse_sqrt_n);
  CHECK_THROWS_AS(parse_k0_mode("inverse"), ConfigError);
}

TEST_CASE("scenario prior follows the K0 mode") {
  ScenarioConfig c = small();
  const auto [h, t] = generate_pair(c, 0);
  CHECK(scenario_prior(c, h).informative.K(0) == doctest::Approx(1.0 / 100.0));
  c.K0_mode = K0Mode::inverse_sqrt_n;
  CHECK(scenario_prior(c, h).informative.K(0) == doctest::Approx(0.1));
  c.K0_mode = K0Mode::appendix_b;
  c.gamma = 2.0;
  c.var_delta = 0.05;
  const auto p = scenario_prior(c, h);
  CHECK(p.informative.K(0) == doctest::Approx(2.0 / 100.0 + 0.05 / p.informative.s2_H));
  CHECK(p.flat.k == c.k);
  CHECK(p.flat.nu0 == c.nu0);
}

TEST_CASE("replicates and aggregation") {
  const ScenarioConfig c = small();
  const ScenarioResult serial = run_scenario(c, Execution::serial);
  const ScenarioResult parallel = run_scenario(c, Execution::parallel);
  REQUIRE(serial.records.size() == 6);
  CHECK(serial.failed == 0);
  for (std::size_t i = 0; i < serial.records.size(); ++i) {
    const auto& r = serial.records[i];
    CHECK(r.ok);
    CHECK(r.posterior_mean == parallel.records[i].posterior_mean);
    CHECK(r.ci_lower < r.posterior_mean);
    CHECK(r.ci_upper > r.posterior_mean);
    CHECK(r.variance_reduction_pct == doctest::Approx(100.0 * (1.0 - r.posterior_var / r.procova_var)));
    CHECK(r.ess_ratio == doctest::Approx(r.ess / c.trial_N));
  }
  CHECK(serial.mean_signed_bias == parallel.mean_signed_bias);

  std::vector<ReplicateRecord> recs(4);
  for (int i = 0; i < 4; ++i) {
    auto& r = recs[static_cast<std::size_t>(i)];
    r.index = static_cast<std::size_t>(i);
    r.ok = i != 3;
    r.posterior_mean = i == 0 ? 0.3 : -0.1;
    r.reject = i == 0;
    r.variance_reduction_pct = 10.0 * i;
    r.ess_ratio = 1.0 + i;
    r.omega_star_mean = 0.9;
    r.omega_mean = 0.6;
  }
  ScenarioConfig cfg;
  const ScenarioResult agg = aggregate(cfg, recs);
  CHECK(agg.succeeded == 3);
  CHECK(agg.failed == 1);
  CHECK(agg.mean_signed_bias == doctest::Approx(0.1 / 3.0));
  CHECK(agg.mean_abs_bias == doctest::Approx(0.1 / 3.0));
  CHECK(agg.mean_abs_error == doctest::Approx(0.5 / 3.0));
  CHECK(agg.type1_error_rate == doctest::Approx(1.0 / 3.0));
  CHECK(agg.variance_reduction_pct.median == doctest::Approx(10.0));
  CHECK(agg.variance_reduction_pct.max == doctest::Approx(20.0));
  CHECK(agg.ess_ratio.mean == doctest::Approx(2.0));
  CHECK(agg.avg_posterior_omega == doctest::Approx(0.9));
  CHECK(agg.avg_omega_draw == doctest::Approx(0.6));
}

TEST_CASE("reference grids") {
  const ScenarioConfig base;
  CHECK(reference_grid(1, base).size() == 72);
  CHECK(reference_grid(2, base).front().weight_prior.alpha1 == 0.5);
  CHECK(reference_grid(3, base).front().nu0 == 3.0);
  CHECK(reference_grid(3, base).front().sigma0_sq == 100.0);
  CHECK(reference_grid(4, base).size() == 12 * 21);
  CHECK(reference_grid(5, base).size() == 72 * 10);
  for (const auto& c : reference_grid(4, base)) {
    CHECK_NOTHROW(validate(c));
  }
  CHECK_THROWS_AS(reference_grid(6, base), ConfigError);
}

TEST_CASE("type I error curve covers the grid") {
  ScenarioConfig c = small();
  c.replicates = 4;
  c.var_delta = 0.02;
  const auto rows = type1_error_curve(c, {0.0, 0.5}, {0.5, 2.0});
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].gamma == 0.5);
  CHECK(rows[1].shift == 0.5);
  for (const auto& r : rows) {
    CHECK(r.type1_error_rate >= 0.0);
    CHECK(r.type1_error_rate <= 1.0);
  }
  CHECK_THROWS_AS(type1_error_curve(c, {0.0}, {}), ConfigError);
}
