#include "bprocova/error.hpp"
#include "bprocova/sampler.hpp"

#include "doctest.h"
#include "oracles/generators.hpp"

#include <cmath>
#include <sstream>

using namespace bprocova;

namespace {

MixturePrior test_prior() {
  MixturePrior p;
  p.informative.beta0_hat_H = 0.1;
  p.informative.beta2_hat_H = 0.4;
  p.informative.s2_H = 1.0;
  p.informative.df_H = 48;
  p.informative.K = Vector3(0.1, 2.0, 0.1);
  p.informative.ss_m_H = 50.0;
  p.flat = {10.0, 4.0, 1.0};
  p.weight = {1.0, 1.0};
  return p;
}

DesignMatrix test_design(std::uint64_t seed, int n = 30) {
  Rng rng(seed);
  return build_design(linear_model_generator(n)(Vector3(0.0, 0.3, 0.5), 1.0, rng));
}

}  // namespace

TEST_CASE("chains are reproducible and include burn-in") {
  const auto d = test_design(1);
  GibbsConfig c;
  c.iterations = 300;
  c.burn_in = 50;
  c.seed = 42;
  const Chain a = gibbs_run(d, test_prior(), c);
  const Chain b = gibbs_run(d, test_prior(), c);
  REQUIRE(a.size() == 300);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].beta == b[i].beta);
    CHECK(a[i].omega == b[i].omega);
  }
  c.seed = 43;
  CHECK(gibbs_run(d, test_prior(), c)[10].beta != a[10].beta);
}

TEST_CASE("config validation") {
  GibbsConfig c;
  c.burn_in = c.iterations;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = {};
  c.fixed_omega = 1.5;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = {};
  c.omega_init = 0.0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = {};
  c.fixed_omega = 0.0;
  CHECK_NOTHROW(validate(c));
}

TEST_CASE("fixed omega holds the weight and boundary values act as point masses") {
  const auto d = test_design(2);
  GibbsConfig c;
  c.iterations = 200;
  c.burn_in = 0;
  c.fixed_omega = 0.0;
  for (const auto& draw : gibbs_run(d, test_prior(), c)) {
    CHECK(draw.omega == 0.0);
    CHECK(draw.z == 0);
  }
  c.fixed_omega = 1.0;
  for (const auto& draw : gibbs_run(d, test_prior(), c)) {
    CHECK(draw.z == 1);
  }
}

TEST_CASE("omega draws reproduce the closed-form marginal posterior of omega") {
  const auto d = test_design(3, 12);
  MixturePrior p = test_prior();
  p.weight = {2.0, 3.0};
  const auto fits = fit_components(d, p);
  const OmegaDensity md = marginal_omega_density(fits, p.weight, OmegaGrid::midpoint(4096));
  GibbsConfig c;
  c.iterations = 40000;
  c.burn_in = 1000;
  c.seed = 5;
  const Chain chain = gibbs_run(d, p, c);
  const ChainSummary s = summarize(chain, c.burn_in);
  std::vector<double> omega;
  for (std::size_t i = static_cast<std::size_t>(c.burn_in); i < chain.size(); ++i) {
    omega.push_back(chain[i].omega);
  }
  const double se = batch_means_se(omega);
  CHECK(std::abs(s.omega_mean - md.mean()) < 4.0 * se);
}

TEST_CASE("inverse CDF sampling on the omega grid") {
  const OmegaGrid g = OmegaGrid::midpoint(2048);
  std::vector<double> flat(g.size(), 0.0);
  const OmegaDensity uni = normalize_omega_density(g, flat);
  for (double u : {0.01, 0.25, 0.5, 0.9}) {
    CHECK(sample_omega_inverse_cdf(uni, u) == doctest::Approx(u).epsilon(1e-3));
  }
  std::vector<double> lin(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) lin[i] = g.log_points[i];
  const OmegaDensity tri = normalize_omega_density(g, lin);  // Beta(2, 1): F(w) = w^2
  for (double u : {0.04, 0.25, 0.64}) {
    CHECK(sample_omega_inverse_cdf(tri, u) == doctest::Approx(std::sqrt(u)).epsilon(2e-3));
  }
  for (double u : {1e-15, 1.0 - 1e-15}) {
    const double w = sample_omega_inverse_cdf(uni, u);
    CHECK(w > 0.0);
    CHECK(w < 1.0);
  }
}

TEST_CASE("multi-chain runs pool after burn-in and do not depend on the schedule") {
  const auto d = test_design(4);
  GibbsConfig c;
  c.iterations = 200;
  c.burn_in = 20;
  c.seed = 9;
  const auto serial = gibbs_run_chains(d, test_prior(), c, 3, Execution::serial);
  const auto parallel = gibbs_run_chains(d, test_prior(), c, 3, Execution::parallel);
  REQUIRE(serial.size() == 3);
  for (int k = 0; k < 3; ++k) {
    CHECK(serial[k].back().beta == parallel[k].back().beta);
  }
  CHECK(serial[0].back().beta != serial[1].back().beta);
  const Chain pooled = pool_after_burn_in(serial, c.burn_in);
  CHECK(pooled.size() == 3 * 180);
  CHECK(pooled[180].beta == serial[1][20].beta);
  // A single chain uses the seed as given.
  const auto single = gibbs_run_chains(d, test_prior(), c, 1);
  CHECK(single[0].back().beta == gibbs_run(d, test_prior(), c).back().beta);
}

TEST_CASE("summaries") {
  CHECK(sample_quantile({1.0, 2.0, 3.0, 4.0}, 0.5) == doctest::Approx(2.5));
  CHECK(sample_quantile({4.0, 1.0, 3.0, 2.0}, 0.25) == doctest::Approx(1.75));
  CHECK(sample_quantile({5.0}, 0.9) == doctest::Approx(5.0));

  Rng rng(1);
  std::vector<double> iid(20000);
  for (auto& x : iid) x = sample_standard_normal(rng);
  CHECK(batch_means_se(iid) == doctest::Approx(1.0 / std::sqrt(20000.0)).epsilon(0.5));

  Chain chain(10);
  for (int i = 0; i < 10; ++i) {
    chain[static_cast<std::size_t>(i)].beta(1) = i - 4.5;
    chain[static_cast<std::size_t>(i)].z = i % 2;
    chain[static_cast<std::size_t>(i)].omega = 0.25;
  }
  const ChainSummary s = summarize(chain, 2);
  CHECK(s.draws == 8);
  CHECK(s.beta1_mean == doctest::Approx(1.0));
  CHECK(s.prob_beta1_positive == doctest::Approx(5.0 / 8.0));
  CHECK(s.informative_fraction == doctest::Approx(0.5));
  CHECK(s.omega_mean == doctest::Approx(0.25));

  std::ostringstream csv;
  write_chain_csv(csv, chain);
  CHECK(csv.str().rfind("iter,beta0,beta1,beta2,sigma_sq,omega,z\n1,", 0) == 0);
}

TEST_CASE("prior draws and trial generator") {
  MixturePrior p = test_prior();
  p.weight = {2.0, 6.0};
  Rng rng(77);
  double omega = 0.0, z = 0.0;
  const int n = 40000;
  for (int i = 0; i < n; ++i) {
    const auto d = sample_mixture_prior(p, rng);
    omega += d.omega;
    z += d.z;
  }
  CHECK(omega / n == doctest::Approx(0.25).epsilon(0.02));
  CHECK(z / n == doctest::Approx(0.25).epsilon(0.04));

  const auto generator = linear_model_generator(25, 0.5);
  const TrialDataset t = generator(Vector3(0.0, 1.0, 0.5), 1.0, rng);
  int treated = 0;
  for (const auto& s : t.subjects) treated += s.treatment;
  CHECK(t.size() == 25);
  CHECK(treated == 12);
}

TEST_CASE("rank uniformity test") {
  std::vector<int> ranks;
  for (int r = 0; r < 200; ++r) ranks.push_back(r % 100);
  const SbcResult u = rank_uniformity(ranks, 100, 20);
  CHECK(u.chi_square == doctest::Approx(0.0));
  CHECK(u.df == 19);
  CHECK(u.p_value == doctest::Approx(1.0));
  std::vector<int> piled(200, 50);
  CHECK(rank_uniformity(piled, 100, 20).p_value < 1e-10);
  CHECK_THROWS(rank_uniformity({150}, 100, 20));
}

TEST_CASE("SBC is reproducible across execution modes") {
  SbcConfig cfg;
  cfg.replications = 12;
  cfg.seed = 3;
  cfg.gibbs.iterations = 300;
  cfg.gibbs.burn_in = 50;
  const auto prior = reference_sbc_prior();
  const auto gen = linear_model_generator(25);
  const auto a = sbc_validate(prior, gen, cfg, Execution::serial);
  const auto b = sbc_validate(prior, gen, cfg, Execution::parallel);
  CHECK(a.ranks == b.ranks);
  CHECK(a.rank_levels == 40);
}
