#include "bprocova/json_io.hpp"

#include "bprocova/error.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace bprocova {

namespace {

void reject_unknown(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) {
    throw ConfigError(where + ": expected a JSON object");
  }
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      throw ConfigError(where + ": unknown field '" + key + "'");
    }
  }
}

const Json& field(const Json& j, const std::string& key, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end()) {
    throw ConfigError(where + ": missing field '" + key + "'");
  }
  return *it;
}

double as_number(const Json& v, const std::string& key) {
  if (!v.is_number()) {
    throw ConfigError("field '" + key + "' must be a number");
  }
  const double x = v.get<double>();
  if (!std::isfinite(x)) {
    throw ConfigError("field '" + key + "' must be finite");
  }
  return x;
}

long long as_integer(const Json& v, const std::string& key) {
  if (v.is_number_integer()) {
    return v.get<long long>();
  }
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (std::isfinite(x) && x == std::floor(x)) {
      return static_cast<long long>(x);
    }
  }
  throw ConfigError("field '" + key + "' must be an integer");
}

std::string as_string(const Json& v, const std::string& key) {
  if (!v.is_string()) {
    throw ConfigError("field '" + key + "' must be a string");
  }
  return v.get<std::string>();
}

template <class F>
void if_present(const Json& j, const std::string& key, F&& f) {
  const auto it = j.find(key);
  if (it != j.end()) {
    f(*it);
  }
}

}  // namespace

Json to_json(const MixturePrior& prior) {
  const auto& inf = prior.informative;
  Json j;
  j["informative"] = {{"beta0_hat_H", inf.beta0_hat_H},
                      {"beta2_hat_H", inf.beta2_hat_H},
                      {"s2_H", inf.s2_H},
                      {"df_H", inf.df_H},
                      {"K", {inf.K(0), inf.K(1), inf.K(2)}},
                      {"ss_m_H", inf.ss_m_H}};
  j["flat"] = {{"k", prior.flat.k}, {"nu0", prior.flat.nu0}, {"sigma0_sq", prior.flat.sigma0_sq}};
  j["weight"] = {{"alpha1", prior.weight.alpha1}, {"alpha2", prior.weight.alpha2}};
  return j;
}

MixturePrior mixture_prior_from_json(const Json& j) {
  reject_unknown(j, {"informative", "flat", "weight"}, "prior");
  MixturePrior p;

  const Json& inf = field(j, "informative", "prior");
  reject_unknown(inf, {"beta0_hat_H", "beta2_hat_H", "s2_H", "df_H", "K", "ss_m_H"},
                 "prior.informative");
  p.informative.beta0_hat_H = as_number(field(inf, "beta0_hat_H", "prior.informative"), "beta0_hat_H");
  p.informative.beta2_hat_H = as_number(field(inf, "beta2_hat_H", "prior.informative"), "beta2_hat_H");
  p.informative.s2_H = as_number(field(inf, "s2_H", "prior.informative"), "s2_H");
  p.informative.df_H = static_cast<int>(as_integer(field(inf, "df_H", "prior.informative"), "df_H"));
  const Json& k = field(inf, "K", "prior.informative");
  if (!k.is_array() || k.size() != 3) {
    throw ConfigError("prior.informative: K must be an array of three numbers");
  }
  for (int i = 0; i < 3; ++i) {
    p.informative.K(i) = as_number(k[static_cast<std::size_t>(i)], "K");
  }
  p.informative.ss_m_H = as_number(field(inf, "ss_m_H", "prior.informative"), "ss_m_H");

  const Json& flat = field(j, "flat", "prior");
  reject_unknown(flat, {"k", "nu0", "sigma0_sq"}, "prior.flat");
  p.flat.k = as_number(field(flat, "k", "prior.flat"), "k");
  p.flat.nu0 = as_number(field(flat, "nu0", "prior.flat"), "nu0");
  p.flat.sigma0_sq = as_number(field(flat, "sigma0_sq", "prior.flat"), "sigma0_sq");

  const Json& w = field(j, "weight", "prior");
  reject_unknown(w, {"alpha1", "alpha2"}, "prior.weight");
  p.weight.alpha1 = as_number(field(w, "alpha1", "prior.weight"), "alpha1");
  p.weight.alpha2 = as_number(field(w, "alpha2", "prior.weight"), "alpha2");

  validate(p);
  return p;
}

Json to_json(const ScenarioConfig& c) {
  Json j;
  j["name"] = c.name;
  j["trial_N"] = c.trial_N;
  j["hist_N"] = c.hist_N;
  j["rho_H"] = c.rho_H;
  j["rho_shift"] = c.rho_shift;
  j["bias_shift"] = c.bias_shift;
  j["beta1_true"] = c.beta1_true;
  j["sigma_sq_true"] = c.sigma_sq_true;
  j["rand_prob"] = c.rand_prob;
  j["K0_mode"] = to_string(c.K0_mode);
  j["gamma"] = c.gamma;
  j["var_delta"] = c.var_delta;
  j["K1"] = c.K1;
  j["k"] = c.k;
  j["weight_prior"] = {{"alpha1", c.weight_prior.alpha1}, {"alpha2", c.weight_prior.alpha2}};
  j["flat_sigma_prior"] = {{"nu0", c.nu0}, {"sigma0_sq", c.sigma0_sq}};
  j["replicates"] = c.replicates;
  j["seed"] = c.seed;
  j["iterations"] = c.iterations;
  j["burn_in"] = c.burn_in;
  j["omega_grid_size"] = c.omega_grid_size;
  j["hc_variant"] = to_string(c.hc_variant);
  j["credible_alpha"] = c.credible_alpha;
  return j;
}

ScenarioConfig scenario_config_from_json(const Json& j, const ScenarioConfig& base) {
  reject_unknown(j,
                 {"name", "trial_N", "hist_N", "rho_H", "rho_shift", "bias_shift", "beta1_true",
                  "sigma_sq_true", "rand_prob", "K0_mode", "gamma", "var_delta", "K1", "k",
                  "weight_prior", "flat_sigma_prior", "replicates", "seed", "iterations",
                  "burn_in", "omega_grid_size", "hc_variant", "credible_alpha"},
                 "scenario");
  ScenarioConfig c = base;
  auto num = [&](const char* key, double& dst) {
    if_present(j, key, [&](const Json& v) { dst = as_number(v, key); });
  };
  auto integer = [&](const char* key, int& dst) {
    if_present(j, key, [&](const Json& v) { dst = static_cast<int>(as_integer(v, key)); });
  };
  if_present(j, "name", [&](const Json& v) { c.name = as_string(v, "name"); });
  integer("trial_N", c.trial_N);
  integer("hist_N", c.hist_N);
  num("rho_H", c.rho_H);
  num("rho_shift", c.rho_shift);
  num("bias_shift", c.bias_shift);
  num("beta1_true", c.beta1_true);
  num("sigma_sq_true", c.sigma_sq_true);
  num("rand_prob", c.rand_prob);
  if_present(j, "K0_mode", [&](const Json& v) { c.K0_mode = parse_k0_mode(as_string(v, "K0_mode")); });
  num("gamma", c.gamma);
  num("var_delta", c.var_delta);
  num("K1", c.K1);
  num("k", c.k);
  if_present(j, "weight_prior", [&](const Json& v) {
    reject_unknown(v, {"alpha1", "alpha2"}, "scenario.weight_prior");
    if_present(v, "alpha1", [&](const Json& x) { c.weight_prior.alpha1 = as_number(x, "alpha1"); });
    if_present(v, "alpha2", [&](const Json& x) { c.weight_prior.alpha2 = as_number(x, "alpha2"); });
  });
  if_present(j, "flat_sigma_prior", [&](const Json& v) {
    reject_unknown(v, {"nu0", "sigma0_sq"}, "scenario.flat_sigma_prior");
    if_present(v, "nu0", [&](const Json& x) { c.nu0 = as_number(x, "nu0"); });
    if_present(v, "sigma0_sq", [&](const Json& x) { c.sigma0_sq = as_number(x, "sigma0_sq"); });
  });
  integer("replicates", c.replicates);
  if_present(j, "seed", [&](const Json& v) {
    const long long s = as_integer(v, "seed");
    if (s < 0) {
      throw ConfigError("field 'seed' must be non-negative");
    }
    c.seed = static_cast<std::uint64_t>(s);
  });
  integer("iterations", c.iterations);
  integer("burn_in", c.burn_in);
  integer("omega_grid_size", c.omega_grid_size);
  if_present(j, "hc_variant",
             [&](const Json& v) { c.hc_variant = parse_hc_variant(as_string(v, "hc_variant")); });
  num("credible_alpha", c.credible_alpha);
  validate(c);
  return c;
}

std::vector<ScenarioConfig> scenario_configs_from_json(const Json& j) {
  if (!j.is_object()) {
    throw ConfigError("scenario config must be a JSON object");
  }
  if (j.contains("scenarios")) {
    reject_unknown(j, {"scenarios"}, "config");
    const Json& list = j["scenarios"];
    if (!list.is_array() || list.empty()) {
      throw ConfigError("'scenarios' must be a non-empty array");
    }
    std::vector<ScenarioConfig> out;
    for (const auto& item : list) {
      out.push_back(scenario_config_from_json(item));
    }
    return out;
  }
  if (j.contains("table_scenario")) {
    reject_unknown(j, {"table_scenario", "base"}, "config");
    const int n = static_cast<int>(as_integer(j["table_scenario"], "table_scenario"));
    ScenarioConfig base;
    if (j.contains("base")) {
      base = scenario_config_from_json(j["base"]);
    }
    return reference_grid(n, base);
  }
  return {scenario_config_from_json(j)};
}

Json to_json(const DistributionSummary& s) {
  return {{"mean", s.mean}, {"median", s.median}, {"q25", s.q25},
          {"q75", s.q75},   {"min", s.min},       {"max", s.max}};
}

Json to_json(const ScenarioResult& r) {
  Json j;
  j["config"] = to_json(r.config);
  j["succeeded"] = r.succeeded;
  j["failed"] = r.failed;
  j["mean_signed_bias"] = r.mean_signed_bias;
  j["mean_abs_bias"] = r.mean_abs_bias;
  j["mean_abs_error"] = r.mean_abs_error;
  j["variance_reduction_pct"] = to_json(r.variance_reduction_pct);
  j["ess_ratio"] = to_json(r.ess_ratio);
  j["avg_posterior_omega"] = r.avg_posterior_omega;
  j["avg_omega_draw"] = r.avg_omega_draw;
  j["type1_error_rate"] = r.type1_error_rate;
  j["procova_type1_error_rate"] = r.procova_type1_error_rate;
  return j;
}

void write_replicates_csv(std::ostream& out, const std::vector<ReplicateRecord>& records) {
  out << "index,ok,posterior_mean,posterior_var,ci_lower,ci_upper,reject,procova_beta1,"
         "procova_var,procova_reject,variance_reduction_pct,ess_ratio,ess,ess_minus_n,"
         "omega_star_mean,omega_mean,error\n";
  char buf[64];
  auto num = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    out << buf;
  };
  for (const auto& r : records) {
    out << r.index << ',' << (r.ok ? 1 : 0) << ',';
    for (double x : {r.posterior_mean, r.posterior_var, r.ci_lower, r.ci_upper}) {
      num(x);
      out << ',';
    }
    out << (r.reject ? 1 : 0) << ',';
    num(r.procova_beta1);
    out << ',';
    num(r.procova_var);
    out << ',' << (r.procova_reject ? 1 : 0) << ',';
    for (double x : {r.variance_reduction_pct, r.ess_ratio, r.ess, r.ess_minus_n,
                     r.omega_star_mean, r.omega_mean}) {
      num(x);
      out << ',';
    }
    std::string msg = r.error;
    for (char& ch : msg) {
      if (ch == '"') ch = '\'';
      if (ch == '\n') ch = ' ';
    }
    out << '"' << msg << "\"\n";
  }
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open '" + path.string() + "'");
  }
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return Json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("malformed JSON in '" + path.string() + "': " + e.what());
  }
}

}  // namespace bprocova
