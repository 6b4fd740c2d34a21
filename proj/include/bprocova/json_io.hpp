#pragma once

#include "bprocova/prior.hpp"
#include "bprocova/simulation.hpp"

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

namespace bprocova {

using Json = nlohmann::ordered_json;

Json to_json(const MixturePrior& prior);
/// Strict: unknown or missing fields throw ConfigError.
MixturePrior mixture_prior_from_json(const Json& j);

Json to_json(const ScenarioConfig& config);
/// Fields not present keep their defaults; unknown fields throw ConfigError.
ScenarioConfig scenario_config_from_json(const Json& j, const ScenarioConfig& base = {});

/// Accepts a single scenario object, {"scenarios": [...]} or
/// {"table_scenario": n, "base": {...}} (expanded with reference_grid).
std::vector<ScenarioConfig> scenario_configs_from_json(const Json& j);

Json to_json(const DistributionSummary& s);
/// Summary only; per-replicate records go to CSV.
Json to_json(const ScenarioResult& result);
void write_replicates_csv(std::ostream& out, const std::vector<ReplicateRecord>& records);

/// Reads and parses a JSON file. IoError when unreadable, ConfigError when
/// malformed.
Json read_json_file(const std::filesystem::path& path);

}  // namespace bprocova
