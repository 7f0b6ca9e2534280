#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "phe/harness.hpp"

namespace phe {

// Parses {"kind", "d", "K", "n", "instances", "seed", "policies", "stride"?,
// "jobs"?}. Unknown keys, missing keys and wrong types raise ConfigError; the
// result is validated before it is returned.
ExperimentConfig experiment_config_from_json(const nlohmann::json& doc);
nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg);

// Reads and parses a JSON file. Throws ConfigError on I/O or syntax errors.
nlohmann::json read_json_file(const std::string& path);

// Linear sweep: LinPHE at a in {2, 1, 0.5}, LinUCB, LinTS, epsilon-greedy.
std::vector<PolicySpec> default_linear_policies();
// Logistic sweep: LogPHE at a in {2, 1, 0.5}, GLM-UCB, LogTS, epsilon-greedy.
std::vector<PolicySpec> default_logistic_policies();

}  // namespace phe
