#include "phe/config.hpp"

#include <fstream>
#include <set>

#include <fmt/format.h>

#include "phe/error.hpp"

namespace phe {
namespace {

const std::set<std::string> kConfigKeys{"kind", "d", "K", "n", "instances", "seed",
                                        "policies", "stride", "jobs"};

template <typename T>
T required(const nlohmann::json& doc, const char* key) {
  if (!doc.contains(key)) throw ConfigError(fmt::format("config is missing '{}'", key));
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(fmt::format("config field '{}' has the wrong type", key));
  }
}

template <typename T>
T optional(const nlohmann::json& doc, const char* key, T fallback) {
  if (!doc.contains(key)) return fallback;
  return required<T>(doc, key);
}

}  // namespace

ExperimentConfig experiment_config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (!kConfigKeys.contains(key)) throw ConfigError(fmt::format("unknown config key '{}'", key));
  }

  ExperimentConfig cfg;
  try {
    cfg.kind = parse_bandit_kind(required<std::string>(doc, "kind"));
  } catch (const InvalidParameter& e) {
    throw ConfigError(e.what());
  }
  // Negative sizes would wrap around on unsigned conversion.
  for (const char* key : {"d", "K", "n", "instances", "stride", "jobs"}) {
    if (doc.contains(key) && doc.at(key).is_number_integer() && doc.at(key).get<long long>() < 0)
      throw ConfigError(fmt::format("config field '{}' must be non-negative", key));
  }
  cfg.d = required<Eigen::Index>(doc, "d");
  cfg.num_arms = required<std::size_t>(doc, "K");
  cfg.horizon = required<std::size_t>(doc, "n");
  cfg.num_instances = required<std::size_t>(doc, "instances");
  cfg.master_seed = required<std::uint64_t>(doc, "seed");
  cfg.stride = optional<std::size_t>(doc, "stride", cfg.stride);
  cfg.jobs = optional<std::size_t>(doc, "jobs", cfg.jobs);

  if (doc.contains("policies")) {
    const auto& list = doc.at("policies");
    if (!list.is_array()) throw ConfigError("'policies' must be an array");
    for (const auto& entry : list) cfg.policies.push_back(PolicySpec::from_json(entry));
  } else {
    cfg.policies = cfg.kind == BanditKind::kLinear ? default_linear_policies()
                                                   : default_logistic_policies();
  }

  try {
    cfg.validate();
  } catch (const InvalidParameter& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json policies = nlohmann::json::array();
  for (const auto& p : cfg.policies) policies.push_back(p.to_json());
  return {{"kind", to_string(cfg.kind)},
          {"d", cfg.d},
          {"K", cfg.num_arms},
          {"n", cfg.horizon},
          {"instances", cfg.num_instances},
          {"seed", cfg.master_seed},
          {"stride", cfg.stride},
          {"jobs", cfg.jobs},
          {"policies", std::move(policies)}};
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open '{}'", path));
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(fmt::format("'{}' is not valid JSON: {}", path, e.what()));
  }
}

namespace {

PolicySpec named(std::string name, std::optional<double> a = std::nullopt) {
  PolicySpec spec;
  spec.name = std::move(name);
  spec.a = a;
  return spec;
}

}  // namespace

std::vector<PolicySpec> default_linear_policies() {
  return {named("linphe", 2.0), named("linphe", 1.0), named("linphe", 0.5),
          named("linucb"),      named("lints"),       named("egreedy")};
}

std::vector<PolicySpec> default_logistic_policies() {
  return {named("logphe", 2.0), named("logphe", 1.0), named("logphe", 0.5),
          named("glmucb"),      named("logts"),       named("egreedy")};
}

}  // namespace phe
