#pragma once

#include <json.hpp>

#include <filesystem>

#include "epidirect/experiments.hpp"
#include "epidirect/verification.hpp"

namespace epidirect {

/// Parses an experiment config. Missing keys keep the desk-scale defaults;
/// unknown keys are rejected so typos do not silently fall back.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const ExperimentConfig& config);
nlohmann::json to_json(const ReplicateSummary& s);
nlohmann::json to_json(const PropositionReport& report);
nlohmann::json to_json(const MarginalValidityReport& report);
nlohmann::json to_json(const DominanceReport& report);
nlohmann::json to_json(const CouplingSuiteReport& report);
nlohmann::json to_json(const OracleSuiteReport& report);
nlohmann::json to_json(const SimulatedTrial& trial);

}  // namespace epidirect
