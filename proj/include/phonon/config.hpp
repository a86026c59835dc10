// config.hpp: experiment config files (versioned JSON) and their canonical hash.
//
// Every key is checked: unknown keys, wrong types and a missing or foreign
// schema_version are rejected with the offending key path in the message.
// Keys that are left out take the defaults of the chosen experiment.

#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "phonon/experiments.hpp"

namespace phonon {

class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

nlohmann::ordered_json config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& doc);

ExperimentConfig parse_config(const std::string& text);
std::string serialize_config(const ExperimentConfig& config);
ExperimentConfig load_config(const std::filesystem::path& path);

nlohmann::ordered_json sequence_to_json(const SequenceSpec& spec);
SequenceSpec sequence_from_json(const nlohmann::json& doc, const std::string& where = "preparation");

// 16 hex digits of FNV-1a over the canonical serialization.
std::string config_hash(const ExperimentConfig& config);

} // namespace phonon
