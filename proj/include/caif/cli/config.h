#pragma once

#include "caif/envs/factory.h"
#include "caif/trainer/agent.h"
#include "caif/trainer/trainer.h"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace caif::cli
{

struct OutputConfig
{
	// Relative paths are resolved against $CAIF_RUN_ROOT when it is set.
	std::string run_dir = "runs/experiment";
	std::string log_level = "info";

	bool operator==(const OutputConfig&) const = default;
};

/// Everything needed to reproduce a training run. Missing keys take documented defaults;
/// batch_size, sequence_length and horizon default per task (see trainer::task_defaults).
struct ExperimentConfig
{
	envs::EnvConfig env;
	trainer::AgentConfig agent;
	trainer::TrainConfig train;
	OutputConfig output;
	std::vector<std::uint64_t> seeds = {0};

	void validate() const;
	bool operator==(const ExperimentConfig& other) const;
};

/// Strict conversion: unknown keys, wrong types and a missing agent.agent_kind raise
/// ConfigError naming the dotted field path.
ExperimentConfig parse_config(const nlohmann::json& document);
nlohmann::json to_json(const ExperimentConfig& config);

/// Sets `path` (dotted, e.g. "training.updates") to `value`, which is read as JSON when it
/// parses and as a plain string otherwise.
void apply_override(nlohmann::json& document, const std::string& assignment);

/// Reads a config file, applies "key=value" overrides, then parses. Syntax errors carry the
/// file name, line and column.
ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});
void save_config(const std::filesystem::path& path, const ExperimentConfig& config);

/// Run directory root after $CAIF_RUN_ROOT resolution.
std::filesystem::path run_root(const OutputConfig& output);
std::filesystem::path seed_directory(const std::filesystem::path& root, std::uint64_t seed);

/// Training config for one seed.
trainer::TrainConfig train_config_for_seed(const ExperimentConfig& config, std::uint64_t seed);

} // namespace caif::cli
