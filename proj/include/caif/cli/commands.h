#pragma once

#include "caif/cli/config.h"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace caif::cli
{

/// Process exit codes of the caif tool.
enum ExitCode : int
{
	exit_ok = 0,
	exit_failure = 1,
	exit_config_error = 2,
	exit_runtime_abort = 3,
};

/// Trains every seed of the experiment; returns the per-seed run directories.
std::vector<std::filesystem::path> cmd_train(const ExperimentConfig& config);

struct EvalSummary
{
	std::vector<double> returns;
	double mean = 0.0;
	double stddev = 0.0;

	nlohmann::json to_json() const;
};

/// Runs `episodes` deterministic-mode episodes from a seed directory's checkpoint and writes
/// eval.json next to it.
EvalSummary cmd_eval(
	const std::filesystem::path& run_dir,
	int episodes,
	std::uint64_t seed,
	const std::optional<std::filesystem::path>& checkpoint = std::nullopt);

struct AnalyzeOptions
{
	std::string report;
	// Seed directory holding config.json and checkpoints; optional for efficiency and wallclock.
	std::optional<std::filesystem::path> run_dir;
	std::optional<std::filesystem::path> checkpoint;
	// Where artifacts go; defaults to <run_dir>/analysis or the config's run root.
	std::optional<std::filesystem::path> output_dir;
	int wallclock_updates = 100;
};

/// Dispatches to the analysis module; returns the written artifact paths.
std::vector<std::filesystem::path> cmd_analyze(const ExperimentConfig& config, const AnalyzeOptions& options);

/// Agent for `config` with parameters restored from a trainer checkpoint.
std::unique_ptr<trainer::Agent> load_agent(const ExperimentConfig& config, const std::filesystem::path& checkpoint);

/// Seed directory checkpoint written by training.
std::filesystem::path default_checkpoint(const std::filesystem::path& run_dir);

} // namespace caif::cli
