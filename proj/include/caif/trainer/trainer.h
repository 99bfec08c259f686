#pragma once

#include "caif/envs/factory.h"
#include "caif/trainer/agent.h"
#include "caif/trainer/replay_buffer.h"

#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace caif::trainer
{

struct TrainConfig
{
	// R: random-action episodes collected before any update.
	int seed_episodes = 50;
	// U: updates per outer iteration.
	int updates = 100;
	int batch_size = 50;
	int sequence_length = 7;
	// Outer iterations, each collecting one policy episode. 0 means seeding only.
	int episodes = 150;
	std::uint64_t seed = 0;
	// Checkpoint cadence in iterations; the final iteration is always checkpointed.
	int checkpoint_every = 10;

	void validate() const;
	bool operator==(const TrainConfig&) const = default;
};

/// Batch shape and horizon used for a task unless overridden: 6x6 grid B=50 L=7 H=6,
/// 8x8 grid B=50 L=11 H=10, reacher B=30 L=30 H=10.
struct TaskDefaults
{
	int batch_size;
	int sequence_length;
	int horizon;
};
TaskDefaults task_defaults(const envs::EnvConfig& env);

/// One record per outer iteration.
struct EpochStats
{
	int iteration = 0;
	UpdateStats mean;
	double episode_return = 0.0;
	int episode_length = 0;
	double seconds_per_update = 0.0;
	std::size_t buffer_episodes = 0;
	std::size_t env_steps = 0;
};

std::string to_json_line(const EpochStats& stats);

/// Where the trainer stores the `index`-th buffered episode of a run.
std::filesystem::path episode_path(const std::filesystem::path& run_dir, std::size_t index);

/// Episode of uniformly random actions from a fresh reset.
EpisodeRecord random_episode(envs::Environment& env, std::mt19937_64& rng);
/// Buffer with exactly `count` random-action episodes.
ReplayBuffer seed_buffer(envs::Environment& env, int count, std::mt19937_64& rng);
/// Runs one episode acting from the filtered posterior state. `explore` samples actions,
/// otherwise the policy mode is used.
EpisodeRecord collect_episode(Agent& agent, envs::Environment& env, bool explore);

/// Outer training loop with an optional run directory for metrics, episodes and checkpoints.
class Trainer
{
public:
	Trainer(
		const envs::EnvConfig& env_config,
		const AgentConfig& agent_config,
		const TrainConfig& train_config,
		std::optional<std::filesystem::path> run_dir = std::nullopt);

	Agent& agent() { return *agent_; }
	envs::Environment& env() { return *env_; }
	ReplayBuffer& buffer() { return buffer_; }
	const TrainConfig& config() const { return config_; }
	int iteration() const { return iteration_; }
	const std::vector<EpochStats>& history() const { return history_; }

	/// Fills the buffer with R random episodes (no-op when already seeded).
	void seed();
	/// U updates followed by one collected episode.
	EpochStats train_iteration();
	/// Seeds if needed, then iterates until the episode budget; resumes from the run
	/// directory's checkpoint when one exists.
	void run();

	void save_checkpoint(const std::filesystem::path& path) const;
	void load_checkpoint(const std::filesystem::path& path);
	/// Location of the rolling checkpoint inside the run directory.
	std::optional<std::filesystem::path> checkpoint_path() const;

private:
	void add_episode(EpisodeRecord episode);
	void write_metrics(const EpochStats& stats) const;
	void dump_divergence(const std::string& what, const Batch& batch) const;
	void truncate_metrics() const;

	envs::EnvConfig env_config_;
	TrainConfig config_;
	std::optional<std::filesystem::path> run_dir_;
	std::unique_ptr<envs::Environment> env_;
	std::unique_ptr<Agent> agent_;
	ReplayBuffer buffer_;
	std::mt19937_64 rng_;
	int iteration_ = 0;
	bool seeded_ = false;
	std::vector<EpochStats> history_;
};

/// Returns of `count` deterministic-mode episodes.
std::vector<double> evaluate(Agent& agent, envs::Environment& env, int count);

} // namespace caif::trainer
