#pragma once

#include "caif/envs/factory.h"
#include "caif/envs/grid_world.h"
#include "caif/envs/reacher.h"
#include "caif/trainer/agent.h"
#include "caif/trainer/episode.h"

#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace caif::analysis
{

/// Repeated identical frames fed to the filter before a pose's state is read.
inline constexpr int kWarmupFrames = 3;

/// Posterior state (mean sample) after filtering `frames` copies of each observation from a
/// fresh start with zero actions; one state per observation, batched.
world_model::LatentState infer_static_states(
	trainer::Agent& agent, const std::vector<envs::Observation>& observations, int frames = kWarmupFrames);

/// Utility (negated step utility, higher is better) of the states inferred from `observations`.
/// Contrastive negatives are the same observations.
std::vector<double> observation_utilities(trainer::Agent& agent, const std::vector<envs::Observation>& observations);

struct PoseUtility
{
	int x = 0;
	int y = 0;
	int heading = 0;
	double utility = 0.0;
};

struct HeatmapReport
{
	int grid_size = 0;
	std::string agent_kind;
	std::vector<PoseUtility> poses;
	// Row-major [grid_size * grid_size], NaN on wall tiles.
	std::vector<double> mean;
	std::vector<double> max;
	double low = 0.0;
	double high = 0.0;

	double tile_mean(int x, int y) const { return mean.at(static_cast<std::size_t>(y * grid_size + x)); }
	/// Fraction of interior tiles whose mean utility is strictly greater than that of (x, y);
	/// 0 means the tile is the best one.
	double rank_fraction(int x, int y) const;
	void write_csv(const std::filesystem::path& path) const;
	/// Tiles shaded dark for high utility; walls drawn in blue.
	void write_png(const std::filesystem::path& path, bool use_max = false) const;
};

/// Evaluates every interior (tile, heading) pose of the grid, the goal tile included.
HeatmapReport grid_utility_heatmap(trainer::Agent& agent, int grid_size);

struct PoseTable
{
	std::vector<std::array<double, 2>> poses;
	std::vector<double> raw;
	std::vector<double> normalized;
	bool degenerate = false;
};

/// Min-max normalized utilities of arm poses rendered on the plain background.
PoseTable pose_utility_table(
	trainer::Agent& agent, const std::vector<std::array<double, 2>>& joint_angles, envs::ReacherDifficulty difficulty);
/// Min-max normalization; all 0.5 (with a warning) when every value is equal.
std::vector<double> normalize_unit_range(const std::vector<double>& values, bool* degenerate = nullptr);
/// The goal pose followed by a sweep of poses around it.
std::vector<std::array<double, 2>> default_reacher_poses(const envs::ReacherPhysics& physics = {});

struct WallclockEntry
{
	trainer::AgentKind kind;
	double seconds_per_update = 0.0;
	double relative_to_dreamer = 0.0;
};

struct WallclockConfig
{
	envs::EnvConfig env;
	int batch_size = 16;
	int sequence_length = 8;
	int horizon = 5;
	int updates = 100;
	int warmup_updates = 2;
	int seed_episodes = 5;
	std::uint64_t seed = 0;
	std::vector<trainer::AgentKind> kinds = {
		trainer::AgentKind::dreamer,
		trainer::AgentKind::contrastive_dreamer,
		trainer::AgentKind::likelihood_aif,
		trainer::AgentKind::contrastive_aif};
};

/// Mean per-update wall time of each agent kind on identical batches.
std::vector<WallclockEntry> wallclock_report(const WallclockConfig& config);
std::string to_text(const std::vector<WallclockEntry>& entries);

/// Ground truth (upper row) against posterior reconstructions (lower row) for the first
/// `max_frames` frames of each episode. Throws ConfigError for agents without a decoder.
void reconstruction_dump(
	trainer::Agent& agent,
	const std::vector<trainer::EpisodeRecord>& episodes,
	const std::filesystem::path& path,
	int max_frames = 8);

/// Critic scores f(goal, s) at states inferred from `observations`.
std::vector<double> goal_critic_scores(trainer::Agent& agent, const std::vector<envs::Observation>& observations);

struct InvarianceResult
{
	std::vector<double> goal_scores;
	std::vector<double> random_scores;
	// Share of (goal, random) pairs where the goal-pose score is higher.
	double win_rate = 0.0;
};

/// Compares critic scores at the goal pose rendered over every background with scores at
/// `random_poses` random arm poses drawn under sampled distractions.
InvarianceResult distraction_invariance(
	trainer::Agent& agent,
	const envs::DistractionConfig& distraction,
	envs::ReacherDifficulty difficulty,
	int random_poses,
	std::uint64_t seed);

} // namespace caif::analysis
