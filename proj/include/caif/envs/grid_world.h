#pragma once

#include "caif/envs/environment.h"

#include <string>

namespace caif::envs
{

enum class Heading : int
{
	east = 0,
	south = 1,
	west = 2,
	north = 3,
};

enum class GridAction : int
{
	turn_left = 0,
	turn_right = 1,
	move_forward = 2,
};

inline constexpr int kGridActionCount = 3;
// Side of the egocentric window, in tiles. The agent sits at its bottom center.
inline constexpr int kGridViewTiles = 7;

struct Cell
{
	int x = 0;
	int y = 0;

	bool operator==(const Cell&) const = default;
};

/// Grid coordinates include the outer wall ring: a size-6 grid has a 4x4 walkable interior.
struct GridState
{
	int grid_size = 6;
	Cell agent_pos;
	Heading agent_dir = Heading::east;
	Cell goal_pos;
	int step_count = 0;
	bool done = false;

	bool operator==(const GridState&) const = default;
};

/// 4 * size^2 steps: 144 for the 6x6 grid, 256 for 8x8.
int grid_default_max_steps(int size);
PomdpConfig grid_pomdp_config(int size, std::uint64_t seed = 0);

bool grid_is_interior(const GridState& state, Cell cell);
Cell heading_vector(Heading heading);

/// Fixed layout: agent in the top-left interior cell facing east, goal in the bottom-right interior cell.
GridState grid_reset(int size);
/// Applies one action in place. Throws UsageError once the episode is done.
StepResult grid_step(GridState& state, GridAction action, int max_episode_steps);
/// Egocentric 7x7-tile view rendered at 64x64: walls grey, goal green, agent a red arrow pointing up.
Observation grid_render(const GridState& state);

/// Preferred outcome: the agent standing on the goal tile.
GoalSpec make_grid_goal(int size, Heading heading = Heading::east, GoalPrior prior = GoalPrior::laplace);

class GridWorld final : public Environment
{
public:
	GridWorld(int size, std::uint64_t seed = 0, int max_episode_steps = 0);

	std::string name() const override;
	const PomdpConfig& config() const override { return config_; }
	Observation reset() override;
	StepResult step(GridAction action);
	StepResult step_encoded(std::span<const float> action) override;
	bool done() const override { return state_.done; }
	GoalSpec goal(GoalPrior prior = GoalPrior::laplace) const override;
	EnvMetadata metadata() const override;
	std::string rng_state() const override { return {}; }
	void set_rng_state(const std::string&) override {}

	const GridState& state() const { return state_; }
	void set_state(const GridState& state) { state_ = state; }
	int size() const { return size_; }

private:
	int size_;
	PomdpConfig config_;
	GridState state_;
};

} // namespace caif::envs
