#include "caif/envs/grid_world.h"

#include "caif/common/errors.h"

#include <array>
#include <string>

namespace caif::envs
{

namespace
{

constexpr Rgb kFloor = {0, 0, 0};
constexpr Rgb kGridLine = {60, 60, 60};
constexpr Rgb kWall = {100, 100, 100};
constexpr Rgb kGoal = {0, 255, 0};
constexpr Rgb kAgent = {255, 0, 0};

void check_size(int size)
{
	if (size != 6 && size != 8)
	{
		throw ConfigError("grid size must be 6 or 8, got " + std::to_string(size));
	}
}

Cell right_of(Cell forward)
{
	return {-forward.y, forward.x};
}

enum class Tile
{
	floor,
	wall,
	goal,
};

Tile tile_at(const GridState& state, Cell cell)
{
	if (!grid_is_interior(state, cell))
	{
		return Tile::wall;
	}
	return cell == state.goal_pos ? Tile::goal : Tile::floor;
}

// Upward-pointing triangle in tile-local coordinates, both in [0, 1).
bool inside_arrow(double u, double v)
{
	const double tip_v = 0.12;
	const double base_v = 0.88;
	if (v < tip_v || v > base_v)
	{
		return false;
	}
	const double half_width = 0.31 * (v - tip_v) / (base_v - tip_v);
	return u >= 0.5 - half_width && u <= 0.5 + half_width;
}

} // namespace

int grid_default_max_steps(int size)
{
	return 4 * size * size;
}

PomdpConfig grid_pomdp_config(int size, std::uint64_t seed)
{
	check_size(size);
	PomdpConfig config;
	config.action_space = {ActionSpace::Kind::discrete, kGridActionCount};
	config.max_episode_steps = grid_default_max_steps(size);
	config.seed = seed;
	return config;
}

bool grid_is_interior(const GridState& state, Cell cell)
{
	return cell.x >= 1 && cell.y >= 1 && cell.x <= state.grid_size - 2 && cell.y <= state.grid_size - 2;
}

Cell heading_vector(Heading heading)
{
	switch (heading)
	{
		case Heading::east: return {1, 0};
		case Heading::south: return {0, 1};
		case Heading::west: return {-1, 0};
		case Heading::north: return {0, -1};
	}
	return {1, 0};
}

GridState grid_reset(int size)
{
	check_size(size);
	GridState state;
	state.grid_size = size;
	state.agent_pos = {1, 1};
	state.agent_dir = Heading::east;
	state.goal_pos = {size - 2, size - 2};
	return state;
}

StepResult grid_step(GridState& state, GridAction action, int max_episode_steps)
{
	if (state.done)
	{
		throw UsageError("grid_step: episode is done, reset before stepping");
	}
	const int dir = static_cast<int>(state.agent_dir);
	double reward = 0.0;
	bool reached = false;
	switch (action)
	{
		case GridAction::turn_left: state.agent_dir = static_cast<Heading>((dir + 3) % 4); break;
		case GridAction::turn_right: state.agent_dir = static_cast<Heading>((dir + 1) % 4); break;
		case GridAction::move_forward:
		{
			const Cell delta = heading_vector(state.agent_dir);
			const Cell next = {state.agent_pos.x + delta.x, state.agent_pos.y + delta.y};
			if (grid_is_interior(state, next))
			{
				state.agent_pos = next;
				reached = next == state.goal_pos;
			}
			break;
		}
		default: throw ContractError("grid_step: unknown action " + std::to_string(static_cast<int>(action)));
	}
	if (reached)
	{
		reward = 1.0 - 0.9 * (static_cast<double>(state.step_count) / max_episode_steps);
	}
	++state.step_count;
	state.done = reached || state.step_count >= max_episode_steps;
	return {grid_render(state), reward, state.done};
}

Observation grid_render(const GridState& state)
{
	Observation obs;
	const Cell forward = heading_vector(state.agent_dir);
	const Cell right = right_of(forward);
	constexpr int agent_col = kGridViewTiles / 2;
	constexpr int agent_row = kGridViewTiles - 1;
	for (int py = 0; py < kImageSize; ++py)
	{
		const int row = py * kGridViewTiles / kImageSize;
		const bool row_edge = py == 0 || (py - 1) * kGridViewTiles / kImageSize != row;
		const double v = (py + 0.5) * kGridViewTiles / kImageSize - row;
		for (int px = 0; px < kImageSize; ++px)
		{
			const int col = px * kGridViewTiles / kImageSize;
			const bool col_edge = px == 0 || (px - 1) * kGridViewTiles / kImageSize != col;
			const double u = (px + 0.5) * kGridViewTiles / kImageSize - col;

			const int ahead = agent_row - row;
			const int lateral = col - agent_col;
			const Cell world = {
				state.agent_pos.x + ahead * forward.x + lateral * right.x,
				state.agent_pos.y + ahead * forward.y + lateral * right.y};
			const Tile tile = tile_at(state, world);

			Rgb color = kFloor;
			if (tile == Tile::wall)
			{
				color = kWall;
			}
			else
			{
				if (tile == Tile::goal)
				{
					color = kGoal;
				}
				if (row_edge || col_edge)
				{
					color = kGridLine;
				}
			}
			if (row == agent_row && col == agent_col && inside_arrow(u, v))
			{
				color = kAgent;
			}
			obs.set(py, px, color);
		}
	}
	return obs;
}

GoalSpec make_grid_goal(int size, Heading heading, GoalPrior prior)
{
	GridState state = grid_reset(size);
	state.agent_pos = state.goal_pos;
	state.agent_dir = heading;
	return {grid_render(state), prior, 1.0};
}

GridWorld::GridWorld(int size, std::uint64_t seed, int max_episode_steps)
		: size_(size), config_(grid_pomdp_config(size, seed)), state_(grid_reset(size))
{
	if (max_episode_steps > 0)
	{
		config_.max_episode_steps = max_episode_steps;
	}
	config_.validate();
}

std::string GridWorld::name() const
{
	return "grid" + std::to_string(size_);
}

Observation GridWorld::reset()
{
	state_ = grid_reset(size_);
	return grid_render(state_);
}

StepResult GridWorld::step(GridAction action)
{
	return grid_step(state_, action, config_.max_episode_steps);
}

StepResult GridWorld::step_encoded(std::span<const float> action)
{
	if (static_cast<int>(action.size()) != kGridActionCount)
	{
		throw ContractError("GridWorld expects a one-hot action of width 3");
	}
	return step(static_cast<GridAction>(decode_discrete(action)));
}

GoalSpec GridWorld::goal(GoalPrior prior) const
{
	return make_grid_goal(size_, Heading::east, prior);
}

EnvMetadata GridWorld::metadata() const
{
	return {config_.seed, {}};
}

} // namespace caif::envs
