#include "caif/envs/factory.h"

#include "caif/common/errors.h"
#include "caif/envs/grid_world.h"

namespace caif::envs
{

std::string to_string(Task task)
{
	return task == Task::grid ? "grid" : "reacher";
}

Task parse_task(const std::string& name)
{
	if (name == "grid")
	{
		return Task::grid;
	}
	if (name == "reacher")
	{
		return Task::reacher;
	}
	throw ConfigError("unknown task '" + name + "' (expected grid or reacher)");
}

std::string to_string(ReacherDifficulty difficulty)
{
	return difficulty == ReacherDifficulty::easy ? "easy" : "hard";
}

ReacherDifficulty parse_difficulty(const std::string& name)
{
	if (name == "easy")
	{
		return ReacherDifficulty::easy;
	}
	if (name == "hard")
	{
		return ReacherDifficulty::hard;
	}
	throw ConfigError("unknown reacher difficulty '" + name + "' (expected easy or hard)");
}

void EnvConfig::validate() const
{
	if (task == Task::grid && grid_size != 6 && grid_size != 8)
	{
		throw ConfigError("grid_size must be 6 or 8, got " + std::to_string(grid_size));
	}
	if (max_episode_steps < 0)
	{
		throw ConfigError("max_episode_steps must be >= 0 (0 selects the task default)");
	}
	if (task == Task::reacher)
	{
		distraction.validate();
	}
	else if (distraction.enabled)
	{
		throw ConfigError("distractions are only available for the reacher task");
	}
}

bool EnvConfig::operator==(const EnvConfig& other) const
{
	return task == other.task && grid_size == other.grid_size && difficulty == other.difficulty &&
				 max_episode_steps == other.max_episode_steps && distraction.enabled == other.distraction.enabled &&
				 distraction.background_id == other.distraction.background_id &&
				 distraction.camera_jitter == other.distraction.camera_jitter &&
				 distraction.palette_shift == other.distraction.palette_shift &&
				 distraction.per_episode_reseed == other.distraction.per_episode_reseed;
}

std::unique_ptr<Environment> make_environment(const EnvConfig& config, std::uint64_t seed)
{
	config.validate();
	if (config.task == Task::grid)
	{
		return std::make_unique<GridWorld>(config.grid_size, seed, config.max_episode_steps);
	}
	const int steps = config.max_episode_steps > 0 ? config.max_episode_steps : kReacherEpisodeSteps;
	return std::make_unique<Reacher>(config.difficulty, config.distraction, seed, steps);
}

} // namespace caif::envs
