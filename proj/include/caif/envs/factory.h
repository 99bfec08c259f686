#pragma once

#include "caif/envs/environment.h"
#include "caif/envs/reacher.h"

#include <cstdint>
#include <memory>
#include <string>

namespace caif::envs
{

enum class Task
{
	grid,
	reacher,
};

std::string to_string(Task task);
Task parse_task(const std::string& name);
std::string to_string(ReacherDifficulty difficulty);
ReacherDifficulty parse_difficulty(const std::string& name);

struct EnvConfig
{
	Task task = Task::grid;
	// Grid side length including the outer walls (6 or 8).
	int grid_size = 6;
	ReacherDifficulty difficulty = ReacherDifficulty::easy;
	DistractionConfig distraction;
	// 0 selects the task default (4 * size^2 for the grid, 1000 for the reacher).
	int max_episode_steps = 0;

	void validate() const;
	bool operator==(const EnvConfig& other) const;
};

std::unique_ptr<Environment> make_environment(const EnvConfig& config, std::uint64_t seed);

} // namespace caif::envs
