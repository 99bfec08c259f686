#pragma once

#include "caif/envs/environment.h"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace caif::trainer
{

/// One stored trajectory: T+1 observations, T actions (model encoding) and T rewards.
struct EpisodeRecord
{
	std::vector<envs::Observation> observations;
	// Row-major [T, action_dim].
	std::vector<float> actions;
	std::vector<float> rewards;
	int action_dim = 1;
	envs::EnvMetadata metadata;

	/// Number of stored timesteps, i.e. observations (T + 1).
	std::size_t steps() const { return observations.size(); }
	std::size_t transitions() const { return rewards.size(); }
	double total_reward() const;
	std::span<const float> action(std::size_t t) const;

	/// Throws ContractError if array lengths are inconsistent.
	void validate() const;
};

/// Binary layout, little-endian:
///   char[8] magic "CAIFEPI1", u32 version, u32 height, u32 width, u32 channels,
///   u32 observation count (T+1), u32 action_dim, u64 seed,
///   u8 distraction enabled, i32 background id, f64 camera angle, f64[3] arm shift,
///   f64[3] target shift, u64 pattern seed,
///   u8[(T+1) * H * W * C] pixels (HWC per frame), f32[T * action_dim] actions, f32[T] rewards.
inline constexpr std::uint32_t kEpisodeFormatVersion = 1;

void write_episode(std::ostream& out, const EpisodeRecord& episode);
EpisodeRecord read_episode(std::istream& in);
void save_episode(const std::filesystem::path& path, const EpisodeRecord& episode);
EpisodeRecord load_episode(const std::filesystem::path& path);

} // namespace caif::trainer
