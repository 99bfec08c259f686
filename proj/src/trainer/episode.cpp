#include "caif/trainer/episode.h"

#include "caif/common/errors.h"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>

namespace caif::trainer
{

static_assert(std::endian::native == std::endian::little, "episode files assume a little-endian host");

namespace
{

constexpr char kMagic[8] = {'C', 'A', 'I', 'F', 'E', 'P', 'I', '1'};

template <typename T>
void put(std::ostream& out, const T& value)
{
	out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in)
{
	T value{};
	in.read(reinterpret_cast<char*>(&value), sizeof(T));
	if (!in)
	{
		throw ContractError("episode file truncated");
	}
	return value;
}

} // namespace

double EpisodeRecord::total_reward() const
{
	return std::accumulate(rewards.begin(), rewards.end(), 0.0);
}

std::span<const float> EpisodeRecord::action(std::size_t t) const
{
	return std::span<const float>(actions).subspan(t * action_dim, action_dim);
}

void EpisodeRecord::validate() const
{
	if (observations.empty())
	{
		throw ContractError("episode has no observations");
	}
	if (action_dim < 1 || rewards.size() + 1 != observations.size() ||
			actions.size() != rewards.size() * static_cast<std::size_t>(action_dim))
	{
		throw ContractError(
			"episode arrays inconsistent: " + std::to_string(observations.size()) + " observations, " +
			std::to_string(actions.size()) + " action values, " + std::to_string(rewards.size()) + " rewards");
	}
}

void write_episode(std::ostream& out, const EpisodeRecord& episode)
{
	episode.validate();
	out.write(kMagic, sizeof(kMagic));
	put<std::uint32_t>(out, kEpisodeFormatVersion);
	put<std::uint32_t>(out, envs::kImageSize);
	put<std::uint32_t>(out, envs::kImageSize);
	put<std::uint32_t>(out, envs::kImageChannels);
	put<std::uint32_t>(out, static_cast<std::uint32_t>(episode.observations.size()));
	put<std::uint32_t>(out, static_cast<std::uint32_t>(episode.action_dim));
	put<std::uint64_t>(out, episode.metadata.seed);
	const auto& d = episode.metadata.distraction;
	put<std::uint8_t>(out, d.enabled ? 1 : 0);
	put<std::int32_t>(out, d.background_id);
	put<double>(out, d.camera_angle);
	for (double v : d.arm_shift)
	{
		put<double>(out, v);
	}
	for (double v : d.target_shift)
	{
		put<double>(out, v);
	}
	put<std::uint64_t>(out, d.pattern_seed);
	for (const auto& obs : episode.observations)
	{
		out.write(reinterpret_cast<const char*>(obs.pixels.data()), static_cast<std::streamsize>(obs.pixels.size()));
	}
	out.write(
		reinterpret_cast<const char*>(episode.actions.data()),
		static_cast<std::streamsize>(episode.actions.size() * sizeof(float)));
	out.write(
		reinterpret_cast<const char*>(episode.rewards.data()),
		static_cast<std::streamsize>(episode.rewards.size() * sizeof(float)));
	if (!out)
	{
		throw std::runtime_error("failed writing episode");
	}
}

EpisodeRecord read_episode(std::istream& in)
{
	char magic[8];
	in.read(magic, sizeof(magic));
	if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
	{
		throw ContractError("not an episode file (bad magic)");
	}
	const auto version = get<std::uint32_t>(in);
	if (version != kEpisodeFormatVersion)
	{
		throw ContractError("unsupported episode format version " + std::to_string(version));
	}
	const auto height = get<std::uint32_t>(in);
	const auto width = get<std::uint32_t>(in);
	const auto channels = get<std::uint32_t>(in);
	if (height != envs::kImageSize || width != envs::kImageSize || channels != envs::kImageChannels)
	{
		throw ContractError("episode frames are not 64x64x3");
	}
	EpisodeRecord episode;
	const auto count = get<std::uint32_t>(in);
	episode.action_dim = static_cast<int>(get<std::uint32_t>(in));
	episode.metadata.seed = get<std::uint64_t>(in);
	auto& d = episode.metadata.distraction;
	d.enabled = get<std::uint8_t>(in) != 0;
	d.background_id = get<std::int32_t>(in);
	d.camera_angle = get<double>(in);
	for (double& v : d.arm_shift)
	{
		v = get<double>(in);
	}
	for (double& v : d.target_shift)
	{
		v = get<double>(in);
	}
	d.pattern_seed = get<std::uint64_t>(in);
	if (count == 0)
	{
		throw ContractError("episode file holds no observations");
	}
	episode.observations.resize(count);
	for (auto& obs : episode.observations)
	{
		in.read(reinterpret_cast<char*>(obs.pixels.data()), static_cast<std::streamsize>(obs.pixels.size()));
	}
	episode.actions.resize(static_cast<std::size_t>(count - 1) * episode.action_dim);
	episode.rewards.resize(count - 1);
	in.read(reinterpret_cast<char*>(episode.actions.data()), static_cast<std::streamsize>(episode.actions.size() * sizeof(float)));
	in.read(reinterpret_cast<char*>(episode.rewards.data()), static_cast<std::streamsize>(episode.rewards.size() * sizeof(float)));
	if (!in)
	{
		throw ContractError("episode file truncated");
	}
	episode.validate();
	return episode;
}

void save_episode(const std::filesystem::path& path, const EpisodeRecord& episode)
{
	std::ofstream out(path, std::ios::binary);
	if (!out)
	{
		throw std::runtime_error("cannot open " + path.string() + " for writing");
	}
	write_episode(out, episode);
}

EpisodeRecord load_episode(const std::filesystem::path& path)
{
	std::ifstream in(path, std::ios::binary);
	if (!in)
	{
		throw std::runtime_error("cannot open " + path.string());
	}
	return read_episode(in);
}

} // namespace caif::trainer
