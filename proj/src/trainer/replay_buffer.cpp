#include "caif/trainer/replay_buffer.h"

#include "caif/common/errors.h"

#include <algorithm>
#include <string>

namespace caif::trainer
{

namespace
{

std::size_t starts_in(const EpisodeRecord& episode, std::size_t length)
{
	return episode.steps() >= length ? episode.steps() - length + 1 : 0;
}

} // namespace

void ReplayBuffer::add(EpisodeRecord episode)
{
	episode.validate();
	if (!episodes_.empty() && episodes_.front().action_dim != episode.action_dim)
	{
		throw ContractError("replay buffer: action width differs from stored episodes");
	}
	episodes_.push_back(std::move(episode));
}

std::size_t ReplayBuffer::total_steps() const
{
	std::size_t total = 0;
	for (const auto& e : episodes_)
	{
		total += e.steps();
	}
	return total;
}

std::size_t ReplayBuffer::valid_starts(std::size_t length) const
{
	std::size_t total = 0;
	for (const auto& e : episodes_)
	{
		total += starts_in(e, length);
	}
	return total;
}

SubsequenceIndex ReplayBuffer::sample_index(std::size_t length, std::mt19937_64& rng) const
{
	if (length == 0)
	{
		throw ContractError("sample: subsequence length must be >= 1");
	}
	const std::size_t total = valid_starts(length);
	if (total == 0)
	{
		std::size_t longest = 0;
		for (const auto& e : episodes_)
		{
			longest = std::max(longest, e.steps());
		}
		throw ContractError(
			"sample: no stored episode has " + std::to_string(length) + " timesteps (" + std::to_string(episodes_.size()) +
			" episodes, longest " + std::to_string(longest) + ")");
	}
	std::uniform_int_distribution<std::size_t> pick(0, total - 1);
	std::size_t offset = pick(rng);
	for (std::size_t i = 0; i < episodes_.size(); ++i)
	{
		const std::size_t n = starts_in(episodes_[i], length);
		if (offset < n)
		{
			return {i, offset};
		}
		offset -= n;
	}
	throw std::logic_error("sample_index: offset past the last episode");
}

Batch ReplayBuffer::sample(int batch_size, int length, std::mt19937_64& rng) const
{
	if (batch_size < 1 || length < 1)
	{
		throw ContractError("sample: batch size and length must be >= 1");
	}
	std::vector<SubsequenceIndex> index;
	index.reserve(batch_size);
	for (int b = 0; b < batch_size; ++b)
	{
		index.push_back(sample_index(static_cast<std::size_t>(length), rng));
	}
	return gather(index, length);
}

Batch ReplayBuffer::gather(const std::vector<SubsequenceIndex>& index, int length) const
{
	const auto batch = static_cast<int64_t>(index.size());
	const int action_dim = episodes_.empty() ? 1 : episodes_.front().action_dim;
	auto pixels = torch::empty({batch, length, envs::kImageSize, envs::kImageSize, envs::kImageChannels}, torch::kUInt8);
	auto actions = torch::zeros({batch, length, action_dim});
	auto rewards = torch::zeros({batch, length});
	auto* px = pixels.data_ptr<std::uint8_t>();
	auto act = actions.accessor<float, 3>();
	auto rew = rewards.accessor<float, 2>();
	for (int64_t b = 0; b < batch; ++b)
	{
		const auto& [ep, start] = index[b];
		const auto& episode = episodes_.at(ep);
		if (start + length > episode.steps())
		{
			throw ContractError("gather: subsequence crosses the end of episode " + std::to_string(ep));
		}
		for (int t = 0; t < length; ++t)
		{
			const std::size_t step = start + t;
			const auto& obs = episode.observations[step];
			std::copy(obs.pixels.begin(), obs.pixels.end(), px);
			px += envs::kObservationBytes;
			if (step > 0)
			{
				const auto a = episode.action(step - 1);
				for (int k = 0; k < action_dim; ++k)
				{
					act[b][t][k] = a[k];
				}
				rew[b][t] = episode.rewards[step - 1];
			}
		}
	}
	Batch out;
	out.observations = pixels.permute({0, 1, 4, 2, 3}).to(torch::kFloat32).div(255.0).sub(0.5).contiguous();
	out.prev_actions = actions;
	out.rewards = rewards;
	out.index = index;
	return out;
}

} // namespace caif::trainer
