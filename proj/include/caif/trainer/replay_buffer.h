#pragma once

#include "caif/trainer/episode.h"

#include <torch/torch.h>

#include <random>
#include <utility>
#include <vector>

namespace caif::trainer
{

/// Location of a sampled subsequence: episode index and first timestep.
struct SubsequenceIndex
{
	std::size_t episode = 0;
	std::size_t start = 0;

	bool operator==(const SubsequenceIndex&) const = default;
};

/// A [B, L] training batch. Each timestep pairs o_t with the action that led to it (zeros at
/// episode start) and the reward received on arrival.
struct Batch
{
	torch::Tensor observations;
	torch::Tensor prev_actions;
	torch::Tensor rewards;
	std::vector<SubsequenceIndex> index;

	int64_t batch_size() const { return observations.size(0); }
	int64_t length() const { return observations.size(1); }
};

/// Append-only episode store with uniform sampling over valid (episode, start) pairs.
class ReplayBuffer
{
public:
	void add(EpisodeRecord episode);

	std::size_t size() const { return episodes_.size(); }
	bool empty() const { return episodes_.empty(); }
	const EpisodeRecord& episode(std::size_t i) const { return episodes_.at(i); }
	const std::vector<EpisodeRecord>& episodes() const { return episodes_; }
	std::size_t total_steps() const;

	/// Number of subsequences of length `length` that stay within one episode.
	std::size_t valid_starts(std::size_t length) const;
	/// Uniform draw over all valid (episode, start) pairs. Throws ContractError when none exist.
	SubsequenceIndex sample_index(std::size_t length, std::mt19937_64& rng) const;
	Batch sample(int batch_size, int length, std::mt19937_64& rng) const;
	/// Assembles a batch from explicit subsequence locations.
	Batch gather(const std::vector<SubsequenceIndex>& index, int length) const;

private:
	std::vector<EpisodeRecord> episodes_;
};

} // namespace caif::trainer
