#pragma once

#include "caif/envs/grid_world.h"
#include "caif/trainer/agent.h"
#include "caif/trainer/trainer.h"

#include <torch/torch.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

namespace caif::envs
{

// Lets test assertions print observations (and containers of them) on failure.
inline std::ostream& operator<<(std::ostream& out, const Observation& obs)
{
	std::size_t sum = 0;
	for (auto v : obs.pixels)
	{
		sum += v;
	}
	return out << "Observation(pixel sum " << sum << ")";
}

} // namespace caif::envs

namespace caif::testing
{

struct GradCheck
{
	int coordinates = 0;
	int passing = 0;
	double worst = 0.0;

	double fraction() const { return coordinates == 0 ? 0.0 : static_cast<double>(passing) / coordinates; }
};

/// Compares autograd gradients of `loss` with central differences for every coordinate of
/// `params` (which must be float64 leaves). Coordinates where both gradients are below
/// `floor` in magnitude count as agreeing when their absolute difference is below `floor`.
inline GradCheck gradcheck(
	const std::function<torch::Tensor()>& loss,
	std::vector<torch::Tensor> params,
	double step = 1e-6,
	double tolerance = 1e-4,
	double floor = 1e-8)
{
	for (auto& p : params)
	{
		if (p.grad().defined())
		{
			p.mutable_grad().zero_();
		}
	}
	loss().backward();
	GradCheck result;
	for (auto& p : params)
	{
		auto analytic = p.grad().defined() ? p.grad().clone() : torch::zeros_like(p);
		auto flat = analytic.view(-1);
		torch::NoGradGuard no_grad;
		auto values = p.view(-1);
		for (int64_t i = 0; i < values.numel(); ++i)
		{
			const double original = values[i].item<double>();
			values[i] = original + step;
			const double up = loss().item<double>();
			values[i] = original - step;
			const double down = loss().item<double>();
			values[i] = original;
			const double numeric = (up - down) / (2.0 * step);
			const double a = flat[i].item<double>();
			const double scale = std::max(std::abs(a), std::abs(numeric));
			const double diff = std::abs(a - numeric);
			const double rel = scale < floor ? (diff < floor ? 0.0 : 1.0) : diff / scale;
			++result.coordinates;
			result.passing += rel < tolerance ? 1 : 0;
			result.worst = std::max(result.worst, rel);
		}
	}
	return result;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir
{
public:
	explicit TempDir(const std::string& tag = "caif")
	{
		std::random_device rd;
		path_ = std::filesystem::temp_directory_path() / (tag + "_" + std::to_string(rd()) + std::to_string(rd()));
		std::filesystem::create_directories(path_);
	}
	~TempDir()
	{
		std::error_code ec;
		std::filesystem::remove_all(path_, ec);
	}
	TempDir(const TempDir&) = delete;
	TempDir& operator=(const TempDir&) = delete;

	const std::filesystem::path& path() const { return path_; }

private:
	std::filesystem::path path_;
};

/// Narrow architecture that keeps agent-level tests fast.
inline world_model::ArchitectureSpec tiny_arch()
{
	world_model::ArchitectureSpec arch;
	arch.stoch = 4;
	arch.deter = 8;
	arch.hidden = 8;
	arch.embed = 4;
	arch.channels = {2, 2, 2, 2};
	return arch;
}

inline trainer::AgentConfig tiny_agent(trainer::AgentKind kind, int horizon = 3)
{
	trainer::AgentConfig config;
	config.kind = kind;
	config.arch = tiny_arch();
	config.returns.horizon = horizon;
	return config;
}

inline trainer::TrainConfig tiny_train(std::uint64_t seed = 0)
{
	trainer::TrainConfig config;
	config.seed_episodes = 2;
	config.updates = 2;
	config.batch_size = 3;
	config.sequence_length = 4;
	config.episodes = 2;
	config.seed = seed;
	config.checkpoint_every = 1;
	return config;
}

/// Grid with a short timeout so episodes stay small.
inline envs::EnvConfig small_grid(int max_steps = 20)
{
	envs::EnvConfig env;
	env.task = envs::Task::grid;
	env.grid_size = 6;
	env.max_episode_steps = max_steps;
	return env;
}

inline trainer::Batch grid_batch(int batch, int length, std::uint64_t seed = 0, int episodes = 3)
{
	envs::GridWorld env(6, seed, 30);
	std::mt19937_64 rng(seed);
	auto buffer = trainer::seed_buffer(env, episodes, rng);
	return buffer.sample(batch, length, rng);
}

inline std::vector<torch::Tensor> all_parameters(trainer::Agent& agent)
{
	std::vector<torch::Tensor> params;
	for (auto* module : std::initializer_list<torch::nn::Module*>{
				 agent.world_model().get(), agent.actor().get(), agent.utility().get(), agent.frozen_utility().get()})
	{
		for (const auto& p : module->parameters())
		{
			params.push_back(p.detach().clone());
		}
	}
	return params;
}

inline bool same_tensors(const std::vector<torch::Tensor>& a, const std::vector<torch::Tensor>& b)
{
	if (a.size() != b.size())
	{
		return false;
	}
	for (std::size_t i = 0; i < a.size(); ++i)
	{
		if (!torch::equal(a[i], b[i]))
		{
			return false;
		}
	}
	return true;
}

} // namespace caif::testing
