#include "caif/trainer/trainer.h"

#include "caif/common/errors.h"
#include "caif/common/log.h"

#include <ATen/CPUGeneratorImpl.h>
#include <fmt/format.h>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <sstream>

namespace caif::trainer
{

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace
{

std::vector<float> random_action(const envs::ActionSpace& space, std::mt19937_64& rng)
{
	if (space.is_discrete())
	{
		std::uniform_int_distribution<int> pick(0, space.size - 1);
		return envs::encode_discrete(pick(rng), space.size);
	}
	std::uniform_real_distribution<float> value(space.low, space.high);
	std::vector<float> action(static_cast<std::size_t>(space.size));
	for (auto& a : action)
	{
		a = value(rng);
	}
	return action;
}

std::string engine_state(const std::mt19937_64& rng)
{
	std::ostringstream out;
	out << rng;
	return out.str();
}

void set_engine_state(std::mt19937_64& rng, const std::string& state)
{
	std::istringstream in(state);
	in >> rng;
	if (!in)
	{
		throw ConfigError("corrupt random engine state in checkpoint");
	}
}

torch::Tensor torch_rng_state()
{
	auto gen = at::detail::getDefaultCPUGenerator();
	std::lock_guard<std::mutex> lock(gen.mutex());
	return gen.get_state();
}

void set_torch_rng_state(const torch::Tensor& state)
{
	auto gen = at::detail::getDefaultCPUGenerator();
	std::lock_guard<std::mutex> lock(gen.mutex());
	gen.set_state(state);
}

} // namespace

fs::path episode_path(const fs::path& run_dir, std::size_t index)
{
	return run_dir / "episodes" / fmt::format("ep_{:06d}.bin", index);
}

void TrainConfig::validate() const
{
	if (seed_episodes < 1)
	{
		throw ConfigError("seed_episodes must be >= 1");
	}
	if (updates < 0 || episodes < 0)
	{
		throw ConfigError("updates and episodes must be >= 0");
	}
	if (batch_size < 1 || sequence_length < 1 || batch_size * sequence_length < 2)
	{
		throw ConfigError(
			"batch_size * sequence_length must be >= 2 so contrastive negatives exist, got " +
			std::to_string(batch_size) + " * " + std::to_string(sequence_length));
	}
	if (checkpoint_every < 1)
	{
		throw ConfigError("checkpoint_every must be >= 1");
	}
}

TaskDefaults task_defaults(const envs::EnvConfig& env)
{
	if (env.task == envs::Task::reacher)
	{
		return {30, 30, 10};
	}
	if (env.grid_size == 8)
	{
		return {50, 11, 10};
	}
	return {50, 7, 6};
}

std::string to_json_line(const EpochStats& stats)
{
	json j = {
		{"iteration", stats.iteration},
		{"model_loss", stats.mean.model_loss},
		{"actor_loss", stats.mean.actor_loss},
		{"utility_loss", stats.mean.utility_loss},
		{"reward_loss", stats.mean.reward_loss},
		{"kl", stats.mean.kl},
		{"representation", stats.mean.representation},
		{"imagined_utility", stats.mean.imagined_utility},
		{"episode_return", stats.episode_return},
		{"episode_length", stats.episode_length},
		{"buffer_episodes", stats.buffer_episodes},
		{"env_steps", stats.env_steps},
		{"seconds_per_update", stats.seconds_per_update},
	};
	return j.dump();
}

EpisodeRecord random_episode(envs::Environment& env, std::mt19937_64& rng)
{
	const auto& space = env.config().action_space;
	EpisodeRecord episode;
	episode.action_dim = space.encoding_dim();
	episode.observations.push_back(env.reset());
	episode.metadata = env.metadata();
	while (!env.done())
	{
		auto action = random_action(space, rng);
		auto result = env.step_encoded(action);
		episode.observations.push_back(result.observation);
		episode.actions.insert(episode.actions.end(), action.begin(), action.end());
		episode.rewards.push_back(static_cast<float>(result.reward));
	}
	return episode;
}

ReplayBuffer seed_buffer(envs::Environment& env, int count, std::mt19937_64& rng)
{
	if (count < 1)
	{
		throw ContractError("seed_buffer needs at least one episode");
	}
	ReplayBuffer buffer;
	for (int i = 0; i < count; ++i)
	{
		buffer.add(random_episode(env, rng));
	}
	return buffer;
}

EpisodeRecord collect_episode(Agent& agent, envs::Environment& env, bool explore)
{
	const auto& space = env.config().action_space;
	EpisodeRecord episode;
	episode.action_dim = space.encoding_dim();
	episode.observations.push_back(env.reset());
	episode.metadata = env.metadata();

	auto action = torch::zeros({1, space.encoding_dim()});
	auto state = agent.observe(agent.initial_state(), action, episode.observations.back());
	while (!env.done())
	{
		action = agent.act(state, !explore);
		auto values = action.contiguous();
		std::span<const float> encoded(values.data_ptr<float>(), static_cast<std::size_t>(values.numel()));
		auto result = env.step_encoded(encoded);
		episode.observations.push_back(result.observation);
		episode.actions.insert(episode.actions.end(), encoded.begin(), encoded.end());
		episode.rewards.push_back(static_cast<float>(result.reward));
		state = agent.observe(state, action, result.observation);
	}
	return episode;
}

std::vector<double> evaluate(Agent& agent, envs::Environment& env, int count)
{
	std::vector<double> returns;
	for (int i = 0; i < count; ++i)
	{
		returns.push_back(collect_episode(agent, env, false).total_reward());
	}
	return returns;
}

Trainer::Trainer(
	const envs::EnvConfig& env_config,
	const AgentConfig& agent_config,
	const TrainConfig& train_config,
	std::optional<fs::path> run_dir)
		: env_config_(env_config), config_(train_config), run_dir_(std::move(run_dir)), rng_(train_config.seed)
{
	config_.validate();
	torch::manual_seed(config_.seed);
	env_ = envs::make_environment(env_config_, config_.seed);
	if (agent_config.kind == AgentKind::likelihood_aif && !env_->config().action_space.is_discrete())
	{
		log::warn("likelihood-aif on a continuous task backpropagates through decoded images; expect high memory use");
	}
	agent_ = std::make_unique<Agent>(agent_config, env_->config().action_space, env_->goal(agent_config.goal_prior));
	if (run_dir_)
	{
		fs::create_directories(*run_dir_ / "episodes");
		fs::create_directories(*run_dir_ / "checkpoints");
	}
}

std::optional<fs::path> Trainer::checkpoint_path() const
{
	if (!run_dir_)
	{
		return std::nullopt;
	}
	return *run_dir_ / "checkpoints" / "latest.pt";
}

void Trainer::add_episode(EpisodeRecord episode)
{
	if (run_dir_)
	{
		save_episode(episode_path(*run_dir_, buffer_.size()), episode);
	}
	buffer_.add(std::move(episode));
}

void Trainer::seed()
{
	if (seeded_)
	{
		return;
	}
	for (int i = 0; i < config_.seed_episodes; ++i)
	{
		add_episode(random_episode(*env_, rng_));
	}
	seeded_ = true;
	log::info("seeded buffer with {} random episodes ({} steps)", buffer_.size(), buffer_.total_steps());
}

EpochStats Trainer::train_iteration()
{
	seed();
	agent_->snapshot();

	EpochStats stats;
	stats.iteration = iteration_ + 1;
	const auto start = std::chrono::steady_clock::now();
	for (int u = 0; u < config_.updates; ++u)
	{
		auto batch = buffer_.sample(config_.batch_size, config_.sequence_length, rng_);
		UpdateStats update;
		try
		{
			update = agent_->update(batch);
		}
		catch (const DivergenceError& e)
		{
			dump_divergence(e.what(), batch);
			throw;
		}
		stats.mean.model_loss += update.model_loss;
		stats.mean.actor_loss += update.actor_loss;
		stats.mean.utility_loss += update.utility_loss;
		stats.mean.reward_loss += update.reward_loss;
		stats.mean.kl += update.kl;
		stats.mean.representation += update.representation;
		stats.mean.imagined_utility += update.imagined_utility;
	}
	const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
	if (config_.updates > 0)
	{
		const double n = config_.updates;
		for (double* field :
				 {&stats.mean.model_loss,
					&stats.mean.actor_loss,
					&stats.mean.utility_loss,
					&stats.mean.reward_loss,
					&stats.mean.kl,
					&stats.mean.representation,
					&stats.mean.imagined_utility})
		{
			*field /= n;
		}
		stats.seconds_per_update = elapsed / n;
	}

	auto episode = collect_episode(*agent_, *env_, true);
	stats.episode_return = episode.total_reward();
	stats.episode_length = static_cast<int>(episode.transitions());
	add_episode(std::move(episode));
	stats.buffer_episodes = buffer_.size();
	stats.env_steps = buffer_.total_steps() - buffer_.size();

	++iteration_;
	history_.push_back(stats);
	write_metrics(stats);
	return stats;
}

void Trainer::run()
{
	if (auto path = checkpoint_path(); path && fs::exists(*path))
	{
		load_checkpoint(*path);
		log::info("resumed from {} at iteration {}", path->string(), iteration_);
	}
	seed();
	if (auto path = checkpoint_path(); path && iteration_ == 0)
	{
		save_checkpoint(*path);
	}
	while (iteration_ < config_.episodes)
	{
		auto stats = train_iteration();
		log::info(
			"iteration {}/{}: return {:.3f} model {:.3f} actor {:.4f} utility {:.4f} ({:.3f}s/update)",
			stats.iteration,
			config_.episodes,
			stats.episode_return,
			stats.mean.model_loss,
			stats.mean.actor_loss,
			stats.mean.utility_loss,
			stats.seconds_per_update);
		if (auto path = checkpoint_path(); path && (iteration_ % config_.checkpoint_every == 0 || iteration_ == config_.episodes))
		{
			save_checkpoint(*path);
		}
	}
}

void Trainer::write_metrics(const EpochStats& stats) const
{
	if (!run_dir_)
	{
		return;
	}
	std::ofstream out(*run_dir_ / "metrics.jsonl", std::ios::app);
	out << to_json_line(stats) << '\n';
}

void Trainer::truncate_metrics() const
{
	// Iterations logged after the checkpoint was taken will be run again.
	const auto path = *run_dir_ / "metrics.jsonl";
	if (!fs::exists(path))
	{
		return;
	}
	std::vector<std::string> lines;
	{
		std::ifstream in(path);
		std::string line;
		while (static_cast<int>(lines.size()) < iteration_ && std::getline(in, line))
		{
			lines.push_back(line);
		}
	}
	std::ofstream out(path, std::ios::trunc);
	for (const auto& line : lines)
	{
		out << line << '\n';
	}
}

void Trainer::dump_divergence(const std::string& what, const Batch& batch) const
{
	log::error("training diverged at iteration {}: {}", iteration_ + 1, what);
	if (!run_dir_)
	{
		return;
	}
	json sequences = json::array();
	for (const auto& index : batch.index)
	{
		sequences.push_back({{"episode", index.episode}, {"start", index.start}});
	}
	json dump = {
		{"iteration", iteration_ + 1},
		{"error", what},
		{"batch", sequences},
		{"parameter_checksum", agent_->parameter_checksum()},
	};
	std::ofstream(*run_dir_ / "divergence.json") << dump.dump(2) << '\n';
	save_checkpoint(*run_dir_ / "checkpoints" / "diverged.pt");
}

void Trainer::save_checkpoint(const fs::path& path) const
{
	torch::serialize::OutputArchive archive;
	torch::serialize::OutputArchive agent_archive;
	agent_->save(agent_archive);
	archive.write("agent", agent_archive);
	archive.write("iteration", torch::tensor(static_cast<int64_t>(iteration_)));
	archive.write("seeded", torch::tensor(static_cast<int64_t>(seeded_)));
	archive.write("buffer_episodes", torch::tensor(static_cast<int64_t>(buffer_.size())));
	archive.write("sampler_rng", c10::IValue(engine_state(rng_)));
	archive.write("env_rng", c10::IValue(env_->rng_state()));
	archive.write("torch_rng", torch_rng_state());
	fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
	// Write-then-rename so an interrupted save never leaves a truncated checkpoint.
	auto tmp = path;
	tmp += ".tmp";
	archive.save_to(tmp.string());
	fs::rename(tmp, path);
}

void Trainer::load_checkpoint(const fs::path& path)
{
	if (!fs::exists(path))
	{
		throw ConfigError("checkpoint not found: " + path.string());
	}
	torch::serialize::InputArchive archive;
	archive.load_from(path.string());
	torch::serialize::InputArchive agent_archive;
	archive.read("agent", agent_archive);
	agent_->load(agent_archive);

	// Each read needs a fresh tensor: reading into one that already holds loaded storage fails.
	auto read_int = [&archive](const char* key)
	{
		torch::Tensor value;
		archive.read(key, value);
		return value.item<int64_t>();
	};
	iteration_ = static_cast<int>(read_int("iteration"));
	seeded_ = read_int("seeded") != 0;
	const auto episodes = static_cast<std::size_t>(read_int("buffer_episodes"));
	c10::IValue text;
	archive.read("sampler_rng", text);
	set_engine_state(rng_, text.toStringRef());
	archive.read("env_rng", text);
	env_->set_rng_state(text.toStringRef());
	torch::Tensor torch_rng;
	archive.read("torch_rng", torch_rng);
	set_torch_rng_state(torch_rng);

	if (run_dir_)
	{
		buffer_ = ReplayBuffer();
		for (std::size_t i = 0; i < episodes; ++i)
		{
			buffer_.add(load_episode(episode_path(*run_dir_, i)));
		}
		truncate_metrics();
	}
	else if (buffer_.size() != episodes)
	{
		log::warn("checkpoint expects {} buffered episodes but no run directory holds them", episodes);
	}
}

} // namespace caif::trainer
