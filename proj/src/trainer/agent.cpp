#include "caif/trainer/agent.h"

#include "caif/common/errors.h"
#include "caif/common/log.h"
#include "caif/world_model/losses.h"

#include <cmath>

namespace caif::trainer
{

namespace
{

constexpr int64_t kCheckpointVersion = 1;

/// Turns off parameter gradients of a module for the lifetime of the guard.
class FreezeGuard
{
public:
	explicit FreezeGuard(torch::nn::Module& module)
	{
		for (auto& p : module.parameters())
		{
			if (p.requires_grad())
			{
				p.set_requires_grad(false);
				frozen_.push_back(p);
			}
		}
	}
	~FreezeGuard()
	{
		for (auto& p : frozen_)
		{
			p.set_requires_grad(true);
		}
	}
	FreezeGuard(const FreezeGuard&) = delete;
	FreezeGuard& operator=(const FreezeGuard&) = delete;

private:
	std::vector<torch::Tensor> frozen_;
};

void check_finite(const torch::Tensor& loss, const char* name)
{
	if (!std::isfinite(loss.item<double>()))
	{
		throw DivergenceError(std::string("non-finite ") + name + " loss");
	}
}

void optimize(torch::optim::Adam& optimizer, const torch::Tensor& loss, double clip)
{
	optimizer.zero_grad();
	loss.backward();
	for (auto& group : optimizer.param_groups())
	{
		torch::nn::utils::clip_grad_norm_(group.params(), clip);
	}
	optimizer.step();
}

std::unique_ptr<torch::optim::Adam> make_adam(const std::vector<torch::Tensor>& params, double lr, double eps)
{
	return std::make_unique<torch::optim::Adam>(params, torch::optim::AdamOptions(lr).eps(eps));
}

torch::Tensor arch_fingerprint(const world_model::ArchitectureSpec& arch, int action_dim)
{
	std::vector<int64_t> values = {
		arch.stoch, arch.deter, arch.hidden, arch.embed, arch.kernel, arch.stride, arch.image, arch.image_channels, action_dim};
	values.insert(values.end(), arch.channels.begin(), arch.channels.end());
	return torch::tensor(values, torch::kInt64);
}

} // namespace

std::string to_string(AgentKind kind)
{
	switch (kind)
	{
		case AgentKind::dreamer: return "dreamer";
		case AgentKind::contrastive_dreamer: return "contrastive-dreamer";
		case AgentKind::likelihood_aif: return "likelihood-aif";
		case AgentKind::contrastive_aif: return "contrastive-aif";
	}
	return "unknown";
}

AgentKind parse_agent_kind(const std::string& name)
{
	for (auto kind :
			 {AgentKind::dreamer, AgentKind::contrastive_dreamer, AgentKind::likelihood_aif, AgentKind::contrastive_aif})
	{
		if (to_string(kind) == name)
		{
			return kind;
		}
	}
	throw ConfigError(
		"unknown agent_kind '" + name + "' (expected dreamer, contrastive-dreamer, likelihood-aif or contrastive-aif)");
}

ModelComponents components_for(AgentKind kind)
{
	switch (kind)
	{
		case AgentKind::dreamer: return {false, true, true};
		case AgentKind::contrastive_dreamer: return {true, false, true};
		case AgentKind::likelihood_aif: return {false, true, false};
		case AgentKind::contrastive_aif: return {true, false, false};
	}
	return {};
}

bool uses_contrastive_past(AgentKind kind)
{
	return components_for(kind).critic;
}

void AgentConfig::validate() const
{
	arch.validate();
	returns.validate();
	if (!(model_lr > 0.0) || !(behavior_lr > 0.0) || !(adam_eps > 0.0))
	{
		throw ConfigError("learning rates and adam_eps must be positive");
	}
	if (!(grad_clip > 0.0))
	{
		throw ConfigError("grad_clip must be positive");
	}
	if (free_nats < 0.0)
	{
		throw ConfigError("free_nats must be non-negative");
	}
	if (include_intrinsic && kind != AgentKind::likelihood_aif)
	{
		throw ConfigError("include_intrinsic only applies to likelihood-aif");
	}
}

Agent::Agent(const AgentConfig& config, const envs::ActionSpace& action_space, const envs::GoalSpec& goal)
		: config_(config), action_space_(action_space), goal_(goal)
{
	config_.validate();
	const auto parts = components_for(config_.kind);
	world_model::WorldModelOptions options;
	options.arch = config_.arch;
	options.action_dim = action_space_.encoding_dim();
	options.critic = parts.critic;
	options.decoder = parts.decoder;
	options.reward_head = parts.reward_head;
	world_model_ = world_model::WorldModel(options);

	const int latent = config_.arch.latent_dim();
	actor_ = behavior::ActionModel(latent, config_.arch.hidden, action_space_, config_.arch.min_std);
	utility_ = behavior::UtilityModel(latent, config_.arch.hidden);
	frozen_utility_ = behavior::UtilityModel(latent, config_.arch.hidden);
	for (auto& p : frozen_utility_->parameters())
	{
		p.set_requires_grad(false);
	}
	snapshot();

	goal_image_ = world_model::observations_to_tensor(std::span(&goal_.image, 1))[0];

	model_optimizer_ = make_adam(world_model_->parameters(), config_.model_lr, config_.adam_eps);
	actor_optimizer_ = make_adam(actor_->parameters(), config_.behavior_lr, config_.adam_eps);
	utility_optimizer_ = make_adam(utility_->parameters(), config_.behavior_lr, config_.adam_eps);
}

void Agent::snapshot()
{
	behavior::copy_parameters(*frozen_utility_, *utility_);
}

torch::Tensor Agent::planning_utilities(
	const world_model::ImaginedRollout& rollout, const torch::Tensor& goal_embedding, const torch::Tensor& negative_embeddings)
{
	const int horizon = rollout.horizon();
	auto h = rollout.h.slice(0, 0, horizon);
	auto z = rollout.z.slice(0, 0, horizon);
	const auto& entropy = rollout.entropies;
	const double scale = config_.returns.entropy_scale;
	const int64_t n = h.size(1);

	switch (config_.kind)
	{
		case AgentKind::contrastive_aif:
		{
			auto states = world_model_->state_embedding(z.flatten(0, 1));
			return behavior::step_utility_gnce(
							 states, goal_embedding, negative_embeddings, entropy.flatten(0, 1), scale)
				.view({horizon, n});
		}
		case AgentKind::likelihood_aif:
		{
			// Discrete policies learn from score-function gradients, so the decoded futures need no graph.
			std::optional<torch::NoGradGuard> no_grad;
			if (action_space_.is_discrete())
			{
				no_grad.emplace();
			}
			auto features = torch::cat({h, z}, -1).flatten(0, 1);
			auto decoded = world_model_->decode(features);
			std::optional<torch::Tensor> intrinsic;
			if (config_.include_intrinsic)
			{
				auto reencoded = world_model_->encode(decoded);
				auto posterior = world_model_->posterior_from_memory(h.flatten(0, 1), reencoded);
				auto prior = world_model::GaussianParams{
					rollout.dist.mean.slice(0, 0, horizon).flatten(0, 1), rollout.dist.stddev.slice(0, 0, horizon).flatten(0, 1)};
				intrinsic = world_model::kl_gaussian(posterior, prior);
			}
			auto utilities = behavior::step_utility_gaif(
				decoded, goal_image_, config_.goal_prior, intrinsic, entropy.flatten(0, 1).detach(), 0.0);
			// The entropy term keeps its graph even when the extrinsic term has none.
			return (utilities.view({horizon, n}) - scale * entropy);
		}
		case AgentKind::dreamer:
		case AgentKind::contrastive_dreamer:
		{
			auto reward = world_model_->predict_reward(torch::cat({h, z}, -1));
			return behavior::step_utility_grl(reward, entropy, scale);
		}
	}
	throw ContractError("unhandled agent kind");
}

UpdateStats Agent::update(const Batch& batch)
{
	const int64_t b = batch.batch_size();
	const int64_t l = batch.length();
	if (b * l < 2)
	{
		throw ContractError("update needs B*L >= 2");
	}
	UpdateStats stats;
	world_model_->train();

	// Model phase.
	auto inference = world_model_->observe(batch.observations, batch.prev_actions);
	torch::Tensor model_loss;
	torch::Tensor negative_embeddings;
	torch::Tensor goal_embedding;
	if (uses_contrastive_past(config_.kind))
	{
		auto obs_emb = world_model_->obs_embedding(inference.obs_features);
		auto state_emb = world_model_->state_embedding(inference.posterior.z);
		auto past = world_model::contrastive_past_loss(
			inference.posterior.dist, inference.prior, obs_emb, state_emb, config_.free_nats);
		model_loss = past.loss;
		stats.kl = past.kl.item<double>();
		stats.representation = past.fit.item<double>();
		if (config_.kind == AgentKind::contrastive_aif)
		{
			negative_embeddings = obs_emb.flatten(0, 1).detach();
			torch::NoGradGuard no_grad;
			goal_embedding = world_model_->obs_embedding(world_model_->encode(goal_image_.unsqueeze(0)))[0];
		}
	}
	else
	{
		auto decoded = world_model_->decode(inference.posterior.features().flatten(0, 1)).view_as(batch.observations);
		auto past = world_model::likelihood_past_loss(
			inference.posterior.dist, inference.prior, decoded, batch.observations, config_.free_nats);
		model_loss = past.loss;
		stats.kl = past.kl.item<double>();
		stats.representation = past.fit.item<double>();
	}
	if (world_model_->has_reward_head())
	{
		auto reward = world_model::reward_loss(world_model_->predict_reward(inference.posterior.features()), batch.rewards);
		stats.reward_loss = reward.item<double>();
		model_loss = model_loss + reward;
	}
	check_finite(model_loss, "model");
	stats.model_loss = model_loss.item<double>();
	optimize(*model_optimizer_, model_loss, config_.grad_clip);

	// Behavior phase: one imagined rollout from every posterior state, world model held fixed.
	FreezeGuard freeze(*world_model_);
	auto start = inference.posterior.detach().reshape({b * l});
	auto policy = [this](const world_model::LatentState& state) {
		auto dist = actor_->forward(state.features());
		return dist.sample();
	};
	auto rollout = world_model::imagine(*world_model_, start, policy, config_.returns.horizon);
	const int horizon = rollout.horizon();

	auto step_utilities = planning_utilities(rollout, goal_embedding, negative_embeddings);
	// The final state only bootstraps; its own utility is carried by the value.
	auto utilities = torch::cat({step_utilities, torch::zeros_like(step_utilities[0]).unsqueeze(0)});
	auto values = frozen_utility_->forward(rollout.features());
	auto returns = behavior::lambda_returns(utilities, values, config_.returns.gamma, config_.returns.lambda);
	auto targets = returns.slice(0, 0, horizon);
	stats.imagined_utility = step_utilities.mean().item<double>();

	torch::Tensor actor_loss;
	if (action_space_.is_discrete())
	{
		actor_loss = behavior::actor_loss_reinforce(targets, values.slice(0, 0, horizon), rollout.log_probs);
	}
	else
	{
		actor_loss = behavior::actor_loss_pathwise(targets);
	}
	check_finite(actor_loss, "actor");
	stats.actor_loss = actor_loss.item<double>();
	optimize(*actor_optimizer_, actor_loss, config_.grad_clip);

	auto predicted = utility_->forward(rollout.features().slice(0, 0, horizon).detach());
	auto utility_loss = behavior::utility_net_loss(predicted, targets.detach());
	check_finite(utility_loss, "utility");
	stats.utility_loss = utility_loss.item<double>();
	optimize(*utility_optimizer_, utility_loss, config_.grad_clip);
	return stats;
}

world_model::LatentState Agent::initial_state()
{
	return world_model_->initial_state(1);
}

world_model::LatentState Agent::observe(
	const world_model::LatentState& prev, const torch::Tensor& prev_action, const envs::Observation& obs, bool sample)
{
	torch::NoGradGuard no_grad;
	auto features = world_model_->encode(world_model::observations_to_tensor(std::span(&obs, 1)));
	auto belief = world_model_->posterior_infer(prev, prev_action, features);
	if (sample)
	{
		return world_model::WorldModelImpl::sample_state(belief);
	}
	return {belief.h, belief.dist.mean, belief.dist};
}

torch::Tensor Agent::act(const world_model::LatentState& state, bool deterministic)
{
	torch::NoGradGuard no_grad;
	auto dist = actor_->forward(state.features());
	return deterministic ? dist.mode() : dist.sample().action;
}

torch::Tensor Agent::step_utility(const world_model::LatentState& states, const torch::Tensor& negative_features)
{
	torch::NoGradGuard no_grad;
	auto dist = actor_->forward(states.features());
	auto entropy = dist.discrete ? dist.entropy() : dist.sample().entropy;
	const double scale = config_.returns.entropy_scale;
	switch (config_.kind)
	{
		case AgentKind::contrastive_aif:
		{
			if (!negative_features.defined() || negative_features.size(0) < 1)
			{
				throw ContractError("contrastive step utility needs negative observations");
			}
			auto goal = world_model_->obs_embedding(world_model_->encode(goal_image_.unsqueeze(0)))[0];
			auto negatives = world_model_->obs_embedding(negative_features);
			return behavior::step_utility_gnce(world_model_->state_embedding(states.z), goal, negatives, entropy, scale);
		}
		case AgentKind::likelihood_aif:
		{
			auto decoded = world_model_->decode(states.features());
			std::optional<torch::Tensor> intrinsic;
			if (config_.include_intrinsic)
			{
				auto posterior = world_model_->posterior_from_memory(states.h, world_model_->encode(decoded));
				intrinsic = world_model::kl_gaussian(posterior, states.dist);
			}
			return behavior::step_utility_gaif(decoded, goal_image_, config_.goal_prior, intrinsic, entropy, scale);
		}
		case AgentKind::dreamer:
		case AgentKind::contrastive_dreamer:
			return behavior::step_utility_grl(world_model_->predict_reward(states.features()), entropy, scale);
	}
	throw ContractError("unhandled agent kind");
}

double Agent::parameter_checksum()
{
	torch::NoGradGuard no_grad;
	double total = 0.0;
	for (auto* module : std::initializer_list<torch::nn::Module*>{
				 world_model_.get(), actor_.get(), utility_.get(), frozen_utility_.get()})
	{
		for (const auto& p : module->parameters())
		{
			total += p.to(torch::kFloat64).sum().item<double>();
		}
	}
	return total;
}

void Agent::save(torch::serialize::OutputArchive& archive) const
{
	archive.write("version", torch::tensor(kCheckpointVersion));
	archive.write("kind", c10::IValue(to_string(config_.kind)));
	archive.write("fingerprint", arch_fingerprint(config_.arch, action_space_.encoding_dim()));
	auto write_module = [&](const char* key, const torch::nn::Module& module) {
		torch::serialize::OutputArchive sub;
		module.save(sub);
		archive.write(key, sub);
	};
	auto write_optimizer = [&](const char* key, const torch::optim::Optimizer& optimizer) {
		torch::serialize::OutputArchive sub;
		optimizer.save(sub);
		archive.write(key, sub);
	};
	write_module("world_model", *world_model_);
	write_module("actor", *actor_);
	write_module("utility", *utility_);
	write_module("frozen_utility", *frozen_utility_);
	write_optimizer("model_optimizer", *model_optimizer_);
	write_optimizer("actor_optimizer", *actor_optimizer_);
	write_optimizer("utility_optimizer", *utility_optimizer_);
}

void Agent::load(torch::serialize::InputArchive& archive)
{
	torch::Tensor version;
	archive.read("version", version);
	if (version.item<int64_t>() != kCheckpointVersion)
	{
		throw ConfigError("unsupported checkpoint version " + std::to_string(version.item<int64_t>()));
	}
	c10::IValue kind;
	archive.read("kind", kind);
	if (kind.toStringRef() != to_string(config_.kind))
	{
		throw ConfigError(
			"checkpoint holds a " + kind.toStringRef() + " agent but the configuration asks for " + to_string(config_.kind));
	}
	torch::Tensor fingerprint;
	archive.read("fingerprint", fingerprint);
	if (!torch::equal(fingerprint, arch_fingerprint(config_.arch, action_space_.encoding_dim())))
	{
		throw ConfigError("checkpoint architecture or action space does not match the configuration");
	}
	auto read_module = [&](const char* key, torch::nn::Module& module) {
		torch::serialize::InputArchive sub;
		archive.read(key, sub);
		module.load(sub);
	};
	auto read_optimizer = [&](const char* key, torch::optim::Optimizer& optimizer) {
		torch::serialize::InputArchive sub;
		archive.read(key, sub);
		optimizer.load(sub);
	};
	read_module("world_model", *world_model_);
	read_module("actor", *actor_);
	read_module("utility", *utility_);
	read_module("frozen_utility", *frozen_utility_);
	for (auto& p : frozen_utility_->parameters())
	{
		p.set_requires_grad(false);
	}
	read_optimizer("model_optimizer", *model_optimizer_);
	read_optimizer("actor_optimizer", *actor_optimizer_);
	read_optimizer("utility_optimizer", *utility_optimizer_);
	log::debug("loaded {} agent", to_string(config_.kind));
}

} // namespace caif::trainer
