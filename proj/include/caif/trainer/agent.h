#pragma once

#include "caif/behavior/objectives.h"
#include "caif/behavior/policy.h"
#include "caif/envs/environment.h"
#include "caif/trainer/replay_buffer.h"
#include "caif/world_model/world_model.h"

#include <torch/torch.h>

#include <memory>
#include <optional>
#include <string>

namespace caif::trainer
{

/// The four agent flavors; each fixes the (model, actor, utility) loss triple.
enum class AgentKind
{
	dreamer,
	contrastive_dreamer,
	likelihood_aif,
	contrastive_aif,
};

std::string to_string(AgentKind kind);
/// Accepts "dreamer", "contrastive-dreamer", "likelihood-aif", "contrastive-aif".
AgentKind parse_agent_kind(const std::string& name);

/// Which world-model heads an agent kind builds.
struct ModelComponents
{
	bool critic = false;
	bool decoder = false;
	bool reward_head = false;
};
ModelComponents components_for(AgentKind kind);
/// True for kinds whose planning utility is the contrastive one, false for G_AIF and G_RL.
bool uses_contrastive_past(AgentKind kind);

struct AgentConfig
{
	AgentKind kind = AgentKind::contrastive_aif;
	world_model::ArchitectureSpec arch;
	behavior::ReturnConfig returns;
	double model_lr = 6e-4;
	double behavior_lr = 8e-5;
	double adam_eps = 1e-5;
	double grad_clip = 100.0;
	double free_nats = 3.0;
	bool include_intrinsic = false;
	envs::GoalPrior goal_prior = envs::GoalPrior::laplace;

	void validate() const;
};

/// Mean losses of one update.
struct UpdateStats
{
	double model_loss = 0.0;
	double actor_loss = 0.0;
	double utility_loss = 0.0;
	double reward_loss = 0.0;
	double kl = 0.0;
	// InfoNCE bound (contrastive) or per-step observation log-likelihood (likelihood).
	double representation = 0.0;
	double imagined_utility = 0.0;
};

/// World model plus behavior model with their optimizers.
class Agent
{
public:
	Agent(const AgentConfig& config, const envs::ActionSpace& action_space, const envs::GoalSpec& goal);

	const AgentConfig& config() const { return config_; }
	AgentKind kind() const { return config_.kind; }
	const envs::ActionSpace& action_space() const { return action_space_; }
	const envs::GoalSpec& goal() const { return goal_; }

	/// One update per Algorithm step: model, imagination from every posterior state, actor, utility.
	UpdateStats update(const Batch& batch);
	/// Refreshes the frozen utility network used for return targets and baselines.
	void snapshot();

	world_model::LatentState initial_state();
	/// Filtering step during interaction: advance the posterior with the action taken and the new observation.
	world_model::LatentState observe(
		const world_model::LatentState& prev, const torch::Tensor& prev_action, const envs::Observation& obs, bool sample = true);
	/// Encoded action [1, A] for the current posterior state.
	torch::Tensor act(const world_model::LatentState& state, bool deterministic);

	/// Step utility (expected free energy contribution, lower is better) of each state in [N].
	/// `negative_features` are encoder features of contrastive negatives (ignored for other kinds).
	torch::Tensor step_utility(const world_model::LatentState& states, const torch::Tensor& negative_features);

	world_model::WorldModel& world_model() { return world_model_; }
	behavior::ActionModel& actor() { return actor_; }
	behavior::UtilityModel& utility() { return utility_; }
	behavior::UtilityModel& frozen_utility() { return frozen_utility_; }

	/// Sum of all parameter values, for cheap "was anything modified" checks.
	double parameter_checksum();

	void save(torch::serialize::OutputArchive& archive) const;
	void load(torch::serialize::InputArchive& archive);

private:
	torch::Tensor planning_utilities(
		const world_model::ImaginedRollout& rollout,
		const torch::Tensor& goal_embedding,
		const torch::Tensor& negative_embeddings);

	AgentConfig config_;
	envs::ActionSpace action_space_;
	envs::GoalSpec goal_;
	torch::Tensor goal_image_;
	world_model::WorldModel world_model_{nullptr};
	behavior::ActionModel actor_{nullptr};
	behavior::UtilityModel utility_{nullptr};
	behavior::UtilityModel frozen_utility_{nullptr};
	std::unique_ptr<torch::optim::Adam> model_optimizer_;
	std::unique_ptr<torch::optim::Adam> actor_optimizer_;
	std::unique_ptr<torch::optim::Adam> utility_optimizer_;
};

} // namespace caif::trainer
