#pragma once

#include "caif/envs/observation.h"
#include "caif/world_model/architecture.h"
#include "caif/world_model/gaussian.h"

#include <torch/torch.h>

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace caif::world_model
{

/// Recurrent memory h plus the stochastic sample z and the distribution it was drawn from.
struct LatentState
{
	torch::Tensor h;
	torch::Tensor z;
	GaussianParams dist;

	/// Concatenation [h, z], the input of every head that reads the full state.
	torch::Tensor features() const { return torch::cat({h, z}, -1); }
	LatentState detach() const { return {h.detach(), z.detach(), dist.detach()}; }
	LatentState reshape(at::IntArrayRef batch_shape) const;
};

/// Output of one recurrent step: the advanced memory and the belief computed from it.
struct Belief
{
	torch::Tensor h;
	GaussianParams dist;
};

struct WorldModelOptions
{
	ArchitectureSpec arch;
	int action_dim = 1;
	bool critic = true;
	bool decoder = false;
	bool reward_head = false;
};

/// Posterior states and matching priors for a [B, L] batch of sequences.
struct SequenceInference
{
	LatentState posterior;
	GaussianParams prior;
	// Encoder features of every observation, [B, L, feature_dim].
	torch::Tensor obs_features;
};

/// 8-bit observations to a float tensor [N, 3, 64, 64] normalized to [-0.5, 0.5].
torch::Tensor observations_to_tensor(std::span<const envs::Observation> observations);
/// Normalized [3, 64, 64] tensor back to an 8-bit image (values clamped).
envs::Observation tensor_to_observation(const torch::Tensor& image);

class WorldModelImpl : public torch::nn::Module
{
public:
	explicit WorldModelImpl(const WorldModelOptions& options);

	const WorldModelOptions& options() const { return options_; }
	bool has_critic() const { return options_.critic; }
	bool has_decoder() const { return options_.decoder; }
	bool has_reward_head() const { return options_.reward_head; }

	/// Zero memory and zero sample for `n` parallel sequences.
	LatentState initial_state(int64_t n) const;

	/// Convolutional features of normalized observations [N, 3, 64, 64] -> [N, feature_dim].
	torch::Tensor encode(const torch::Tensor& observations);

	/// Advances the shared recurrent memory and returns the prior belief over the next state.
	Belief prior_predict(const LatentState& prev, const torch::Tensor& action);
	/// Same recurrent step, with the belief additionally conditioned on observation features.
	Belief posterior_infer(const LatentState& prev, const torch::Tensor& action, const torch::Tensor& obs_features);
	/// Posterior belief from an already advanced memory.
	GaussianParams posterior_from_memory(const torch::Tensor& h, const torch::Tensor& obs_features);
	static LatentState sample_state(const Belief& belief, const std::optional<torch::Tensor>& noise = std::nullopt);

	/// Filters a batch of sequences. `observations` is [B, L, 3, 64, 64], `prev_actions` [B, L, A]
	/// holds the action that preceded each observation (zeros at episode start).
	SequenceInference observe(const torch::Tensor& observations, const torch::Tensor& prev_actions);

	/// Critic embedders, both squashed to (-1, 1) per coordinate.
	torch::Tensor obs_embedding(const torch::Tensor& obs_features);
	torch::Tensor state_embedding(const torch::Tensor& z);

	/// Mean of the unit-variance pixel likelihood, [N, 3, 64, 64] in normalized units.
	torch::Tensor decode(const torch::Tensor& latent_features);
	/// Mean of the unit-variance reward likelihood, [N].
	torch::Tensor predict_reward(const torch::Tensor& latent_features);

	torch::nn::Sequential& encoder() { return encoder_; }

private:
	torch::Tensor advance(const LatentState& prev, const torch::Tensor& action);
	void require(bool present, const char* what) const;

	WorldModelOptions options_;
	torch::nn::Sequential encoder_{nullptr};
	torch::nn::Linear transition_in_{nullptr};
	torch::nn::GRUCell cell_{nullptr};
	torch::nn::Sequential prior_head_{nullptr};
	torch::nn::Sequential posterior_head_{nullptr};
	torch::nn::Sequential obs_embedder_{nullptr};
	torch::nn::Sequential state_embedder_{nullptr};
	torch::nn::Linear decoder_in_{nullptr};
	torch::nn::Sequential decoder_{nullptr};
	torch::nn::Sequential reward_head_{nullptr};
};
TORCH_MODULE(WorldModel);

/// Action sampled by a policy at an imagined state.
struct PolicyStep
{
	torch::Tensor action;
	torch::Tensor log_prob;
	torch::Tensor entropy;
};

using PolicyFn = std::function<PolicyStep(const LatentState&)>;

/// States s_0..s_H (s_0 is the start) and the H actions that produced them, stacked along dim 0.
struct ImaginedRollout
{
	torch::Tensor h;
	torch::Tensor z;
	GaussianParams dist;
	torch::Tensor actions;
	torch::Tensor log_probs;
	torch::Tensor entropies;

	int horizon() const { return static_cast<int>(actions.size(0)); }
	torch::Tensor features() const { return torch::cat({h, z}, -1); }
};

/// Rolls the prior forward `horizon` steps from `start`, sampling actions from `policy`.
/// Gradients flow through states and, when the policy is reparameterized, through actions.
ImaginedRollout imagine(WorldModelImpl& model, const LatentState& start, const PolicyFn& policy, int horizon);

} // namespace caif::world_model
