#pragma once

#include "caif/envs/goal.h"

#include <torch/torch.h>

#include <optional>

namespace caif::behavior
{

inline constexpr double kDefaultEntropyScale = 3e-4;

struct ReturnConfig
{
	double gamma = 0.99;
	double lambda = 0.95;
	int horizon = 6;
	double entropy_scale = kDefaultEntropyScale;

	void validate() const;
	bool operator==(const ReturnConfig&) const = default;
};

/// Contrastive expected-free-energy step utility (lower is better):
/// -f(goal, s) + log((1/K) sum_j exp f(o_j, s)) - entropy_scale * H(q(a|s)).
/// `state_embeddings` [N, d], `goal_embedding` [d], `negative_embeddings` [K, d], `entropy` [N].
torch::Tensor step_utility_gnce(
	const torch::Tensor& state_embeddings,
	const torch::Tensor& goal_embedding,
	const torch::Tensor& negative_embeddings,
	const torch::Tensor& entropy,
	double entropy_scale);

/// Per-image log-density of normalized images [N, C, H, W] under the goal prior centred on `goal` [C, H, W].
torch::Tensor goal_log_density(
	const torch::Tensor& images, const torch::Tensor& goal, envs::GoalPrior prior, double scale = 1.0);

/// Likelihood expected-free-energy step utility (lower is better):
/// -log p~(decoded mean) - intrinsic - entropy_scale * H(q(a|s)). `intrinsic` is the information-gain KL.
torch::Tensor step_utility_gaif(
	const torch::Tensor& decoded_mean,
	const torch::Tensor& goal,
	envs::GoalPrior prior,
	const std::optional<torch::Tensor>& intrinsic,
	const torch::Tensor& entropy,
	double entropy_scale);

/// Reward-based step utility: -predicted reward - entropy_scale * H(q(a|s)).
torch::Tensor step_utility_grl(const torch::Tensor& predicted_reward, const torch::Tensor& entropy, double entropy_scale);

/// Backward lambda-return recursion over dim 0 (length T):
/// G_{T-1} = v_{T-1};  G_t = U_t + gamma * ((1 - lambda) * v_{t+1} + lambda * G_{t+1}).
torch::Tensor lambda_returns(const torch::Tensor& utilities, const torch::Tensor& values, double gamma, double lambda);

/// Score-function actor loss, mean over rollouts of sum_t (G_t - baseline_t) * log q(a_t|s_t),
/// with returns and baseline held constant. Tensors are [T, N].
torch::Tensor actor_loss_reinforce(
	const torch::Tensor& returns, const torch::Tensor& baseline, const torch::Tensor& log_probs);

/// Pathwise actor loss: mean over rollouts of sum_t G_t, gradients flowing through the returns.
torch::Tensor actor_loss_pathwise(const torch::Tensor& returns);

/// Mean squared error between predicted utilities and (constant) return targets.
torch::Tensor utility_net_loss(const torch::Tensor& predicted, const torch::Tensor& returns);

} // namespace caif::behavior
