#include "caif/behavior/objectives.h"

#include "caif/common/errors.h"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace caif::behavior
{

void ReturnConfig::validate() const
{
	if (!(gamma > 0.0 && gamma < 1.0) || !(lambda > 0.0 && lambda < 1.0))
	{
		throw ConfigError("gamma and lambda must lie in (0, 1)");
	}
	if (horizon < 1)
	{
		throw ConfigError("imagination horizon must be >= 1, got " + std::to_string(horizon));
	}
	if (entropy_scale < 0.0)
	{
		throw ConfigError("entropy_scale must be non-negative");
	}
}

torch::Tensor step_utility_gnce(
	const torch::Tensor& state_embeddings,
	const torch::Tensor& goal_embedding,
	const torch::Tensor& negative_embeddings,
	const torch::Tensor& entropy,
	double entropy_scale)
{
	if (negative_embeddings.dim() != 2 || negative_embeddings.size(0) < 1)
	{
		throw ContractError("step_utility_gnce: need at least one negative observation");
	}
	if (state_embeddings.dim() != 2 || goal_embedding.dim() != 1 ||
			state_embeddings.size(1) != goal_embedding.size(0) || negative_embeddings.size(1) != goal_embedding.size(0))
	{
		throw ContractError("step_utility_gnce: embedding widths disagree");
	}
	const double k = static_cast<double>(negative_embeddings.size(0));
	auto positive = torch::matmul(state_embeddings, goal_embedding);
	auto contrast = torch::logsumexp(torch::matmul(state_embeddings, negative_embeddings.t()), 1) - std::log(k);
	return -positive + contrast - entropy_scale * entropy;
}

torch::Tensor goal_log_density(const torch::Tensor& images, const torch::Tensor& goal, envs::GoalPrior prior, double scale)
{
	if (images.dim() != goal.dim() + 1 || images[0].sizes() != goal.sizes())
	{
		throw ContractError("goal_log_density: image and goal shapes disagree");
	}
	auto diff = (images - goal.unsqueeze(0)).flatten(1) / scale;
	const double dims = static_cast<double>(diff.size(1));
	if (prior == envs::GoalPrior::laplace)
	{
		return -diff.abs().sum(1) - dims * std::log(2.0 * scale);
	}
	return -0.5 * diff.pow(2).sum(1) - 0.5 * dims * std::log(2.0 * std::numbers::pi * scale * scale);
}

torch::Tensor step_utility_gaif(
	const torch::Tensor& decoded_mean,
	const torch::Tensor& goal,
	envs::GoalPrior prior,
	const std::optional<torch::Tensor>& intrinsic,
	const torch::Tensor& entropy,
	double entropy_scale)
{
	auto utility = -goal_log_density(decoded_mean, goal, prior) - entropy_scale * entropy;
	if (intrinsic)
	{
		utility = utility - *intrinsic;
	}
	return utility;
}

torch::Tensor step_utility_grl(const torch::Tensor& predicted_reward, const torch::Tensor& entropy, double entropy_scale)
{
	return -predicted_reward - entropy_scale * entropy;
}

torch::Tensor lambda_returns(const torch::Tensor& utilities, const torch::Tensor& values, double gamma, double lambda)
{
	if (utilities.sizes() != values.sizes() || utilities.dim() < 1 || utilities.size(0) < 1)
	{
		throw ContractError("lambda_returns: utilities and values must share a non-empty shape");
	}
	const int64_t length = utilities.size(0);
	std::vector<torch::Tensor> returns(length);
	returns[length - 1] = values[length - 1];
	for (int64_t t = length - 2; t >= 0; --t)
	{
		returns[t] = utilities[t] + gamma * ((1.0 - lambda) * values[t + 1] + lambda * returns[t + 1]);
	}
	return torch::stack(returns);
}

torch::Tensor actor_loss_reinforce(const torch::Tensor& returns, const torch::Tensor& baseline, const torch::Tensor& log_probs)
{
	if (returns.sizes() != baseline.sizes() || returns.sizes() != log_probs.sizes() || returns.dim() != 2)
	{
		throw ContractError("actor_loss_reinforce: returns, baseline and log-probs must all be [T, N]");
	}
	auto advantage = (returns - baseline).detach();
	return (advantage * log_probs).sum(0).mean();
}

torch::Tensor actor_loss_pathwise(const torch::Tensor& returns)
{
	if (returns.dim() != 2)
	{
		throw ContractError("actor_loss_pathwise: returns must be [T, N]");
	}
	return returns.sum(0).mean();
}

torch::Tensor utility_net_loss(const torch::Tensor& predicted, const torch::Tensor& returns)
{
	if (predicted.sizes() != returns.sizes())
	{
		throw ContractError("utility_net_loss: prediction and target shapes differ");
	}
	return (predicted - returns.detach()).pow(2).mean();
}

} // namespace caif::behavior
