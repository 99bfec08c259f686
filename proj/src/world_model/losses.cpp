#include "caif/world_model/losses.h"

#include "caif/common/errors.h"

#include <cmath>
#include <numbers>
#include <string>

namespace caif::world_model
{

torch::Tensor critic_score(const torch::Tensor& obs_embedding, const torch::Tensor& state_embedding)
{
	if (obs_embedding.sizes() != state_embedding.sizes())
	{
		throw ContractError("critic_score: embedding shapes differ");
	}
	return (obs_embedding * state_embedding).sum(-1);
}

torch::Tensor critic_scores(const torch::Tensor& state_embeddings, const torch::Tensor& obs_embeddings)
{
	if (state_embeddings.dim() != 2 || obs_embeddings.dim() != 2 || state_embeddings.size(1) != obs_embeddings.size(1))
	{
		throw ContractError("critic_scores: expected [N, d] and [K, d] embeddings");
	}
	return torch::matmul(state_embeddings, obs_embeddings.t());
}

namespace
{

/// log K for a square, non-empty score matrix.
double checked_log_k(const torch::Tensor& scores)
{
	if (scores.dim() != 2 || scores.size(0) != scores.size(1))
	{
		throw ContractError("info_nce: score matrix must be square");
	}
	if (scores.size(0) == 0)
	{
		throw ContractError("info_nce: need at least one sample");
	}
	return std::log(static_cast<double>(scores.size(0)));
}

} // namespace

torch::Tensor info_nce_terms(const torch::Tensor& scores)
{
	const double log_k = checked_log_k(scores);
	return (scores.diagonal() - torch::logsumexp(scores, 1)) + log_k;
}

torch::Tensor info_nce(const torch::Tensor& scores)
{
	// Averaging the non-positive log-ratios before adding log K keeps the result <= log K
	// in floating point, not only in exact arithmetic.
	const double log_k = checked_log_k(scores);
	return (scores.diagonal() - torch::logsumexp(scores, 1)).mean() + log_k;
}

torch::Tensor clip_free_nats(const torch::Tensor& kl, double free_nats)
{
	return torch::clamp_min(kl, free_nats);
}

PastLoss contrastive_past_loss(
	const GaussianParams& posterior,
	const GaussianParams& prior,
	const torch::Tensor& obs_embeddings,
	const torch::Tensor& state_embeddings,
	double free_nats)
{
	if (obs_embeddings.dim() != 3 || obs_embeddings.sizes() != state_embeddings.sizes())
	{
		throw ContractError("contrastive_past_loss: embeddings must both be [B, L, d]");
	}
	const int64_t batch = obs_embeddings.size(0);
	const int64_t length = obs_embeddings.size(1);
	if (batch * length < 2)
	{
		throw ContractError("contrastive_past_loss: B*L must be >= 2 so negatives exist");
	}
	auto kl = kl_gaussian(posterior, prior);
	if (kl.dim() != 2 || kl.size(0) != batch || kl.size(1) != length)
	{
		throw ContractError("contrastive_past_loss: beliefs must be [B, L, stoch]");
	}
	auto scores = critic_scores(state_embeddings.flatten(0, 1), obs_embeddings.flatten(0, 1));
	auto bound = info_nce_terms(scores).view({batch, length});
	auto per_step = clip_free_nats(kl, free_nats) - bound;

	PastLoss out;
	out.loss = per_step.sum(1).mean();
	out.kl = kl.mean().detach();
	out.fit = bound.mean().detach();
	out.negatives_per_positive = scores.size(1) - 1;
	return out;
}

torch::Tensor unit_gaussian_log_likelihood(const torch::Tensor& mean, const torch::Tensor& target, int64_t batch_dims)
{
	if (mean.sizes() != target.sizes())
	{
		throw ContractError("unit_gaussian_log_likelihood: shape mismatch");
	}
	auto sq = (mean - target).pow(2).flatten(batch_dims);
	const double dims = static_cast<double>(sq.size(-1));
	return -0.5 * sq.sum(-1) - 0.5 * dims * std::log(2.0 * std::numbers::pi);
}

PastLoss likelihood_past_loss(
	const GaussianParams& posterior,
	const GaussianParams& prior,
	const torch::Tensor& decoded,
	const torch::Tensor& targets,
	double free_nats)
{
	if (decoded.dim() < 3)
	{
		throw ContractError("likelihood_past_loss: decoded observations must be [B, L, ...]");
	}
	auto kl = kl_gaussian(posterior, prior);
	auto log_lik = unit_gaussian_log_likelihood(decoded, targets, 2);
	if (kl.sizes() != log_lik.sizes())
	{
		throw ContractError("likelihood_past_loss: beliefs and observations disagree on [B, L]");
	}
	auto per_step = clip_free_nats(kl, free_nats) - log_lik;
	PastLoss out;
	out.loss = per_step.sum(1).mean();
	out.kl = kl.mean().detach();
	out.fit = log_lik.mean().detach();
	return out;
}

torch::Tensor reward_loss(const torch::Tensor& predicted, const torch::Tensor& observed)
{
	if (predicted.sizes() != observed.sizes() || predicted.dim() != 2)
	{
		throw ContractError("reward_loss: predicted and observed rewards must both be [B, L]");
	}
	auto nll = 0.5 * (predicted - observed).pow(2) + 0.5 * std::log(2.0 * std::numbers::pi);
	return nll.sum(1).mean();
}

} // namespace caif::world_model
