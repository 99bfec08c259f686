#pragma once

#include "caif/world_model/gaussian.h"

#include <torch/torch.h>

namespace caif::world_model
{

inline constexpr double kDefaultFreeNats = 3.0;

/// f(o, s) = h(o)^T g(s) over the last dimension.
torch::Tensor critic_score(const torch::Tensor& obs_embedding, const torch::Tensor& state_embedding);

/// Score matrix S[i][j] = f(o_j, s_i) for state embeddings [N, d] and observation embeddings [K, d].
torch::Tensor critic_scores(const torch::Tensor& state_embeddings, const torch::Tensor& obs_embeddings);

/// Per-row NCE terms S[i][i] - log((1/K) sum_j exp S[i][j]) of a square score matrix.
torch::Tensor info_nce_terms(const torch::Tensor& scores);

/// Mean of info_nce_terms: the NCE lower bound on mutual information, never above log K.
torch::Tensor info_nce(const torch::Tensor& scores);

/// KL floored at `free_nats`; no gradient reaches the KL while it is below the floor.
torch::Tensor clip_free_nats(const torch::Tensor& kl, double free_nats);

struct PastLoss
{
	// Sum over steps, mean over sequences.
	torch::Tensor loss;
	// Raw (unclipped) KL per step, mean over the batch.
	torch::Tensor kl;
	// Contrastive: mean NCE bound. Likelihood: mean log-likelihood per step.
	torch::Tensor fit;
	int64_t negatives_per_positive = 0;
};

/// Contrastive free energy of the past over a [B, L] batch: every (o_t, s_t) pair is scored
/// against all B*L batch observations, so each positive has B*L - 1 negatives.
PastLoss contrastive_past_loss(
	const GaussianParams& posterior,
	const GaussianParams& prior,
	const torch::Tensor& obs_embeddings,
	const torch::Tensor& state_embeddings,
	double free_nats = kDefaultFreeNats);

/// log N(target; mean, I) summed over all trailing dimensions after the first `batch_dims`.
torch::Tensor unit_gaussian_log_likelihood(const torch::Tensor& mean, const torch::Tensor& target, int64_t batch_dims);

/// Likelihood free energy: clipped KL minus log-likelihood of the observation under a
/// unit-variance Gaussian centred on the decoded mean. `decoded`/`targets` are [B, L, C, H, W].
PastLoss likelihood_past_loss(
	const GaussianParams& posterior,
	const GaussianParams& prior,
	const torch::Tensor& decoded,
	const torch::Tensor& targets,
	double free_nats = kDefaultFreeNats);

/// Unit-variance Gaussian negative log-likelihood of [B, L] rewards, summed over steps, mean over sequences.
torch::Tensor reward_loss(const torch::Tensor& predicted, const torch::Tensor& observed);

} // namespace caif::world_model
