#pragma once

#include "caif/envs/environment.h"
#include "caif/world_model/world_model.h"

#include <torch/torch.h>

namespace caif::behavior
{

/// Exact entropy of categorical distributions given logits [..., n].
torch::Tensor categorical_entropy(const torch::Tensor& logits);
/// Entropy of a diagonal Gaussian, 0.5 * sum log(2 pi e sigma^2).
torch::Tensor gaussian_entropy(const torch::Tensor& stddev);
/// Single-sample entropy of tanh(u), u ~ N(mean, stddev): base entropy plus sum log(1 - tanh(u)^2).
torch::Tensor squashed_gaussian_entropy(const torch::Tensor& stddev, const torch::Tensor& pre_squash_sample);

/// Action distribution q(a|s): categorical logits for discrete spaces, tanh-squashed Gaussian otherwise.
struct PolicyDistribution
{
	bool discrete = true;
	torch::Tensor logits;
	torch::Tensor mean;
	torch::Tensor stddev;

	/// Discrete: one-hot sample (no gradient). Continuous: reparameterized squashed sample.
	world_model::PolicyStep sample(const std::optional<torch::Tensor>& noise = std::nullopt) const;
	/// Argmax one-hot, or tanh(mean).
	torch::Tensor mode() const;
	/// Categorical log-probability of one-hot actions.
	torch::Tensor log_prob(const torch::Tensor& one_hot) const;
	/// Exact for categorical; for the squashed Gaussian uses the supplied pre-squash sample.
	torch::Tensor entropy(const std::optional<torch::Tensor>& pre_squash_sample = std::nullopt) const;
};

class ActionModelImpl : public torch::nn::Module
{
public:
	ActionModelImpl(int input_dim, int hidden, const envs::ActionSpace& space, double min_std = 1e-4);

	PolicyDistribution forward(const torch::Tensor& latent_features);
	const envs::ActionSpace& space() const { return space_; }

private:
	envs::ActionSpace space_;
	double min_std_;
	torch::nn::Sequential net_{nullptr};
};
TORCH_MODULE(ActionModel);

/// Expected utility network: predicts the expected free energy to go from a latent state.
class UtilityModelImpl : public torch::nn::Module
{
public:
	UtilityModelImpl(int input_dim, int hidden);

	torch::Tensor forward(const torch::Tensor& latent_features);

private:
	torch::nn::Sequential net_{nullptr};
};
TORCH_MODULE(UtilityModel);

/// Copies parameter and buffer values from `source` into `target` (same architecture).
void copy_parameters(torch::nn::Module& target, const torch::nn::Module& source);

} // namespace caif::behavior
