#include "caif/behavior/policy.h"

#include "caif/common/errors.h"

#include <cmath>
#include <numbers>

namespace caif::behavior
{

namespace nn = torch::nn;

namespace
{

nn::Sequential make_three_layer(int input, int hidden, int output)
{
	return nn::Sequential(
		nn::Linear(input, hidden), nn::ELU(), nn::Linear(hidden, hidden), nn::ELU(), nn::Linear(hidden, output));
}

} // namespace

torch::Tensor categorical_entropy(const torch::Tensor& logits)
{
	auto log_p = torch::log_softmax(logits, -1);
	// 0 * log 0 is taken as 0 for saturated logits.
	auto p_log_p = torch::where(log_p.isinf(), torch::zeros_like(log_p), log_p.exp() * log_p);
	return -p_log_p.sum(-1);
}

torch::Tensor gaussian_entropy(const torch::Tensor& stddev)
{
	const double log_2pie = std::log(2.0 * std::numbers::pi * std::numbers::e);
	return (0.5 * log_2pie + torch::log(stddev)).sum(-1);
}

torch::Tensor squashed_gaussian_entropy(const torch::Tensor& stddev, const torch::Tensor& pre_squash_sample)
{
	// log(1 - tanh(u)^2) = 2 * (log 2 - u - softplus(-2u)), stable for large |u|.
	auto log_det = 2.0 * (std::log(2.0) - pre_squash_sample - torch::nn::functional::softplus(-2.0 * pre_squash_sample));
	return gaussian_entropy(stddev) + log_det.sum(-1);
}

world_model::PolicyStep PolicyDistribution::sample(const std::optional<torch::Tensor>& noise) const
{
	if (discrete)
	{
		torch::Tensor index;
		{
			torch::NoGradGuard no_grad;
			index = torch::multinomial(torch::softmax(logits.detach(), -1), 1);
		}
		auto one_hot = torch::zeros_like(logits).scatter_(-1, index, 1.0);
		return {one_hot, log_prob(one_hot), entropy()};
	}
	auto eps = noise ? *noise : torch::randn_like(mean);
	auto pre = mean + stddev * eps;
	auto action = torch::tanh(pre);
	// Log-probability of the squashed sample; only used for diagnostics in the pathwise estimator.
	auto base = -0.5 * eps.pow(2) - torch::log(stddev) - 0.5 * std::log(2.0 * std::numbers::pi);
	auto log_det = 2.0 * (std::log(2.0) - pre - torch::nn::functional::softplus(-2.0 * pre));
	return {action, (base - log_det).sum(-1), squashed_gaussian_entropy(stddev, pre)};
}

torch::Tensor PolicyDistribution::mode() const
{
	if (discrete)
	{
		auto index = logits.argmax(-1, true);
		return torch::zeros_like(logits).scatter_(-1, index, 1.0);
	}
	return torch::tanh(mean);
}

torch::Tensor PolicyDistribution::log_prob(const torch::Tensor& one_hot) const
{
	if (!discrete)
	{
		throw ContractError("log_prob of explicit actions is only defined for categorical policies");
	}
	return (torch::log_softmax(logits, -1) * one_hot).sum(-1);
}

torch::Tensor PolicyDistribution::entropy(const std::optional<torch::Tensor>& pre_squash_sample) const
{
	if (discrete)
	{
		return categorical_entropy(logits);
	}
	if (!pre_squash_sample)
	{
		throw ContractError("squashed Gaussian entropy needs a pre-squash sample");
	}
	return squashed_gaussian_entropy(stddev, *pre_squash_sample);
}

ActionModelImpl::ActionModelImpl(int input_dim, int hidden, const envs::ActionSpace& space, double min_std)
		: space_(space), min_std_(min_std)
{
	const int out = space.is_discrete() ? space.size : 2 * space.size;
	net_ = register_module("net", make_three_layer(input_dim, hidden, out));
}

PolicyDistribution ActionModelImpl::forward(const torch::Tensor& latent_features)
{
	auto out = net_->forward(latent_features);
	PolicyDistribution dist;
	dist.discrete = space_.is_discrete();
	if (dist.discrete)
	{
		dist.logits = out;
	}
	else
	{
		auto chunks = out.chunk(2, -1);
		dist.mean = chunks[0];
		dist.stddev = torch::nn::functional::softplus(chunks[1]) + min_std_;
	}
	return dist;
}

UtilityModelImpl::UtilityModelImpl(int input_dim, int hidden)
{
	net_ = register_module("net", make_three_layer(input_dim, hidden, 1));
}

torch::Tensor UtilityModelImpl::forward(const torch::Tensor& latent_features)
{
	return net_->forward(latent_features).squeeze(-1);
}

void copy_parameters(torch::nn::Module& target, const torch::nn::Module& source)
{
	torch::NoGradGuard no_grad;
	auto src = source.named_parameters(true);
	for (auto& item : target.named_parameters(true))
	{
		item.value().copy_(src[item.key()]);
	}
	auto src_buffers = source.named_buffers(true);
	for (auto& item : target.named_buffers(true))
	{
		item.value().copy_(src_buffers[item.key()]);
	}
}

} // namespace caif::behavior
