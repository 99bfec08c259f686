#include "caif/world_model/gaussian.h"

#include "caif/common/errors.h"

#include <cmath>
#include <numbers>

namespace caif::world_model
{

GaussianParams GaussianParams::reshape(at::IntArrayRef batch_shape) const
{
	std::vector<int64_t> shape(batch_shape.begin(), batch_shape.end());
	shape.push_back(mean.size(-1));
	return {mean.reshape(shape), stddev.reshape(shape)};
}

torch::Tensor GaussianParams::sample(const std::optional<torch::Tensor>& noise) const
{
	if (noise)
	{
		return mean + stddev * *noise;
	}
	return mean + stddev * torch::randn_like(mean);
}

torch::Tensor GaussianParams::entropy() const
{
	const double log_2pie = std::log(2.0 * std::numbers::pi * std::numbers::e);
	return (0.5 * log_2pie + torch::log(stddev)).sum(-1);
}

GaussianParams gaussian_from_raw(const torch::Tensor& raw, double min_std)
{
	if (raw.size(-1) % 2 != 0)
	{
		throw ContractError("gaussian_from_raw: last dimension must be even");
	}
	auto chunks = raw.chunk(2, -1);
	return {chunks[0], torch::nn::functional::softplus(chunks[1]) + min_std};
}

torch::Tensor kl_gaussian(const GaussianParams& q, const GaussianParams& p)
{
	if (q.mean.sizes() != p.mean.sizes() || q.stddev.sizes() != p.stddev.sizes() || q.mean.sizes() != q.stddev.sizes())
	{
		throw ContractError("kl_gaussian: dimension mismatch between q and p");
	}
	const auto var_ratio = (q.stddev / p.stddev).pow(2);
	const auto mean_term = ((q.mean - p.mean) / p.stddev).pow(2);
	return 0.5 * (var_ratio + mean_term - 1.0 - torch::log(var_ratio)).sum(-1);
}

GaussianParams stack(const std::vector<GaussianParams>& params, int64_t dim)
{
	std::vector<torch::Tensor> means;
	std::vector<torch::Tensor> stddevs;
	for (const auto& p : params)
	{
		means.push_back(p.mean);
		stddevs.push_back(p.stddev);
	}
	return {torch::stack(means, dim), torch::stack(stddevs, dim)};
}

} // namespace caif::world_model
