#pragma once

#include <torch/torch.h>

#include <optional>

namespace caif::world_model
{

/// Diagonal Gaussian; tensors share shape [..., stoch].
struct GaussianParams
{
	torch::Tensor mean;
	torch::Tensor stddev;

	GaussianParams detach() const { return {mean.detach(), stddev.detach()}; }
	GaussianParams reshape(at::IntArrayRef batch_shape) const;
	/// Reparameterized sample mean + stddev * noise; draws standard normal noise when none is given.
	torch::Tensor sample(const std::optional<torch::Tensor>& noise = std::nullopt) const;
	/// Differential entropy summed over the last dimension.
	torch::Tensor entropy() const;
};

/// Splits `raw` in half along the last dimension into mean and pre-activation scale;
/// stddev = softplus(scale) + min_std.
GaussianParams gaussian_from_raw(const torch::Tensor& raw, double min_std);

/// Closed-form KL[q || p] for diagonal Gaussians, summed over the last dimension.
torch::Tensor kl_gaussian(const GaussianParams& q, const GaussianParams& p);

/// Stacks per-step parameters along a new dimension.
GaussianParams stack(const std::vector<GaussianParams>& params, int64_t dim);

} // namespace caif::world_model
