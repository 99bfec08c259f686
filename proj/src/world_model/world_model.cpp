#include "caif/world_model/world_model.h"

#include "caif/common/errors.h"

#include <string>

namespace caif::world_model
{

namespace nn = torch::nn;

namespace
{

nn::Sequential make_mlp(int input, int hidden, int output, bool squash)
{
	nn::Sequential mlp(nn::Linear(input, hidden), nn::ELU(), nn::Linear(hidden, output));
	if (squash)
	{
		mlp->push_back(nn::Tanh());
	}
	return mlp;
}

} // namespace

LatentState LatentState::reshape(at::IntArrayRef batch_shape) const
{
	auto shape_of = [&](const torch::Tensor& t) {
		std::vector<int64_t> shape(batch_shape.begin(), batch_shape.end());
		shape.push_back(t.size(-1));
		return shape;
	};
	return {h.reshape(shape_of(h)), z.reshape(shape_of(z)), dist.reshape(batch_shape)};
}

torch::Tensor observations_to_tensor(std::span<const envs::Observation> observations)
{
	const auto n = static_cast<int64_t>(observations.size());
	auto bytes = torch::empty({n, envs::kImageSize, envs::kImageSize, envs::kImageChannels}, torch::kUInt8);
	auto* dst = bytes.data_ptr<std::uint8_t>();
	for (const auto& obs : observations)
	{
		std::copy(obs.pixels.begin(), obs.pixels.end(), dst);
		dst += envs::kObservationBytes;
	}
	return bytes.permute({0, 3, 1, 2}).to(torch::kFloat32).div(255.0).sub(0.5).contiguous();
}

envs::Observation tensor_to_observation(const torch::Tensor& image)
{
	if (image.dim() != 3 || image.size(0) != envs::kImageChannels || image.size(1) != envs::kImageSize ||
			image.size(2) != envs::kImageSize)
	{
		throw ContractError("tensor_to_observation expects a [3, 64, 64] tensor");
	}
	auto bytes = (image.detach().to(torch::kFloat32).add(0.5).mul(255.0).round().clamp(0.0, 255.0))
								 .to(torch::kUInt8)
								 .permute({1, 2, 0})
								 .contiguous();
	envs::Observation obs;
	std::copy_n(bytes.data_ptr<std::uint8_t>(), envs::kObservationBytes, obs.pixels.begin());
	return obs;
}

WorldModelImpl::WorldModelImpl(const WorldModelOptions& options) : options_(options)
{
	const auto& arch = options_.arch;
	arch.validate();
	if (options_.action_dim < 1)
	{
		throw ConfigError("world model needs a positive action dimension");
	}

	encoder_ = nn::Sequential();
	int in_channels = arch.image_channels;
	for (int out_channels : arch.channels)
	{
		encoder_->push_back(nn::Conv2d(nn::Conv2dOptions(in_channels, out_channels, arch.kernel).stride(arch.stride)));
		encoder_->push_back(nn::ReLU());
		in_channels = out_channels;
	}
	register_module("encoder", encoder_);

	transition_in_ = register_module("transition_in", nn::Linear(arch.stoch + options_.action_dim, arch.hidden));
	cell_ = register_module("cell", nn::GRUCell(arch.hidden, arch.deter));
	prior_head_ = register_module("prior_head", make_mlp(arch.deter, arch.hidden, 2 * arch.stoch, false));
	posterior_head_ =
		register_module("posterior_head", make_mlp(arch.deter + arch.feature_dim(), arch.hidden, 2 * arch.stoch, false));

	if (options_.critic)
	{
		obs_embedder_ = register_module("obs_embedder", make_mlp(arch.feature_dim(), arch.hidden, arch.embed, true));
		state_embedder_ = register_module("state_embedder", make_mlp(arch.stoch, arch.hidden, arch.embed, true));
	}
	if (options_.decoder)
	{
		const int side = arch.encoder_sides().back();
		decoder_in_ = register_module("decoder_in", nn::Linear(arch.latent_dim(), arch.channels.back() * side * side));
		decoder_ = nn::Sequential();
		const auto padding = arch.decoder_output_padding();
		for (std::size_t i = 0; i < arch.channels.size(); ++i)
		{
			const std::size_t layer = arch.channels.size() - 1 - i;
			const int in = arch.channels[layer];
			const int out = layer == 0 ? arch.image_channels : arch.channels[layer - 1];
			decoder_->push_back(nn::ConvTranspose2d(
				nn::ConvTranspose2dOptions(in, out, arch.kernel).stride(arch.stride).output_padding(padding[i])));
			if (layer != 0)
			{
				decoder_->push_back(nn::ReLU());
			}
		}
		register_module("decoder", decoder_);
	}
	if (options_.reward_head)
	{
		reward_head_ = register_module("reward_head", make_mlp(arch.latent_dim(), arch.hidden, 1, false));
	}
}

void WorldModelImpl::require(bool present, const char* what) const
{
	if (!present)
	{
		throw ConfigError(std::string("world model was built without a ") + what);
	}
}

LatentState WorldModelImpl::initial_state(int64_t n) const
{
	const auto opts = transition_in_->weight.options();
	const auto& arch = options_.arch;
	auto zeros = torch::zeros({n, arch.stoch}, opts);
	return {torch::zeros({n, arch.deter}, opts), zeros, {zeros, torch::ones({n, arch.stoch}, opts)}};
}

torch::Tensor WorldModelImpl::encode(const torch::Tensor& observations)
{
	return encoder_->forward(observations).flatten(1);
}

torch::Tensor WorldModelImpl::advance(const LatentState& prev, const torch::Tensor& action)
{
	if (action.size(-1) != options_.action_dim || prev.z.size(-1) != options_.arch.stoch ||
			prev.h.size(-1) != options_.arch.deter)
	{
		throw ContractError(
			"world model step: expected action width " + std::to_string(options_.action_dim) + ", got " +
			std::to_string(action.size(-1)));
	}
	auto x = torch::elu(transition_in_->forward(torch::cat({prev.z, action}, -1)));
	return cell_->forward(x, prev.h);
}

Belief WorldModelImpl::prior_predict(const LatentState& prev, const torch::Tensor& action)
{
	auto h = advance(prev, action);
	auto dist = gaussian_from_raw(prior_head_->forward(h), options_.arch.min_std);
	return {std::move(h), std::move(dist)};
}

GaussianParams WorldModelImpl::posterior_from_memory(const torch::Tensor& h, const torch::Tensor& obs_features)
{
	if (obs_features.size(-1) != options_.arch.feature_dim())
	{
		throw ContractError("posterior: observation features have the wrong width");
	}
	return gaussian_from_raw(posterior_head_->forward(torch::cat({h, obs_features}, -1)), options_.arch.min_std);
}

Belief WorldModelImpl::posterior_infer(const LatentState& prev, const torch::Tensor& action, const torch::Tensor& obs_features)
{
	auto h = advance(prev, action);
	auto dist = posterior_from_memory(h, obs_features);
	return {std::move(h), std::move(dist)};
}

LatentState WorldModelImpl::sample_state(const Belief& belief, const std::optional<torch::Tensor>& noise)
{
	return {belief.h, belief.dist.sample(noise), belief.dist};
}

SequenceInference WorldModelImpl::observe(const torch::Tensor& observations, const torch::Tensor& prev_actions)
{
	if (observations.dim() != 5 || prev_actions.dim() != 3 || observations.size(0) != prev_actions.size(0) ||
			observations.size(1) != prev_actions.size(1))
	{
		throw ContractError("observe: expected observations [B, L, C, H, W] and actions [B, L, A]");
	}
	const int64_t batch = observations.size(0);
	const int64_t length = observations.size(1);
	auto features = encode(observations.flatten(0, 1)).view({batch, length, -1});

	LatentState state = initial_state(batch);
	std::vector<torch::Tensor> hs;
	std::vector<torch::Tensor> zs;
	std::vector<GaussianParams> posts;
	std::vector<GaussianParams> priors;
	for (int64_t t = 0; t < length; ++t)
	{
		auto h = advance(state, prev_actions.select(1, t));
		auto prior = gaussian_from_raw(prior_head_->forward(h), options_.arch.min_std);
		auto post = posterior_from_memory(h, features.select(1, t));
		state = sample_state({h, post});
		hs.push_back(state.h);
		zs.push_back(state.z);
		posts.push_back(post);
		priors.push_back(std::move(prior));
	}
	SequenceInference out;
	out.posterior = {torch::stack(hs, 1), torch::stack(zs, 1), stack(posts, 1)};
	out.prior = stack(priors, 1);
	out.obs_features = features;
	return out;
}

torch::Tensor WorldModelImpl::obs_embedding(const torch::Tensor& obs_features)
{
	require(options_.critic, "critic");
	return obs_embedder_->forward(obs_features);
}

torch::Tensor WorldModelImpl::state_embedding(const torch::Tensor& z)
{
	require(options_.critic, "critic");
	return state_embedder_->forward(z);
}

torch::Tensor WorldModelImpl::decode(const torch::Tensor& latent_features)
{
	require(options_.decoder, "decoder");
	const auto& arch = options_.arch;
	const int side = arch.encoder_sides().back();
	auto x = decoder_in_->forward(latent_features).view({-1, arch.channels.back(), side, side});
	return decoder_->forward(x);
}

torch::Tensor WorldModelImpl::predict_reward(const torch::Tensor& latent_features)
{
	require(options_.reward_head, "reward head");
	return reward_head_->forward(latent_features).squeeze(-1);
}

ImaginedRollout imagine(WorldModelImpl& model, const LatentState& start, const PolicyFn& policy, int horizon)
{
	if (horizon < 1)
	{
		throw ContractError("imagine: horizon must be >= 1");
	}
	std::vector<torch::Tensor> hs = {start.h};
	std::vector<torch::Tensor> zs = {start.z};
	std::vector<GaussianParams> dists = {start.dist};
	std::vector<torch::Tensor> actions;
	std::vector<torch::Tensor> log_probs;
	std::vector<torch::Tensor> entropies;
	LatentState state = start;
	for (int t = 0; t < horizon; ++t)
	{
		auto step = policy(state);
		state = WorldModelImpl::sample_state(model.prior_predict(state, step.action));
		hs.push_back(state.h);
		zs.push_back(state.z);
		dists.push_back(state.dist);
		actions.push_back(std::move(step.action));
		log_probs.push_back(std::move(step.log_prob));
		entropies.push_back(std::move(step.entropy));
	}
	return {
		torch::stack(hs),
		torch::stack(zs),
		stack(dists, 0),
		torch::stack(actions),
		torch::stack(log_probs),
		torch::stack(entropies)};
}

} // namespace caif::world_model
