#include "caif/analysis/efficiency.h"

#include <fmt/format.h>

#include <numeric>

namespace caif::analysis
{

std::int64_t PathCount::macs() const
{
	return std::accumulate(
		layers.begin(), layers.end(), std::int64_t{0}, [](std::int64_t acc, const LayerCount& l) { return acc + l.macs; });
}

std::int64_t PathCount::params() const
{
	return std::accumulate(
		layers.begin(), layers.end(), std::int64_t{0}, [](std::int64_t acc, const LayerCount& l) { return acc + l.params; });
}

double EfficiencyReport::mac_ratio() const
{
	return static_cast<double>(likelihood.macs()) / static_cast<double>(contrastive.macs());
}

double EfficiencyReport::param_ratio() const
{
	return static_cast<double>(likelihood.params()) / static_cast<double>(contrastive.params());
}

std::string EfficiencyReport::to_text() const
{
	std::string out;
	for (const auto* path : {&likelihood, &contrastive, &shared})
	{
		out += fmt::format("{} path\n", path->name);
		for (const auto& layer : path->layers)
		{
			out += fmt::format("  {:<24} {:>12} MACs {:>10} params\n", layer.name, layer.macs, layer.params);
		}
		out += fmt::format(
			"  {:<24} {:>12} MACs {:>10} params  ({:.3f} MMACs, {:.1f}k params)\n",
			"total",
			path->macs(),
			path->params(),
			static_cast<double>(path->macs()) / 1e6,
			static_cast<double>(path->params()) / 1e3);
	}
	out += fmt::format("likelihood / contrastive: {:.2f}x MACs, {:.2f}x params\n", mac_ratio(), param_ratio());
	return out;
}

LayerCount conv_layer(const std::string& name, int in_channels, int out_channels, int kernel, int out_side)
{
	const std::int64_t taps = static_cast<std::int64_t>(in_channels) * kernel * kernel;
	return {
		name,
		static_cast<std::int64_t>(out_side) * out_side * out_channels * taps,
		taps * out_channels + out_channels};
}

LayerCount transposed_conv_layer(const std::string& name, int in_channels, int out_channels, int kernel, int in_side)
{
	// Every input position scatters a kernel-sized patch into each output channel.
	const std::int64_t weights = static_cast<std::int64_t>(in_channels) * out_channels * kernel * kernel;
	return {name, static_cast<std::int64_t>(in_side) * in_side * weights, weights + out_channels};
}

LayerCount linear_layer(const std::string& name, int in, int out)
{
	const std::int64_t weights = static_cast<std::int64_t>(in) * out;
	return {name, weights, weights + out};
}

LayerCount gru_cell(const std::string& name, int in, int hidden)
{
	const std::int64_t weights = 3LL * (static_cast<std::int64_t>(in) * hidden + static_cast<std::int64_t>(hidden) * hidden);
	return {name, weights, weights + 6LL * hidden};
}

EfficiencyReport efficiency_report(const world_model::ArchitectureSpec& arch, int action_dim)
{
	arch.validate();
	EfficiencyReport report;
	report.likelihood.name = "likelihood";
	report.contrastive.name = "contrastive";
	report.shared.name = "shared";

	const auto sides = arch.encoder_sides();
	const int layers = static_cast<int>(arch.channels.size());

	int in_channels = arch.image_channels;
	for (int i = 0; i < layers; ++i)
	{
		report.shared.layers.push_back(conv_layer(
			fmt::format("encoder.conv{}", i), in_channels, arch.channels[i], arch.kernel, sides[i + 1]));
		in_channels = arch.channels[i];
	}
	report.shared.layers.push_back(linear_layer("transition_in", arch.stoch + action_dim, arch.hidden));
	report.shared.layers.push_back(gru_cell("cell", arch.hidden, arch.deter));
	report.shared.layers.push_back(linear_layer("prior_head.0", arch.deter, arch.hidden));
	report.shared.layers.push_back(linear_layer("prior_head.1", arch.hidden, 2 * arch.stoch));
	report.shared.layers.push_back(linear_layer("posterior_head.0", arch.deter + arch.feature_dim(), arch.hidden));
	report.shared.layers.push_back(linear_layer("posterior_head.1", arch.hidden, 2 * arch.stoch));

	const int side = sides.back();
	report.likelihood.layers.push_back(
		linear_layer("decoder_in", arch.latent_dim(), arch.channels.back() * side * side));
	for (int i = 0; i < layers; ++i)
	{
		const int layer = layers - 1 - i;
		const int out = layer == 0 ? arch.image_channels : arch.channels[layer - 1];
		report.likelihood.layers.push_back(transposed_conv_layer(
			fmt::format("decoder.deconv{}", i), arch.channels[layer], out, arch.kernel, sides[layer + 1]));
	}

	report.contrastive.layers.push_back(linear_layer("obs_embedder.0", arch.feature_dim(), arch.hidden));
	report.contrastive.layers.push_back(linear_layer("obs_embedder.1", arch.hidden, arch.embed));
	report.contrastive.layers.push_back(linear_layer("state_embedder.0", arch.stoch, arch.hidden));
	report.contrastive.layers.push_back(linear_layer("state_embedder.1", arch.hidden, arch.embed));
	report.contrastive.layers.push_back({"dot_product", arch.embed, 0});
	return report;
}

std::int64_t module_parameters(world_model::WorldModelImpl& model, const std::vector<std::string>& children)
{
	std::int64_t total = 0;
	for (const auto& item : model.named_parameters(true))
	{
		const auto& key = item.key();
		for (const auto& child : children)
		{
			if (key.rfind(child + ".", 0) == 0)
			{
				total += item.value().numel();
				break;
			}
		}
	}
	return total;
}

} // namespace caif::analysis
