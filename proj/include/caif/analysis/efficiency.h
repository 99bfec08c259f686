#pragma once

#include "caif/world_model/architecture.h"
#include "caif/world_model/world_model.h"

#include <cstdint>
#include <string>
#include <vector>

namespace caif::analysis
{

/// Multiply-accumulates of one forward pass and parameter count of a single layer.
struct LayerCount
{
	std::string name;
	std::int64_t macs = 0;
	std::int64_t params = 0;
};

struct PathCount
{
	std::string name;
	std::vector<LayerCount> layers;

	std::int64_t macs() const;
	std::int64_t params() const;
};

/// Static per-sample counts of the two representation paths and the parts both share.
/// Likelihood path: transposed-convolution decoder. Contrastive path: both critic embedders
/// plus their dot product. Encoder, recurrent cell and belief heads are reported separately.
struct EfficiencyReport
{
	PathCount likelihood;
	PathCount contrastive;
	PathCount shared;

	double mac_ratio() const;
	double param_ratio() const;
	std::string to_text() const;
};

LayerCount conv_layer(const std::string& name, int in_channels, int out_channels, int kernel, int out_side);
LayerCount transposed_conv_layer(
	const std::string& name, int in_channels, int out_channels, int kernel, int in_side);
LayerCount linear_layer(const std::string& name, int in, int out);
/// One step of a GRU cell with input and recurrent biases.
LayerCount gru_cell(const std::string& name, int in, int hidden);

EfficiencyReport efficiency_report(const world_model::ArchitectureSpec& arch, int action_dim = 3);

/// Parameter count of the named direct submodules of a constructed world model, for
/// cross-checking the static counter.
std::int64_t module_parameters(world_model::WorldModelImpl& model, const std::vector<std::string>& children);

} // namespace caif::analysis
