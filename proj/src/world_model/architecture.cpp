#include "caif/world_model/architecture.h"

#include "caif/common/errors.h"

#include <string>

namespace caif::world_model
{

std::vector<int> ArchitectureSpec::encoder_sides() const
{
	std::vector<int> sides = {image};
	for (std::size_t i = 0; i < channels.size(); ++i)
	{
		sides.push_back((sides.back() - kernel) / stride + 1);
	}
	return sides;
}

int ArchitectureSpec::feature_dim() const
{
	const int side = encoder_sides().back();
	return channels.back() * side * side;
}

std::vector<int> ArchitectureSpec::decoder_output_padding() const
{
	const auto sides = encoder_sides();
	std::vector<int> padding;
	// Decoder layer i maps sides[n - i] back to sides[n - i - 1].
	for (std::size_t i = sides.size() - 1; i > 0; --i)
	{
		padding.push_back(sides[i - 1] - ((sides[i] - 1) * stride + kernel));
	}
	return padding;
}

void ArchitectureSpec::validate() const
{
	if (stoch < 1 || deter < 1 || hidden < 1 || embed < 1 || kernel < 1 || stride < 1 || image_channels < 1)
	{
		throw ConfigError("architecture sizes must be positive");
	}
	for (int c : channels)
	{
		if (c < 1)
		{
			throw ConfigError("architecture channel widths must be positive");
		}
	}
	const auto sides = encoder_sides();
	if (sides.back() < 1)
	{
		throw ConfigError("encoder reduces a " + std::to_string(image) + "px image below one pixel");
	}
	for (int pad : decoder_output_padding())
	{
		if (pad < 0 || pad >= stride)
		{
			throw ConfigError("decoder cannot mirror the encoder for this kernel/stride combination");
		}
	}
	if (!(min_std > 0.0))
	{
		throw ConfigError("architecture.min_std must be positive");
	}
}

} // namespace caif::world_model
