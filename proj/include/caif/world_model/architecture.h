#pragma once

#include <array>
#include <vector>

namespace caif::world_model
{

/// Layer sizes shared by model construction and the static efficiency counter.
struct ArchitectureSpec
{
	int stoch = 30;
	int deter = 200;
	int hidden = 200;
	// Output width of both critic embedders.
	int embed = 32;
	std::array<int, 4> channels = {32, 64, 128, 256};
	int kernel = 4;
	int stride = 2;
	int image = 64;
	int image_channels = 3;
	double min_std = 1e-4;

	/// Spatial side length after each encoder layer, starting with the input image.
	std::vector<int> encoder_sides() const;
	/// Flattened width of the final convolution output.
	int feature_dim() const;
	/// Output padding for each transposed convolution so the decoder mirrors the encoder exactly.
	std::vector<int> decoder_output_padding() const;
	int latent_dim() const { return deter + stoch; }

	/// Throws ConfigError when sizes are non-positive or the encoder collapses the image.
	void validate() const;

	bool operator==(const ArchitectureSpec&) const = default;
};

} // namespace caif::world_model
