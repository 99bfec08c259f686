#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

namespace caif::envs
{

inline constexpr int kImageSize = 64;
inline constexpr int kImageChannels = 3;
inline constexpr std::size_t kObservationBytes = std::size_t{kImageSize} * kImageSize * kImageChannels;

/// 64x64x3 RGB image stored row-major, channels interleaved (HWC).
struct Observation
{
	std::array<std::uint8_t, kObservationBytes> pixels{};

	std::uint8_t& at(int y, int x, int c) { return pixels[(static_cast<std::size_t>(y) * kImageSize + x) * kImageChannels + c]; }
	std::uint8_t at(int y, int x, int c) const
	{
		return pixels[(static_cast<std::size_t>(y) * kImageSize + x) * kImageChannels + c];
	}

	void set(int y, int x, const std::array<std::uint8_t, 3>& rgb)
	{
		for (int c = 0; c < kImageChannels; ++c)
		{
			at(y, x, c) = rgb[c];
		}
	}

	bool operator==(const Observation&) const = default;
};

using Rgb = std::array<std::uint8_t, 3>;

/// Maps an 8-bit intensity to the [-0.5, 0.5] range used at model input and for density evaluation.
inline constexpr float normalize_pixel(std::uint8_t value)
{
	return static_cast<float>(value) / 255.0F - 0.5F;
}

} // namespace caif::envs
