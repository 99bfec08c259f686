#include "caif/envs/environment.h"

#include "caif/common/errors.h"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace caif::envs
{

void PomdpConfig::validate() const
{
	if (max_episode_steps < 1)
	{
		throw ConfigError("max_episode_steps must be >= 1, got " + std::to_string(max_episode_steps));
	}
	if (!(discount > 0.0 && discount < 1.0))
	{
		throw ConfigError("discount must lie in (0, 1), got " + std::to_string(discount));
	}
	if (action_space.size < 1)
	{
		throw ConfigError("action space must have at least one action/dimension");
	}
}

int decode_discrete(std::span<const float> encoded)
{
	if (encoded.empty())
	{
		throw ContractError("decode_discrete: empty action encoding");
	}
	return static_cast<int>(std::distance(encoded.begin(), std::max_element(encoded.begin(), encoded.end())));
}

std::vector<float> encode_discrete(int index, int size)
{
	if (index < 0 || index >= size)
	{
		throw ContractError("encode_discrete: index " + std::to_string(index) + " outside [0, " + std::to_string(size) + ")");
	}
	std::vector<float> encoded(size, 0.0F);
	encoded[index] = 1.0F;
	return encoded;
}

double GoalSpec::log_density(std::span<const float> normalized) const
{
	if (normalized.size() != kObservationBytes)
	{
		throw ContractError("GoalSpec::log_density expects " + std::to_string(kObservationBytes) + " values");
	}
	double total = 0.0;
	if (prior == GoalPrior::laplace)
	{
		const double log_norm = -std::log(2.0 * scale);
		for (std::size_t i = 0; i < normalized.size(); ++i)
		{
			total += log_norm - std::abs(static_cast<double>(normalized[i]) - normalize_pixel(image.pixels[i])) / scale;
		}
	}
	else
	{
		const double log_norm = -0.5 * std::log(2.0 * std::numbers::pi * scale * scale);
		for (std::size_t i = 0; i < normalized.size(); ++i)
		{
			const double diff = (static_cast<double>(normalized[i]) - normalize_pixel(image.pixels[i])) / scale;
			total += log_norm - 0.5 * diff * diff;
		}
	}
	return total;
}

double GoalSpec::peak_log_density() const
{
	std::vector<float> center(kObservationBytes);
	std::transform(image.pixels.begin(), image.pixels.end(), center.begin(), normalize_pixel);
	return log_density(center);
}

} // namespace caif::envs
