#pragma once

#include "caif/envs/observation.h"

#include <span>

namespace caif::envs
{

enum class GoalPrior
{
	laplace,
	gaussian,
};

/// Preferred-outcome image with a factorized density over normalized pixels centered on it.
struct GoalSpec
{
	Observation image;
	GoalPrior prior = GoalPrior::laplace;
	double scale = 1.0;

	/// Log-density of a normalized image (HWC order, kObservationBytes values) under the prior.
	double log_density(std::span<const float> normalized) const;
	/// Log-density of the goal image itself, i.e. the density at the prior's center.
	double peak_log_density() const;
};

} // namespace caif::envs
