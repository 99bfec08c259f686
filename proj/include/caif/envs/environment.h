#pragma once

#include "caif/envs/goal.h"
#include "caif/envs/observation.h"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace caif::envs
{

struct ActionSpace
{
	enum class Kind
	{
		discrete,
		continuous,
	};

	Kind kind = Kind::discrete;
	// Number of discrete actions, or dimension of the continuous action vector.
	int size = 1;
	float low = -1.0F;
	float high = 1.0F;

	bool is_discrete() const { return kind == Kind::discrete; }
	// Width of the vector the models consume: one-hot for discrete actions.
	int encoding_dim() const { return size; }
};

struct PomdpConfig
{
	ActionSpace action_space;
	int max_episode_steps = 1;
	double discount = 0.99;
	std::uint64_t seed = 0;

	/// Throws ConfigError when max_episode_steps < 1 or discount is outside (0, 1).
	void validate() const;
};

struct StepResult
{
	Observation observation;
	double reward = 0.0;
	bool done = false;
};

/// Per-episode nuisance sample recorded alongside stored episodes.
struct DistractionSample
{
	bool enabled = false;
	int background_id = 0;
	double camera_angle = 0.0;
	std::array<double, 3> arm_shift{};
	std::array<double, 3> target_shift{};
	std::uint64_t pattern_seed = 0;

	bool operator==(const DistractionSample&) const = default;
};

struct EnvMetadata
{
	std::uint64_t seed = 0;
	DistractionSample distraction;
};

/// Common surface of the built-in pixel environments. Actions are passed in the model's encoding:
/// a one-hot vector for discrete spaces, the raw vector for continuous ones.
class Environment
{
public:
	virtual ~Environment() = default;

	virtual std::string name() const = 0;
	virtual const PomdpConfig& config() const = 0;
	virtual Observation reset() = 0;
	virtual StepResult step_encoded(std::span<const float> action) = 0;
	virtual bool done() const = 0;
	virtual GoalSpec goal(GoalPrior prior = GoalPrior::laplace) const = 0;
	virtual EnvMetadata metadata() const = 0;

	// Serialized random-engine state, used to resume training runs bit-exactly.
	virtual std::string rng_state() const = 0;
	virtual void set_rng_state(const std::string& state) = 0;
};

/// Index of the largest entry of a one-hot (or logit) vector.
int decode_discrete(std::span<const float> encoded);
std::vector<float> encode_discrete(int index, int size);

} // namespace caif::envs
