#pragma once

#include "caif/envs/environment.h"

#include <array>
#include <random>
#include <string>

namespace caif::envs
{

enum class ReacherDifficulty
{
	easy,
	hard,
};

struct Vec2
{
	double x = 0.0;
	double y = 0.0;
};

struct ReacherState
{
	std::array<double, 2> joint_angles{};
	std::array<double, 2> joint_velocities{};
	Vec2 target_pos;
	double target_radius = 0.0;
	int step_count = 0;
	bool done = false;
};

struct DistractionConfig
{
	bool enabled = false;
	// Used as-is unless per_episode_reseed is set, in which case each episode draws one of the four.
	int background_id = 0;
	// Maximum absolute camera rotation, radians.
	double camera_jitter = 0.1;
	// Maximum absolute per-channel color offset of arm and target, in [0, 1] intensity units.
	double palette_shift = 0.1;
	bool per_episode_reseed = true;

	void validate() const;
};

inline constexpr int kReacherBackgroundCount = 4;

/// Physical constants of the two-link arm. Lengths are in arena units.
struct ReacherPhysics
{
	double link1 = 1.0;
	double link2 = 0.5;
	double mass1 = 1.0;
	double mass2 = 0.5;
	double damping = 0.05;
	double dt = 0.02;
	double max_torque = 1.0;
	double tip_radius = 0.08;
	double easy_target_radius = 0.3;
	double hard_target_radius = 0.12;
	Vec2 target = {0.8, -0.8};
};

inline constexpr int kReacherEpisodeSteps = 1000;

PomdpConfig reacher_pomdp_config(std::uint64_t seed = 0, int max_episode_steps = kReacherEpisodeSteps);
double target_radius(const ReacherPhysics& physics, ReacherDifficulty difficulty);

/// Forward kinematics of the fingertip.
Vec2 reacher_tip(const ReacherState& state, const ReacherPhysics& physics = {});
/// True when the whole tip disc lies inside the target disc.
bool tip_inside_target(const ReacherState& state, const ReacherPhysics& physics = {});
/// Joint angles placing the fingertip at `point` (elbow-down solution, point clamped to the reachable annulus).
std::array<double, 2> reacher_inverse_kinematics(Vec2 point, const ReacherPhysics& physics = {});
double wrap_angle(double angle);

DistractionSample sample_distraction(const DistractionConfig& config, std::mt19937_64& rng);

/// Random initial joint angles, zero velocities, target at the fixed goal position.
ReacherState reacher_reset(ReacherDifficulty difficulty, std::mt19937_64& rng, const ReacherPhysics& physics = {});
/// Semi-implicit Euler step of the damped torque-driven arm. Actions are clamped to [-1, 1].
StepResult reacher_step(
	ReacherState& state,
	std::array<double, 2> action,
	const DistractionSample& distraction,
	int max_episode_steps = kReacherEpisodeSteps,
	const ReacherPhysics& physics = {});
Observation reacher_render(
	const ReacherState& state, const DistractionSample& distraction, const ReacherPhysics& physics = {});

/// Preferred outcome: the fingertip centered in the fixed target, always on the plain background.
GoalSpec make_reacher_goal(
	ReacherDifficulty difficulty, GoalPrior prior = GoalPrior::laplace, const ReacherPhysics& physics = {});

class Reacher final : public Environment
{
public:
	Reacher(
		ReacherDifficulty difficulty,
		DistractionConfig distraction = {},
		std::uint64_t seed = 0,
		int max_episode_steps = kReacherEpisodeSteps);

	std::string name() const override;
	const PomdpConfig& config() const override { return config_; }
	Observation reset() override;
	StepResult step(std::array<double, 2> action);
	StepResult step_encoded(std::span<const float> action) override;
	bool done() const override { return state_.done; }
	GoalSpec goal(GoalPrior prior = GoalPrior::laplace) const override;
	EnvMetadata metadata() const override;
	std::string rng_state() const override;
	void set_rng_state(const std::string& state) override;

	const ReacherState& state() const { return state_; }
	void set_state(const ReacherState& state) { state_ = state; }
	const DistractionSample& distraction_sample() const { return distraction_sample_; }
	ReacherDifficulty difficulty() const { return difficulty_; }
	const ReacherPhysics& physics() const { return physics_; }
	Observation render() const { return reacher_render(state_, distraction_sample_, physics_); }

private:
	ReacherDifficulty difficulty_;
	DistractionConfig distraction_;
	PomdpConfig config_;
	ReacherPhysics physics_;
	// Separate streams so enabling distractions never perturbs the dynamics.
	std::mt19937_64 state_rng_;
	std::mt19937_64 distraction_rng_;
	ReacherState state_;
	DistractionSample distraction_sample_;
};

} // namespace caif::envs
