#include "caif/envs/reacher.h"

#include "caif/common/errors.h"
#include "caif/common/log.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <sstream>

namespace caif::envs
{

namespace
{

constexpr double kPi = std::numbers::pi;
// Arena half-extent visible in the frame, arena units.
constexpr double kViewExtent = 1.6;
constexpr double kPixelsPerUnit = kImageSize / (2.0 * kViewExtent);
constexpr double kLink1Width = 0.07;
constexpr double kLink2Width = 0.06;
constexpr double kBaseRadius = 0.09;
constexpr double kFloorLineSpacing = 0.4;

constexpr std::array<double, 3> kFloorColor = {30, 60, 120};
constexpr std::array<double, 3> kFloorLineColor = {45, 82, 150};
constexpr std::array<double, 3> kTargetColor = {200, 60, 70};
constexpr std::array<double, 3> kArmColor = {205, 165, 115};
constexpr std::array<double, 3> kTipColor = {255, 140, 0};
constexpr std::array<double, 3> kBaseColor = {120, 120, 120};

std::atomic<long> g_clamp_count{0};

double dist_to_segment(Vec2 p, Vec2 a, Vec2 b)
{
	const double dx = b.x - a.x;
	const double dy = b.y - a.y;
	const double len2 = dx * dx + dy * dy;
	double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
	t = std::clamp(t, 0.0, 1.0);
	const double ex = p.x - (a.x + t * dx);
	const double ey = p.y - (a.y + t * dy);
	return std::sqrt(ex * ex + ey * ey);
}

double dist(Vec2 a, Vec2 b)
{
	return std::hypot(a.x - b.x, a.y - b.y);
}

std::uint8_t to_byte(double value)
{
	return static_cast<std::uint8_t>(std::clamp(std::lround(value), 0L, 255L));
}

Rgb shifted(const std::array<double, 3>& base, const std::array<double, 3>& shift)
{
	return {to_byte(base[0] + 255.0 * shift[0]), to_byte(base[1] + 255.0 * shift[1]), to_byte(base[2] + 255.0 * shift[2])};
}

std::uint64_t mix(std::uint64_t x)
{
	x ^= x >> 33;
	x *= 0xff51afd7ed558ccdULL;
	x ^= x >> 33;
	x *= 0xc4ceb9fe1a85ec53ULL;
	x ^= x >> 33;
	return x;
}

double lattice(std::uint64_t seed, int ix, int iy)
{
	const std::uint64_t h = mix(seed ^ mix(static_cast<std::uint64_t>(ix) * 0x9E3779B97F4A7C15ULL + static_cast<std::uint32_t>(iy)));
	return static_cast<double>(h >> 11) / static_cast<double>(1ULL << 53);
}

double value_noise(std::uint64_t seed, double x, double y)
{
	const double fx = std::floor(x);
	const double fy = std::floor(y);
	const int ix = static_cast<int>(fx);
	const int iy = static_cast<int>(fy);
	const double tx = x - fx;
	const double ty = y - fy;
	const double sx = tx * tx * (3.0 - 2.0 * tx);
	const double sy = ty * ty * (3.0 - 2.0 * ty);
	const double a = lattice(seed, ix, iy);
	const double b = lattice(seed, ix + 1, iy);
	const double c = lattice(seed, ix, iy + 1);
	const double d = lattice(seed, ix + 1, iy + 1);
	return (a + (b - a) * sx) + ((c + (d - c) * sx) - (a + (b - a) * sx)) * sy;
}

// Animated procedural backdrop in screen space; u, v in [0, 1), t in seconds.
Rgb distractor_background(const DistractionSample& sample, double u, double v, double t)
{
	const double phase = static_cast<double>(sample.pattern_seed % 1000) / 1000.0 * 2.0 * kPi;
	double r = 0.0;
	double g = 0.0;
	double b = 0.0;
	switch (sample.background_id)
	{
		case 0:
		{
			const double s = 3.0 * (u * std::cos(phase) + v * std::sin(phase)) - 0.25 * t;
			r = 0.5 + 0.5 * std::sin(2.0 * kPi * s);
			g = 0.5 + 0.5 * std::sin(2.0 * kPi * s + 2.1);
			b = 0.5 + 0.5 * std::sin(2.0 * kPi * 0.7 * s + 4.2);
			break;
		}
		case 1:
		{
			const double n1 = value_noise(sample.pattern_seed, 6.0 * u + 0.4 * t, 6.0 * v + 0.15 * t);
			const double n2 = value_noise(sample.pattern_seed + 17, 12.0 * u - 0.3 * t, 12.0 * v);
			const double n = 0.65 * n1 + 0.35 * n2;
			r = 0.2 + 0.8 * n;
			g = 0.55 * n + 0.25 * std::sin(phase + 3.0 * n);
			b = 0.9 - 0.6 * n;
			break;
		}
		case 2:
		{
			const double cx = 0.5 + 0.25 * std::cos(0.3 * t + phase);
			const double cy = 0.5 + 0.25 * std::sin(0.2 * t + phase);
			const double d = std::hypot(u - cx, v - cy);
			const double s = std::sin(2.0 * kPi * (6.0 * d - 0.5 * t));
			r = 0.5 + 0.45 * s;
			g = 0.35 + 0.3 * std::cos(2.0 * kPi * 3.0 * d + phase);
			b = 0.5 - 0.45 * s;
			break;
		}
		default:
		{
			const double sx = std::sin(2.0 * kPi * (4.0 * u + 0.2 * t) + phase);
			const double sy = std::sin(2.0 * kPi * (5.0 * v - 0.15 * t));
			const double hue = 0.5 + 0.5 * std::sin(0.4 * t + phase);
			r = 0.5 + 0.4 * sx * sy;
			g = hue * (0.5 + 0.5 * sx);
			b = (1.0 - hue) * (0.5 + 0.5 * sy);
			break;
		}
	}
	return {to_byte(255.0 * r), to_byte(255.0 * g), to_byte(255.0 * b)};
}

} // namespace

void DistractionConfig::validate() const
{
	if (background_id < 0 || background_id >= kReacherBackgroundCount)
	{
		throw ConfigError("distraction.background_id must be in {0,1,2,3}, got " + std::to_string(background_id));
	}
	if (camera_jitter < 0.0 || palette_shift < 0.0)
	{
		throw ConfigError("distraction.camera_jitter and distraction.palette_shift must be non-negative");
	}
}

PomdpConfig reacher_pomdp_config(std::uint64_t seed, int max_episode_steps)
{
	PomdpConfig config;
	config.action_space = {ActionSpace::Kind::continuous, 2, -1.0F, 1.0F};
	config.max_episode_steps = max_episode_steps;
	config.seed = seed;
	config.validate();
	return config;
}

double target_radius(const ReacherPhysics& physics, ReacherDifficulty difficulty)
{
	return difficulty == ReacherDifficulty::easy ? physics.easy_target_radius : physics.hard_target_radius;
}

double wrap_angle(double angle)
{
	double wrapped = std::remainder(angle, 2.0 * kPi);
	if (wrapped <= -kPi)
	{
		wrapped += 2.0 * kPi;
	}
	return wrapped;
}

Vec2 reacher_tip(const ReacherState& state, const ReacherPhysics& physics)
{
	const double q1 = state.joint_angles[0];
	const double q12 = q1 + state.joint_angles[1];
	return {
		physics.link1 * std::cos(q1) + physics.link2 * std::cos(q12),
		physics.link1 * std::sin(q1) + physics.link2 * std::sin(q12)};
}

bool tip_inside_target(const ReacherState& state, const ReacherPhysics& physics)
{
	return dist(reacher_tip(state, physics), state.target_pos) + physics.tip_radius < state.target_radius;
}

std::array<double, 2> reacher_inverse_kinematics(Vec2 point, const ReacherPhysics& physics)
{
	const double l1 = physics.link1;
	const double l2 = physics.link2;
	const double r = std::clamp(std::hypot(point.x, point.y), std::abs(l1 - l2) + 1e-9, l1 + l2 - 1e-9);
	const double cos_q2 = std::clamp((r * r - l1 * l1 - l2 * l2) / (2.0 * l1 * l2), -1.0, 1.0);
	const double q2 = -std::acos(cos_q2);
	const double q1 = std::atan2(point.y, point.x) - std::atan2(l2 * std::sin(q2), l1 + l2 * std::cos(q2));
	return {wrap_angle(q1), wrap_angle(q2)};
}

DistractionSample sample_distraction(const DistractionConfig& config, std::mt19937_64& rng)
{
	DistractionSample sample;
	if (!config.enabled)
	{
		return sample;
	}
	sample.enabled = true;
	std::uniform_real_distribution<double> unit(-1.0, 1.0);
	sample.background_id = config.per_episode_reseed
													 ? static_cast<int>(rng() % kReacherBackgroundCount)
													 : config.background_id;
	sample.camera_angle = config.camera_jitter * unit(rng);
	for (int c = 0; c < 3; ++c)
	{
		sample.arm_shift[c] = config.palette_shift * unit(rng);
		sample.target_shift[c] = config.palette_shift * unit(rng);
	}
	sample.pattern_seed = rng();
	return sample;
}

ReacherState reacher_reset(ReacherDifficulty difficulty, std::mt19937_64& rng, const ReacherPhysics& physics)
{
	std::uniform_real_distribution<double> angle(-kPi, kPi);
	ReacherState state;
	state.joint_angles = {wrap_angle(angle(rng)), wrap_angle(angle(rng))};
	state.target_pos = physics.target;
	state.target_radius = target_radius(physics, difficulty);
	return state;
}

StepResult reacher_step(
	ReacherState& state,
	std::array<double, 2> action,
	const DistractionSample& distraction,
	int max_episode_steps,
	const ReacherPhysics& physics)
{
	if (state.done)
	{
		throw UsageError("reacher_step: episode is done, reset before stepping");
	}
	bool clamped = false;
	for (auto& a : action)
	{
		const double c = std::clamp(std::isfinite(a) ? a : 0.0, -1.0, 1.0);
		clamped = clamped || c != a;
		a = c;
	}
	if (clamped)
	{
		const long count = ++g_clamp_count;
		if (count <= 5 || count % 1000 == 0)
		{
			log::warn("reacher_step: action outside [-1, 1] clamped ({} occurrences so far)", count);
		}
	}

	const double m1 = physics.mass1;
	const double m2 = physics.mass2;
	const double l1 = physics.link1;
	const double c1 = 0.5 * physics.link1;
	const double c2 = 0.5 * physics.link2;
	const double i1 = m1 * physics.link1 * physics.link1 / 12.0;
	const double i2 = m2 * physics.link2 * physics.link2 / 12.0;
	const double q2 = state.joint_angles[1];
	const double qd1 = state.joint_velocities[0];
	const double qd2 = state.joint_velocities[1];

	const double m11 = i1 + i2 + m1 * c1 * c1 + m2 * (l1 * l1 + c2 * c2 + 2.0 * l1 * c2 * std::cos(q2));
	const double m12 = i2 + m2 * (c2 * c2 + l1 * c2 * std::cos(q2));
	const double m22 = i2 + m2 * c2 * c2;
	const double h = m2 * l1 * c2 * std::sin(q2);
	const double coriolis1 = -h * qd2 * (2.0 * qd1 + qd2);
	const double coriolis2 = h * qd1 * qd1;

	const double f1 = physics.max_torque * action[0] - coriolis1 - physics.damping * qd1;
	const double f2 = physics.max_torque * action[1] - coriolis2 - physics.damping * qd2;
	const double det = m11 * m22 - m12 * m12;
	const double qdd1 = (m22 * f1 - m12 * f2) / det;
	const double qdd2 = (m11 * f2 - m12 * f1) / det;

	state.joint_velocities[0] += physics.dt * qdd1;
	state.joint_velocities[1] += physics.dt * qdd2;
	state.joint_angles[0] = wrap_angle(state.joint_angles[0] + physics.dt * state.joint_velocities[0]);
	state.joint_angles[1] = wrap_angle(state.joint_angles[1] + physics.dt * state.joint_velocities[1]);
	++state.step_count;
	state.done = state.step_count >= max_episode_steps;

	const double reward = tip_inside_target(state, physics) ? 1.0 : 0.0;
	return {reacher_render(state, distraction, physics), reward, state.done};
}

Observation reacher_render(const ReacherState& state, const DistractionSample& distraction, const ReacherPhysics& physics)
{
	Observation obs;
	const Vec2 elbow = {physics.link1 * std::cos(state.joint_angles[0]), physics.link1 * std::sin(state.joint_angles[0])};
	const Vec2 tip = reacher_tip(state, physics);
	const double cos_a = std::cos(distraction.camera_angle);
	const double sin_a = std::sin(distraction.camera_angle);
	const double t = state.step_count * physics.dt;

	const Rgb target_color = shifted(kTargetColor, distraction.target_shift);
	const Rgb arm_color = shifted(kArmColor, distraction.arm_shift);
	const Rgb tip_color = shifted(kTipColor, distraction.arm_shift);
	const Rgb base_color = shifted(kBaseColor, {});

	for (int py = 0; py < kImageSize; ++py)
	{
		for (int px = 0; px < kImageSize; ++px)
		{
			const double vx = (px + 0.5 - 0.5 * kImageSize) / kPixelsPerUnit;
			const double vy = -(py + 0.5 - 0.5 * kImageSize) / kPixelsPerUnit;
			const Vec2 p = {cos_a * vx - sin_a * vy, sin_a * vx + cos_a * vy};

			Rgb color;
			if (dist(p, tip) <= physics.tip_radius)
			{
				color = tip_color;
			}
			else if (dist_to_segment(p, elbow, tip) <= kLink2Width)
			{
				color = arm_color;
			}
			else if (dist(p, {}) <= kBaseRadius)
			{
				color = base_color;
			}
			else if (dist_to_segment(p, {}, elbow) <= kLink1Width)
			{
				color = arm_color;
			}
			else if (dist(p, state.target_pos) <= state.target_radius)
			{
				color = target_color;
			}
			else if (distraction.enabled)
			{
				color = distractor_background(
					distraction, (px + 0.5) / kImageSize, (py + 0.5) / kImageSize, t);
			}
			else
			{
				const double gx = std::abs(std::remainder(p.x, kFloorLineSpacing));
				const double gy = std::abs(std::remainder(p.y, kFloorLineSpacing));
				const bool line = std::min(gx, gy) < 0.5 / kPixelsPerUnit;
				color = shifted(line ? kFloorLineColor : kFloorColor, {});
			}
			obs.set(py, px, color);
		}
	}
	return obs;
}

GoalSpec make_reacher_goal(ReacherDifficulty difficulty, GoalPrior prior, const ReacherPhysics& physics)
{
	ReacherState state;
	state.target_pos = physics.target;
	state.target_radius = target_radius(physics, difficulty);
	state.joint_angles = reacher_inverse_kinematics(physics.target, physics);
	return {reacher_render(state, DistractionSample{}, physics), prior, 1.0};
}

Reacher::Reacher(ReacherDifficulty difficulty, DistractionConfig distraction, std::uint64_t seed, int max_episode_steps)
		: difficulty_(difficulty)
		, distraction_(distraction)
		, config_(reacher_pomdp_config(seed, max_episode_steps))
		, state_rng_(seed)
		, distraction_rng_(mix(seed + 0x5DEECE66DULL))
{
	distraction_.validate();
	distraction_sample_ = sample_distraction(distraction_, distraction_rng_);
	state_ = reacher_reset(difficulty_, state_rng_, physics_);
}

std::string Reacher::name() const
{
	return std::string("reacher_") + (difficulty_ == ReacherDifficulty::easy ? "easy" : "hard") +
				 (distraction_.enabled ? "_distracting" : "");
}

Observation Reacher::reset()
{
	state_ = reacher_reset(difficulty_, state_rng_, physics_);
	if (distraction_.per_episode_reseed)
	{
		distraction_sample_ = sample_distraction(distraction_, distraction_rng_);
	}
	return render();
}

StepResult Reacher::step(std::array<double, 2> action)
{
	return reacher_step(state_, action, distraction_sample_, config_.max_episode_steps, physics_);
}

StepResult Reacher::step_encoded(std::span<const float> action)
{
	if (action.size() != 2)
	{
		throw ContractError("Reacher expects a 2-dimensional action");
	}
	return step({static_cast<double>(action[0]), static_cast<double>(action[1])});
}

GoalSpec Reacher::goal(GoalPrior prior) const
{
	return make_reacher_goal(difficulty_, prior, physics_);
}

EnvMetadata Reacher::metadata() const
{
	return {config_.seed, distraction_sample_};
}

std::string Reacher::rng_state() const
{
	std::ostringstream out;
	out << state_rng_ << ' ' << distraction_rng_;
	return out.str();
}

void Reacher::set_rng_state(const std::string& state)
{
	std::istringstream in(state);
	in >> state_rng_ >> distraction_rng_;
	if (!in)
	{
		throw ContractError("Reacher::set_rng_state: malformed engine state");
	}
}

} // namespace caif::envs
