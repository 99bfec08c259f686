#include "support/doctest_torch.h"

#include "caif/common/errors.h"
#include "caif/envs/factory.h"
#include "caif/envs/grid_world.h"
#include "caif/envs/reacher.h"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using namespace caif;
using namespace caif::envs;

namespace
{

Rgb pixel(const Observation& obs, int y, int x)
{
	return {obs.at(y, x, 0), obs.at(y, x, 1), obs.at(y, x, 2)};
}

bool is_goal_green(const Rgb& c)
{
	return c == Rgb{0, 255, 0};
}

int count_green(const Observation& obs)
{
	int n = 0;
	for (int y = 0; y < kImageSize; ++y)
	{
		for (int x = 0; x < kImageSize; ++x)
		{
			n += is_goal_green(pixel(obs, y, x)) ? 1 : 0;
		}
	}
	return n;
}

std::vector<float> normalized(const Observation& obs)
{
	std::vector<float> out(obs.pixels.size());
	for (std::size_t i = 0; i < out.size(); ++i)
	{
		out[i] = normalize_pixel(obs.pixels[i]);
	}
	return out;
}

} // namespace

TEST_SUITE("envs")
{
	TEST_CASE("grid reset places agent top-left and goal bottom-right")
	{
		for (int size : {6, 8})
		{
			auto state = grid_reset(size);
			CHECK(state.agent_pos == Cell{1, 1});
			CHECK(state.goal_pos == Cell{size - 2, size - 2});
			CHECK(state.step_count == 0);
			CHECK_FALSE(state.done);
		}
		CHECK_THROWS_AS(grid_reset(7), ConfigError);
		CHECK_THROWS_AS(GridWorld(5), ConfigError);
	}

	TEST_CASE("grid reset is deterministic and max steps follow 4 size^2")
	{
		GridWorld a(6, 1);
		GridWorld b(6, 1);
		CHECK(a.reset() == b.reset());
		CHECK(a.config().max_episode_steps == 144);
		CHECK(GridWorld(8).config().max_episode_steps == 256);
	}

	TEST_CASE("grid moves: wall blocks, turns rotate, reward formula")
	{
		auto state = grid_reset(6);
		state.agent_dir = Heading::north;
		auto result = grid_step(state, GridAction::move_forward, 144);
		CHECK(state.agent_pos == Cell{1, 1});
		CHECK(result.reward == 0.0);
		CHECK_FALSE(result.done);

		grid_step(state, GridAction::turn_left, 144);
		CHECK(state.agent_dir == Heading::west);
		CHECK(state.agent_pos == Cell{1, 1});
		grid_step(state, GridAction::turn_right, 144);
		CHECK(state.agent_dir == Heading::north);

		// Goal reached on the very first step pays exactly 1.
		auto near = grid_reset(6);
		near.agent_pos = {4, 3};
		near.agent_dir = Heading::south;
		auto first = grid_step(near, GridAction::move_forward, 144);
		CHECK(first.done);
		CHECK(first.reward == doctest::Approx(1.0).epsilon(1e-15));
		CHECK_THROWS_AS(grid_step(near, GridAction::turn_left, 144), UsageError);

		auto later = grid_reset(6);
		later.agent_pos = {4, 3};
		later.agent_dir = Heading::south;
		later.step_count = 72;
		CHECK(grid_step(later, GridAction::move_forward, 144).reward == doctest::Approx(1.0 - 0.9 * 0.5));
	}

	TEST_CASE("grid timeout ends the episode with zero reward")
	{
		GridWorld env(6, 0, 3);
		env.reset();
		StepResult r;
		for (int i = 0; i < 3; ++i)
		{
			r = env.step(GridAction::turn_left);
		}
		CHECK(r.done);
		CHECK(r.reward == 0.0);
		CHECK_THROWS_AS(env.step(GridAction::turn_left), UsageError);
	}

	TEST_CASE("grid rewards: one nonzero reward in [0,1] per successful episode (random walks)")
	{
		std::mt19937_64 rng(7);
		std::uniform_int_distribution<int> pick(0, 2);
		for (int episode = 0; episode < 40; ++episode)
		{
			GridWorld env(6);
			env.reset();
			int nonzero = 0;
			bool reached = false;
			while (!env.done())
			{
				auto r = env.step(static_cast<GridAction>(pick(rng)));
				CHECK(r.reward >= 0.0);
				CHECK(r.reward <= 1.0);
				nonzero += r.reward > 0.0 ? 1 : 0;
				reached = reached || env.state().agent_pos == env.state().goal_pos;
			}
			CHECK(nonzero == (reached ? 1 : 0));
		}
	}

	TEST_CASE("grid render: deterministic, goal visibility, agent on goal")
	{
		auto state = grid_reset(6);
		CHECK(grid_render(state) == grid_render(state));

		// Facing east from the start, the goal lies 3 ahead and 3 to the right: inside the view.
		CHECK(count_green(grid_render(state)) > 0);
		// Facing west the goal is behind the agent.
		state.agent_dir = Heading::west;
		CHECK(count_green(grid_render(state)) == 0);

		auto goal = make_grid_goal(6);
		int green_under_agent = 0;
		bool red = false;
		// The agent occupies the bottom-center tile of the view.
		for (int y = 64 * 6 / 7; y < 64; ++y)
		{
			for (int x = 64 * 3 / 7; x < 64 * 4 / 7; ++x)
			{
				green_under_agent += is_goal_green(pixel(goal.image, y, x)) ? 1 : 0;
				red = red || pixel(goal.image, y, x) == Rgb{255, 0, 0};
			}
		}
		CHECK(green_under_agent > 0);
		CHECK(red);
	}

	TEST_CASE("goal image under its own Laplace prior has log-density -12288 ln 2")
	{
		auto goal = make_grid_goal(6);
		const double expected = -12288.0 * std::log(2.0);
		CHECK(goal.log_density(normalized(goal.image)) == doctest::Approx(expected).epsilon(1e-12));
		CHECK(goal.peak_log_density() == doctest::Approx(expected).epsilon(1e-12));
		CHECK(std::abs(expected + 8517.39) < 0.01);

		auto gaussian = make_grid_goal(6, Heading::east, GoalPrior::gaussian);
		CHECK(gaussian.image == goal.image);
		CHECK(gaussian.log_density(normalized(gaussian.image)) ==
					doctest::Approx(-0.5 * 12288.0 * std::log(2.0 * std::numbers::pi)));
	}

	TEST_CASE("reacher targets and goal images")
	{
		ReacherPhysics physics;
		CHECK(target_radius(physics, ReacherDifficulty::easy) > target_radius(physics, ReacherDifficulty::hard));

		auto angles = reacher_inverse_kinematics(physics.target, physics);
		ReacherState state;
		state.joint_angles = angles;
		auto tip = reacher_tip(state, physics);
		CHECK(tip.x == doctest::Approx(physics.target.x).epsilon(1e-9));
		CHECK(tip.y == doctest::Approx(physics.target.y).epsilon(1e-9));

		auto easy = make_reacher_goal(ReacherDifficulty::easy);
		auto hard = make_reacher_goal(ReacherDifficulty::hard);
		CHECK_FALSE(easy.image == hard.image);

		Reacher distracting(ReacherDifficulty::easy, DistractionConfig{true}, 3);
		CHECK(distracting.goal().image == easy.image);
	}

	TEST_CASE("reacher reward iff the tip disc lies inside the target")
	{
		ReacherPhysics physics;
		ReacherState state;
		state.target_pos = physics.target;
		state.target_radius = target_radius(physics, ReacherDifficulty::easy);
		state.joint_angles = reacher_inverse_kinematics(physics.target, physics);
		auto r = reacher_step(state, {0.0, 0.0}, {}, 1000, physics);
		CHECK(r.reward == 1.0);

		state.joint_angles = {std::numbers::pi / 2, 0.0};
		state.joint_velocities = {0.0, 0.0};
		CHECK(reacher_step(state, {0.0, 0.0}, {}, 1000, physics).reward == 0.0);

		// Boundary: distance + tip radius must be strictly below the target radius.
		ReacherState edge;
		edge.target_radius = 0.3;
		const double reach = physics.link1 + physics.link2;
		edge.target_pos = {reach - (0.3 - physics.tip_radius) + 1e-9, 0.0};
		CHECK(tip_inside_target(edge, physics));
		edge.target_pos = {reach - (0.3 - physics.tip_radius) - 1e-6, 0.0};
		CHECK_FALSE(tip_inside_target(edge, physics));
	}

	TEST_CASE("reacher containment is symmetric under rotating arm and target")
	{
		ReacherPhysics physics;
		std::mt19937_64 rng(11);
		std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
		std::uniform_real_distribution<double> radius(0.05, 0.6);
		for (int i = 0; i < 300; ++i)
		{
			ReacherState s;
			s.joint_angles = {angle(rng), angle(rng)};
			s.target_radius = radius(rng);
			const double a = angle(rng);
			const double d = 1.5 * (angle(rng) + std::numbers::pi) / (2 * std::numbers::pi);
			s.target_pos = {d * std::cos(a), d * std::sin(a)};
			const double rot = angle(rng);
			ReacherState r = s;
			r.joint_angles[0] = wrap_angle(s.joint_angles[0] + rot);
			r.target_pos = {
				std::cos(rot) * s.target_pos.x - std::sin(rot) * s.target_pos.y,
				std::sin(rot) * s.target_pos.x + std::cos(rot) * s.target_pos.y};
			const auto tip = reacher_tip(s, physics);
			const double margin = std::abs(
				std::hypot(tip.x - s.target_pos.x, tip.y - s.target_pos.y) + physics.tip_radius - s.target_radius);
			if (margin > 1e-9)
			{
				CHECK(tip_inside_target(s, physics) == tip_inside_target(r, physics));
			}
		}
	}

	TEST_CASE("reacher dynamics: rest stays at rest, clamping, fixed episode length")
	{
		ReacherPhysics physics;
		ReacherState state;
		state.joint_angles = {0.3, -0.4};
		state.target_pos = physics.target;
		state.target_radius = 0.3;
		auto before = state.joint_angles;
		reacher_step(state, {0.0, 0.0}, {}, 1000, physics);
		CHECK(state.joint_angles[0] == before[0]);
		CHECK(state.joint_angles[1] == before[1]);

		ReacherState a = state;
		ReacherState b = state;
		reacher_step(a, {2.0, 2.0}, {}, 1000, physics);
		reacher_step(b, {1.0, 1.0}, {}, 1000, physics);
		CHECK(a.joint_angles == b.joint_angles);
		CHECK(a.joint_velocities == b.joint_velocities);

		Reacher env(ReacherDifficulty::easy, {}, 0, 5);
		env.reset();
		int steps = 0;
		while (!env.done())
		{
			env.step({0.1, -0.1});
			++steps;
		}
		CHECK(steps == 5);
		CHECK(Reacher(ReacherDifficulty::hard).config().max_episode_steps == 1000);
	}

	TEST_CASE("reacher: same seed same start, distractions never change dynamics")
	{
		Reacher a(ReacherDifficulty::easy, {}, 42);
		Reacher b(ReacherDifficulty::easy, {}, 42);
		DistractionConfig on;
		on.enabled = true;
		Reacher c(ReacherDifficulty::easy, on, 42);
		CHECK(a.reset() == b.reset());
		auto plain = a.state();
		c.reset();
		CHECK(c.state().joint_angles == plain.joint_angles);

		std::mt19937_64 rng(5);
		std::uniform_real_distribution<double> u(-1.0, 1.0);
		bool pixels_differ = false;
		for (int t = 0; t < 50; ++t)
		{
			std::array<double, 2> action = {u(rng), u(rng)};
			auto ra = a.step(action);
			auto rc = c.step(action);
			CHECK(a.state().joint_angles == c.state().joint_angles);
			CHECK(a.state().joint_velocities == c.state().joint_velocities);
			CHECK(ra.reward == rc.reward);
			pixels_differ = pixels_differ || !(ra.observation == rc.observation);
		}
		CHECK(pixels_differ);
	}

	TEST_CASE("reacher render: deterministic, backgrounds change only background pixels")
	{
		ReacherPhysics physics;
		ReacherState state;
		state.joint_angles = {0.5, 1.0};
		state.target_pos = physics.target;
		state.target_radius = 0.3;
		CHECK(reacher_render(state, {}, physics) == reacher_render(state, {}, physics));

		DistractionSample s0;
		s0.enabled = true;
		s0.background_id = 0;
		s0.pattern_seed = 9;
		auto s1 = s0;
		s1.background_id = 2;
		auto img0 = reacher_render(state, s0, physics);
		auto img1 = reacher_render(state, s1, physics);
		CHECK_FALSE(img0 == img1);
		// Foreground pixels (arm, tip, target) agree across backgrounds.
		int shared = 0;
		for (int y = 0; y < kImageSize; ++y)
		{
			for (int x = 0; x < kImageSize; ++x)
			{
				shared += pixel(img0, y, x) == pixel(img1, y, x) ? 1 : 0;
			}
		}
		CHECK(shared > 0);
	}

	TEST_CASE("render shape and environment factory")
	{
		EnvConfig grid;
		auto env = make_environment(grid, 0);
		CHECK(env->name() == "grid6");
		CHECK(env->reset().pixels.size() == 64u * 64u * 3u);
		EnvConfig bad;
		bad.grid_size = 7;
		CHECK_THROWS_AS(bad.validate(), ConfigError);
		EnvConfig reacher;
		reacher.task = Task::reacher;
		reacher.distraction.enabled = true;
		auto r = make_environment(reacher, 0);
		CHECK(r->config().action_space.size == 2);
		CHECK_FALSE(r->config().action_space.is_discrete());
		CHECK(parse_task("reacher") == Task::reacher);
		CHECK_THROWS_AS(parse_task("maze"), ConfigError);
	}

	TEST_CASE("reacher rng state round-trips")
	{
		DistractionConfig on;
		on.enabled = true;
		Reacher a(ReacherDifficulty::easy, on, 3);
		a.reset();
		const auto saved = a.rng_state();
		auto first = a.reset();
		a.set_rng_state(saved);
		CHECK(a.reset() == first);
	}
}
