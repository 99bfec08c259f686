#include "caif/analysis/reports.h"

#include "caif/common/errors.h"
#include "caif/common/log.h"
#include "caif/common/png.h"
#include "caif/trainer/trainer.h"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

namespace caif::analysis
{

namespace
{

constexpr int kTilePixels = 32;

std::vector<double> to_vector(const torch::Tensor& t)
{
	auto values = t.detach().to(torch::kFloat64).contiguous();
	return {values.data_ptr<double>(), values.data_ptr<double>() + values.numel()};
}

envs::ReacherState pose_state(const std::array<double, 2>& angles, envs::ReacherDifficulty difficulty, const envs::ReacherPhysics& physics)
{
	envs::ReacherState state;
	state.joint_angles = angles;
	state.target_pos = physics.target;
	state.target_radius = envs::target_radius(physics, difficulty);
	return state;
}

} // namespace

world_model::LatentState infer_static_states(
	trainer::Agent& agent, const std::vector<envs::Observation>& observations, int frames)
{
	if (observations.empty())
	{
		throw ContractError("infer_static_states needs at least one observation");
	}
	if (frames < 1)
	{
		throw ContractError("infer_static_states needs at least one frame");
	}
	torch::NoGradGuard no_grad;
	auto& model = *agent.world_model();
	const auto n = static_cast<int64_t>(observations.size());
	auto features = model.encode(world_model::observations_to_tensor(observations));
	auto state = model.initial_state(n);
	auto action = torch::zeros({n, agent.action_space().encoding_dim()});
	for (int f = 0; f < frames; ++f)
	{
		auto belief = model.posterior_infer(state, action, features);
		state = {belief.h, belief.dist.mean, belief.dist};
	}
	return state;
}

std::vector<double> observation_utilities(trainer::Agent& agent, const std::vector<envs::Observation>& observations)
{
	torch::NoGradGuard no_grad;
	auto states = infer_static_states(agent, observations);
	auto negatives = agent.world_model()->encode(world_model::observations_to_tensor(observations));
	return to_vector(-agent.step_utility(states, negatives));
}

double HeatmapReport::rank_fraction(int x, int y) const
{
	const double value = tile_mean(x, y);
	int better = 0;
	int tiles = 0;
	for (double v : mean)
	{
		if (std::isnan(v))
		{
			continue;
		}
		++tiles;
		better += v > value ? 1 : 0;
	}
	return static_cast<double>(better + 1) / tiles;
}

void HeatmapReport::write_csv(const std::filesystem::path& path) const
{
	std::ofstream out(path);
	if (!out)
	{
		throw std::runtime_error("cannot write " + path.string());
	}
	out << "x,y,heading,utility\n";
	for (const auto& p : poses)
	{
		out << fmt::format("{},{},{},{:.9g}\n", p.x, p.y, p.heading, p.utility);
	}
	out << "\nx,y,mean,max\n";
	for (int y = 0; y < grid_size; ++y)
	{
		for (int x = 0; x < grid_size; ++x)
		{
			const auto i = static_cast<std::size_t>(y * grid_size + x);
			if (!std::isnan(mean[i]))
			{
				out << fmt::format("{},{},{:.9g},{:.9g}\n", x, y, mean[i], max[i]);
			}
		}
	}
}

void HeatmapReport::write_png(const std::filesystem::path& path, bool use_max) const
{
	const auto& values = use_max ? max : mean;
	double lo = std::numeric_limits<double>::infinity();
	double hi = -lo;
	for (double v : values)
	{
		if (!std::isnan(v))
		{
			lo = std::min(lo, v);
			hi = std::max(hi, v);
		}
	}
	const int side = grid_size * kTilePixels;
	std::vector<std::uint8_t> rgb(static_cast<std::size_t>(side) * side * 3);
	const auto goal = envs::grid_reset(grid_size).goal_pos;
	for (int py = 0; py < side; ++py)
	{
		for (int px = 0; px < side; ++px)
		{
			const int x = px / kTilePixels;
			const int y = py / kTilePixels;
			const double v = values[static_cast<std::size_t>(y * grid_size + x)];
			std::array<std::uint8_t, 3> color{};
			if (std::isnan(v))
			{
				color = {40, 40, 160};
			}
			else
			{
				const double t = hi > lo ? (v - lo) / (hi - lo) : 0.5;
				const auto gray = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - t)));
				color = {gray, gray, gray};
			}
			const int ix = px % kTilePixels;
			const int iy = py % kTilePixels;
			const bool border = ix < 2 || iy < 2 || ix >= kTilePixels - 2 || iy >= kTilePixels - 2;
			if (border && x == goal.x && y == goal.y)
			{
				color = {0, 200, 0};
			}
			auto* dst = &rgb[(static_cast<std::size_t>(py) * side + px) * 3];
			std::copy(color.begin(), color.end(), dst);
		}
	}
	caif::write_png(path, side, side, rgb);
}

HeatmapReport grid_utility_heatmap(trainer::Agent& agent, int grid_size)
{
	auto base = envs::grid_reset(grid_size);
	std::vector<envs::Observation> observations;
	HeatmapReport report;
	report.grid_size = grid_size;
	report.agent_kind = trainer::to_string(agent.kind());
	for (int y = 0; y < grid_size; ++y)
	{
		for (int x = 0; x < grid_size; ++x)
		{
			if (!envs::grid_is_interior(base, {x, y}))
			{
				continue;
			}
			for (int heading = 0; heading < 4; ++heading)
			{
				auto state = base;
				state.agent_pos = {x, y};
				state.agent_dir = static_cast<envs::Heading>(heading);
				observations.push_back(envs::grid_render(state));
				report.poses.push_back({x, y, heading, 0.0});
			}
		}
	}
	auto utilities = observation_utilities(agent, observations);
	const auto tiles = static_cast<std::size_t>(grid_size * grid_size);
	report.mean.assign(tiles, std::numeric_limits<double>::quiet_NaN());
	report.max.assign(tiles, std::numeric_limits<double>::quiet_NaN());
	std::vector<int> counts(tiles, 0);
	for (std::size_t i = 0; i < report.poses.size(); ++i)
	{
		auto& pose = report.poses[i];
		pose.utility = utilities[i];
		if (!std::isfinite(pose.utility))
		{
			throw DivergenceError(fmt::format("non-finite utility at tile ({}, {})", pose.x, pose.y));
		}
		const auto t = static_cast<std::size_t>(pose.y * grid_size + pose.x);
		report.mean[t] = counts[t] == 0 ? pose.utility : report.mean[t] + pose.utility;
		report.max[t] = counts[t] == 0 ? pose.utility : std::max(report.max[t], pose.utility);
		++counts[t];
	}
	report.low = std::numeric_limits<double>::infinity();
	report.high = -report.low;
	for (std::size_t t = 0; t < tiles; ++t)
	{
		if (counts[t] > 0)
		{
			report.mean[t] /= counts[t];
			report.low = std::min(report.low, report.mean[t]);
			report.high = std::max(report.high, report.mean[t]);
		}
	}
	return report;
}

std::vector<double> normalize_unit_range(const std::vector<double>& values, bool* degenerate)
{
	if (values.empty())
	{
		return {};
	}
	const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
	const double low = *lo;
	const double high = *hi;
	std::vector<double> out(values.size(), 0.5);
	const bool flat = !(high > low);
	if (degenerate)
	{
		*degenerate = flat;
	}
	if (flat)
	{
		log::warn("all {} utilities are equal ({}); normalized values set to 0.5", values.size(), low);
		return out;
	}
	for (std::size_t i = 0; i < values.size(); ++i)
	{
		out[i] = (values[i] - low) / (high - low);
	}
	return out;
}

std::vector<std::array<double, 2>> default_reacher_poses(const envs::ReacherPhysics& physics)
{
	std::vector<std::array<double, 2>> poses = {envs::reacher_inverse_kinematics(physics.target, physics)};
	for (int i = 0; i < 8; ++i)
	{
		for (double elbow : {-2.0, -1.0, 0.0, 1.0, 2.0})
		{
			poses.push_back({envs::wrap_angle(-std::numbers::pi + i * std::numbers::pi / 4.0), elbow});
		}
	}
	return poses;
}

PoseTable pose_utility_table(
	trainer::Agent& agent, const std::vector<std::array<double, 2>>& joint_angles, envs::ReacherDifficulty difficulty)
{
	if (joint_angles.empty())
	{
		throw ContractError("pose_utility_table needs at least one pose");
	}
	const envs::ReacherPhysics physics;
	std::vector<envs::Observation> observations;
	for (const auto& angles : joint_angles)
	{
		observations.push_back(envs::reacher_render(pose_state(angles, difficulty, physics), {}, physics));
	}
	PoseTable table;
	table.poses = joint_angles;
	table.raw = observation_utilities(agent, observations);
	table.normalized = normalize_unit_range(table.raw, &table.degenerate);
	return table;
}

std::vector<WallclockEntry> wallclock_report(const WallclockConfig& config)
{
	if (config.updates < 1)
	{
		throw ConfigError("wallclock_report needs at least one timed update");
	}
	auto env = envs::make_environment(config.env, config.seed);
	std::mt19937_64 rng(config.seed);
	auto buffer = trainer::seed_buffer(*env, config.seed_episodes, rng);

	std::vector<WallclockEntry> entries;
	for (auto kind : config.kinds)
	{
		torch::manual_seed(config.seed);
		trainer::AgentConfig agent_config;
		agent_config.kind = kind;
		agent_config.returns.horizon = config.horizon;
		trainer::Agent agent(agent_config, env->config().action_space, env->goal());
		std::mt19937_64 batch_rng(config.seed + 1);
		for (int u = 0; u < config.warmup_updates; ++u)
		{
			agent.update(buffer.sample(config.batch_size, config.sequence_length, batch_rng));
		}
		double elapsed = 0.0;
		for (int u = 0; u < config.updates; ++u)
		{
			auto batch = buffer.sample(config.batch_size, config.sequence_length, batch_rng);
			const auto start = std::chrono::steady_clock::now();
			agent.update(batch);
			elapsed += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
		}
		entries.push_back({kind, elapsed / config.updates, 0.0});
		log::info("{}: {:.4f} s/update", trainer::to_string(kind), entries.back().seconds_per_update);
	}
	auto dreamer = std::find_if(
		entries.begin(), entries.end(), [](const WallclockEntry& e) { return e.kind == trainer::AgentKind::dreamer; });
	const double reference = dreamer != entries.end() ? dreamer->seconds_per_update : entries.front().seconds_per_update;
	for (auto& e : entries)
	{
		e.relative_to_dreamer = e.seconds_per_update / reference;
	}
	return entries;
}

std::string to_text(const std::vector<WallclockEntry>& entries)
{
	std::string out = fmt::format("{:<22} {:>14} {:>12}\n", "agent", "s/update", "vs dreamer");
	for (const auto& e : entries)
	{
		out += fmt::format("{:<22} {:>14.4f} {:>12.2f}\n", trainer::to_string(e.kind), e.seconds_per_update, e.relative_to_dreamer);
	}
	return out;
}

void reconstruction_dump(
	trainer::Agent& agent, const std::vector<trainer::EpisodeRecord>& episodes, const std::filesystem::path& path, int max_frames)
{
	if (!agent.world_model()->has_decoder())
	{
		throw ConfigError(
			"reconstructions need a decoder; " + trainer::to_string(agent.kind()) + " agents learn without one");
	}
	if (episodes.empty() || max_frames < 1)
	{
		throw ContractError("reconstruction_dump needs at least one episode and one frame");
	}
	torch::NoGradGuard no_grad;
	const int size = envs::kImageSize;
	const int width = max_frames * size;
	const int height = static_cast<int>(episodes.size()) * 2 * size;
	std::vector<std::uint8_t> rgb(static_cast<std::size_t>(width) * height * 3, 0);
	auto blit = [&](const envs::Observation& obs, int col, int row) {
		for (int y = 0; y < size; ++y)
		{
			auto* dst = &rgb[((static_cast<std::size_t>(row) * size + y) * width + static_cast<std::size_t>(col) * size) * 3];
			const auto* src = &obs.pixels[static_cast<std::size_t>(y) * size * 3];
			std::copy_n(src, size * 3, dst);
		}
	};
	for (std::size_t e = 0; e < episodes.size(); ++e)
	{
		const auto& episode = episodes[e];
		const auto frames = std::min<std::size_t>(static_cast<std::size_t>(max_frames), episode.steps());
		trainer::ReplayBuffer single;
		single.add(episode);
		auto batch = single.gather({{0, 0}}, static_cast<int>(frames));
		auto inference = agent.world_model()->observe(batch.observations, batch.prev_actions);
		auto decoded = agent.world_model()->decode(inference.posterior.features().flatten(0, 1));
		for (std::size_t t = 0; t < frames; ++t)
		{
			blit(episode.observations[t], static_cast<int>(t), static_cast<int>(2 * e));
			blit(world_model::tensor_to_observation(decoded[static_cast<int64_t>(t)]), static_cast<int>(t), static_cast<int>(2 * e + 1));
		}
	}
	caif::write_png(path, width, height, rgb);
}

std::vector<double> goal_critic_scores(trainer::Agent& agent, const std::vector<envs::Observation>& observations)
{
	torch::NoGradGuard no_grad;
	auto& model = *agent.world_model();
	auto states = infer_static_states(agent, observations);
	const auto& goal_image = agent.goal().image;
	auto goal = model.obs_embedding(model.encode(world_model::observations_to_tensor(std::span(&goal_image, 1))))[0];
	return to_vector(torch::matmul(model.state_embedding(states.z), goal));
}

InvarianceResult distraction_invariance(
	trainer::Agent& agent,
	const envs::DistractionConfig& distraction,
	envs::ReacherDifficulty difficulty,
	int random_poses,
	std::uint64_t seed)
{
	if (random_poses < 1)
	{
		throw ContractError("distraction_invariance needs at least one random pose");
	}
	const envs::ReacherPhysics physics;
	std::mt19937_64 rng(seed);
	auto config = distraction;
	config.enabled = true;

	std::vector<envs::Observation> goal_views;
	const auto goal_angles = envs::reacher_inverse_kinematics(physics.target, physics);
	for (int background = 0; background < envs::kReacherBackgroundCount; ++background)
	{
		auto sample = envs::sample_distraction(config, rng);
		sample.background_id = background;
		goal_views.push_back(envs::reacher_render(pose_state(goal_angles, difficulty, physics), sample, physics));
	}
	std::vector<envs::Observation> random_views;
	std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
	for (int i = 0; i < random_poses; ++i)
	{
		auto sample = envs::sample_distraction(config, rng);
		random_views.push_back(
			envs::reacher_render(pose_state({angle(rng), angle(rng)}, difficulty, physics), sample, physics));
	}

	InvarianceResult result;
	result.goal_scores = goal_critic_scores(agent, goal_views);
	result.random_scores = goal_critic_scores(agent, random_views);
	int wins = 0;
	for (double g : result.goal_scores)
	{
		for (double r : result.random_scores)
		{
			wins += g > r ? 1 : 0;
		}
	}
	result.win_rate = static_cast<double>(wins) / static_cast<double>(result.goal_scores.size() * result.random_scores.size());
	return result;
}

} // namespace caif::analysis
