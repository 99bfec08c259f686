#include "caif/cli/commands.h"

#include "caif/analysis/efficiency.h"
#include "caif/analysis/reports.h"
#include "caif/common/errors.h"
#include "caif/common/log.h"
#include "caif/trainer/episode.h"

#include <cmath>
#include <fstream>
#include <numeric>

namespace caif::cli
{

namespace fs = std::filesystem;
using nlohmann::json;

namespace
{

void write_text(const fs::path& path, const std::string& text)
{
	std::ofstream out(path);
	if (!out)
	{
		throw std::runtime_error("cannot write " + path.string());
	}
	out << text;
}

fs::path require_run_dir(const AnalyzeOptions& options)
{
	if (!options.run_dir)
	{
		throw ConfigError("report '" + options.report + "' needs a run directory with a checkpoint");
	}
	return *options.run_dir;
}

} // namespace

fs::path default_checkpoint(const fs::path& run_dir)
{
	return run_dir / "checkpoints" / "latest.pt";
}

std::vector<fs::path> cmd_train(const ExperimentConfig& config)
{
	config.validate();
	const auto root = run_root(config.output);
	fs::create_directories(root);
	save_config(root / "config.json", config);
	std::vector<fs::path> dirs;
	for (auto seed : config.seeds)
	{
		const auto dir = seed_directory(root, seed);
		fs::create_directories(dir);
		auto seed_config = config;
		seed_config.seeds = {seed};
		save_config(dir / "config.json", seed_config);
		log::info("training {} seed {} in {}", trainer::to_string(config.agent.kind), seed, dir.string());
		trainer::Trainer trainer(config.env, config.agent, train_config_for_seed(config, seed), dir);
		trainer.run();
		dirs.push_back(dir);
	}
	return dirs;
}

json EvalSummary::to_json() const
{
	return {{"episodes", returns.size()}, {"returns", returns}, {"mean", mean}, {"stddev", stddev}};
}

std::unique_ptr<trainer::Agent> load_agent(const ExperimentConfig& config, const fs::path& checkpoint)
{
	if (!fs::exists(checkpoint))
	{
		throw ConfigError("checkpoint not found: " + checkpoint.string());
	}
	auto env = envs::make_environment(config.env, 0);
	auto agent =
		std::make_unique<trainer::Agent>(config.agent, env->config().action_space, env->goal(config.agent.goal_prior));
	torch::serialize::InputArchive archive;
	archive.load_from(checkpoint.string());
	torch::serialize::InputArchive agent_archive;
	archive.read("agent", agent_archive);
	agent->load(agent_archive);
	return agent;
}

EvalSummary cmd_eval(const fs::path& run_dir, int episodes, std::uint64_t seed, const std::optional<fs::path>& checkpoint)
{
	if (episodes < 0)
	{
		throw ConfigError("episode count must be >= 0");
	}
	const auto config = load_config(run_dir / "config.json");
	EvalSummary summary;
	if (episodes > 0)
	{
		torch::manual_seed(seed);
		auto agent = load_agent(config, checkpoint.value_or(default_checkpoint(run_dir)));
		auto env = envs::make_environment(config.env, seed);
		summary.returns = trainer::evaluate(*agent, *env, episodes);
		const double n = static_cast<double>(summary.returns.size());
		summary.mean = std::accumulate(summary.returns.begin(), summary.returns.end(), 0.0) / n;
		double sq = 0.0;
		for (double r : summary.returns)
		{
			sq += (r - summary.mean) * (r - summary.mean);
		}
		summary.stddev = std::sqrt(sq / n);
	}
	write_text(run_dir / "eval.json", summary.to_json().dump(2) + "\n");
	return summary;
}

std::vector<fs::path> cmd_analyze(const ExperimentConfig& config, const AnalyzeOptions& options)
{
	const auto& report = options.report;
	auto output = options.output_dir.value_or(options.run_dir ? *options.run_dir / "analysis" : run_root(config.output));
	fs::create_directories(output);
	std::vector<fs::path> written;

	if (report == "efficiency")
	{
		auto counts = analysis::efficiency_report(config.agent.arch, envs::make_environment(config.env, 0)->config().action_space.encoding_dim());
		written.push_back(output / "efficiency.txt");
		write_text(written.back(), counts.to_text());
		return written;
	}
	if (report == "wallclock")
	{
		analysis::WallclockConfig wall;
		wall.env = config.env;
		wall.updates = options.wallclock_updates;
		wall.seed = config.seeds.front();
		auto entries = analysis::wallclock_report(wall);
		written.push_back(output / "wallclock.txt");
		write_text(written.back(), analysis::to_text(entries));
		return written;
	}
	if (report != "heatmap" && report != "poses" && report != "reconstructions")
	{
		throw ConfigError(
			"unknown report '" + report + "' (expected heatmap, poses, efficiency, wallclock or reconstructions)");
	}
	if (report == "heatmap" && config.env.task != envs::Task::grid)
	{
		throw ConfigError("the heatmap report is only defined for the grid task");
	}
	if (report == "poses" && config.env.task != envs::Task::reacher)
	{
		throw ConfigError("the poses report is only defined for the reacher task");
	}
	if (report == "reconstructions" && !trainer::components_for(config.agent.kind).decoder)
	{
		throw ConfigError(
			"reconstructions need a decoder; " + trainer::to_string(config.agent.kind) + " agents learn without one");
	}

	const auto run_dir = require_run_dir(options);
	auto agent = load_agent(config, options.checkpoint.value_or(default_checkpoint(run_dir)));
	if (report == "heatmap")
	{
		auto heatmap = analysis::grid_utility_heatmap(*agent, config.env.grid_size);
		written = {output / "heatmap.png", output / "heatmap_max.png", output / "heatmap.csv"};
		heatmap.write_png(written[0]);
		heatmap.write_png(written[1], true);
		heatmap.write_csv(written[2]);
		const auto goal = envs::grid_reset(config.env.grid_size).goal_pos;
		log::info("goal tile is within the top {:.1f}% of tiles", 100.0 * heatmap.rank_fraction(goal.x, goal.y));
	}
	else if (report == "poses")
	{
		auto table = analysis::pose_utility_table(*agent, analysis::default_reacher_poses(), config.env.difficulty);
		written.push_back(output / "poses.csv");
		std::string text = "shoulder,elbow,utility,normalized\n";
		for (std::size_t i = 0; i < table.poses.size(); ++i)
		{
			text += fmt::format(
				"{:.6f},{:.6f},{:.9g},{:.6f}\n", table.poses[i][0], table.poses[i][1], table.raw[i], table.normalized[i]);
		}
		write_text(written.back(), text);
	}
	else
	{
		std::vector<trainer::EpisodeRecord> episodes;
		for (int i = 0; i < 4; ++i)
		{
			const auto path = trainer::episode_path(run_dir, static_cast<std::size_t>(i));
			if (fs::exists(path))
			{
				episodes.push_back(trainer::load_episode(path));
			}
		}
		if (episodes.empty())
		{
			throw ConfigError("no stored episodes under " + (run_dir / "episodes").string());
		}
		written.push_back(output / "reconstructions.png");
		analysis::reconstruction_dump(*agent, episodes, written.back());
	}
	return written;
}

} // namespace caif::cli
