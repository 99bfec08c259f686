#include "caif/cli/commands.h"
#include "caif/common/errors.h"
#include "caif/common/log.h"

#include <CLI11.hpp>

#include <iostream>

namespace
{

using namespace caif;

int run(int argc, char** argv)
{
	CLI::App app{"Contrastive active inference agents on pixel tasks"};
	app.require_subcommand(1);
	std::string log_level;
	app.add_option("--log-level", log_level, "debug, info, warn, error or off (default: from config)");

	std::string config_path;
	std::vector<std::string> overrides;

	auto* train = app.add_subcommand("train", "Train every seed listed in a config");
	train->add_option("-c,--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
	train->add_option("--set", overrides, "Override a config key, e.g. --set training.updates=10");

	std::string run_dir;
	int episodes = 10;
	std::uint64_t seed = 0;
	std::string checkpoint;
	auto* eval = app.add_subcommand("eval", "Evaluate a trained checkpoint with the deterministic policy");
	eval->add_option("-r,--run-dir", run_dir, "Seed directory written by train")->required()->check(CLI::ExistingDirectory);
	eval->add_option("-n,--episodes", episodes, "Number of evaluation episodes")->check(CLI::NonNegativeNumber);
	eval->add_option("--seed", seed, "Environment and sampling seed");
	eval->add_option("--checkpoint", checkpoint, "Checkpoint file (default: <run-dir>/checkpoints/latest.pt)");

	caif::cli::AnalyzeOptions analyze_options;
	std::string output_dir;
	auto* analyze = app.add_subcommand("analyze", "Write an analysis report");
	analyze->add_option("--report", analyze_options.report, "heatmap, poses, efficiency, wallclock or reconstructions")
		->required();
	analyze->add_option("-c,--config", config_path, "Experiment config (default: <run-dir>/config.json)");
	analyze->add_option("-r,--run-dir", run_dir, "Seed directory written by train");
	analyze->add_option("--checkpoint", checkpoint, "Checkpoint file (default: <run-dir>/checkpoints/latest.pt)");
	analyze->add_option("-o,--output", output_dir, "Artifact directory");
	analyze->add_option("--updates", analyze_options.wallclock_updates, "Timed updates per agent for wallclock");
	analyze->add_option("--set", overrides, "Override a config key");

	try
	{
		app.parse(argc, argv);
	}
	catch (const CLI::ParseError& e)
	{
		const int code = app.exit(e);
		return code == 0 ? cli::exit_ok : cli::exit_config_error;
	}

	auto apply_log_level = [&](const std::string& configured) {
		log::set_level(log::parse_level(log_level.empty() ? configured : log_level));
	};

	if (*train)
	{
		auto config = cli::load_config(config_path, overrides);
		apply_log_level(config.output.log_level);
		for (const auto& dir : cli::cmd_train(config))
		{
			std::cout << dir.string() << '\n';
		}
	}
	else if (*eval)
	{
		apply_log_level("info");
		std::optional<std::filesystem::path> ckpt;
		if (!checkpoint.empty())
		{
			ckpt = checkpoint;
		}
		auto summary = cli::cmd_eval(run_dir, episodes, seed, ckpt);
		std::cout << summary.to_json().dump(2) << '\n';
	}
	else if (*analyze)
	{
		if (config_path.empty() && run_dir.empty())
		{
			throw ConfigError("analyze needs --config or --run-dir");
		}
		const auto path = config_path.empty() ? std::filesystem::path(run_dir) / "config.json" : std::filesystem::path(config_path);
		auto config = cli::load_config(path, overrides);
		apply_log_level(config.output.log_level);
		if (!run_dir.empty())
		{
			analyze_options.run_dir = run_dir;
		}
		if (!checkpoint.empty())
		{
			analyze_options.checkpoint = checkpoint;
		}
		if (!output_dir.empty())
		{
			analyze_options.output_dir = output_dir;
		}
		for (const auto& file : cli::cmd_analyze(config, analyze_options))
		{
			std::cout << file.string() << '\n';
		}
	}
	return cli::exit_ok;
}

} // namespace

int main(int argc, char** argv)
{
	try
	{
		return run(argc, argv);
	}
	catch (const caif::ConfigError& e)
	{
		std::cerr << "config error: " << e.what() << '\n';
		return caif::cli::exit_config_error;
	}
	catch (const std::invalid_argument& e)
	{
		std::cerr << "config error: " << e.what() << '\n';
		return caif::cli::exit_config_error;
	}
	catch (const caif::DivergenceError& e)
	{
		std::cerr << "aborted: " << e.what() << '\n';
		return caif::cli::exit_runtime_abort;
	}
	catch (const std::exception& e)
	{
		std::cerr << "error: " << e.what() << '\n';
		return caif::cli::exit_failure;
	}
}
