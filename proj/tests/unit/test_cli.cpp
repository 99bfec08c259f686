#include "support/doctest_torch.h"

#include "caif/cli/commands.h"
#include "caif/cli/config.h"
#include "caif/common/errors.h"
#include "support/test_support.h"

#include <cstdlib>
#include <fstream>

using namespace caif;
using namespace caif::cli;
using caif::testing::TempDir;
using nlohmann::json;

namespace
{

json minimal(const std::string& kind = "contrastive-aif")
{
	return json{{"agent", {{"agent_kind", kind}}}};
}

std::string error_of(const json& document)
{
	try
	{
		parse_config(document);
	}
	catch (const ConfigError& e)
	{
		return e.what();
	}
	return {};
}

/// Experiment small enough to train in a second.
json tiny_experiment(const std::filesystem::path& run_dir)
{
	return json{
		{"env", {{"task", "grid"}, {"max_episode_steps", 15}}},
		{"agent",
		 {{"agent_kind", "contrastive-aif"},
			{"horizon", 2},
			{"architecture", {{"stoch", 4}, {"deter", 8}, {"hidden", 8}, {"embed", 4}, {"channels", {2, 2, 2, 2}}}}}},
		{"training",
		 {{"seed_episodes", 2}, {"updates", 1}, {"batch_size", 2}, {"sequence_length", 3}, {"episodes", 1}}},
		{"output", {{"run_dir", run_dir.string()}}},
		{"seeds", {0, 1}}};
}

/// Restores an environment variable on scope exit.
class ScopedEnv
{
public:
	ScopedEnv(const char* name, const std::string& value) : name_(name)
	{
		if (const char* old = std::getenv(name))
		{
			old_ = old;
		}
		setenv(name, value.c_str(), 1);
	}
	~ScopedEnv()
	{
		if (old_)
		{
			setenv(name_, old_->c_str(), 1);
		}
		else
		{
			unsetenv(name_);
		}
	}

private:
	const char* name_;
	std::optional<std::string> old_;
};

} // namespace

TEST_SUITE("cli")
{
	TEST_CASE("defaults follow the task")
	{
		auto grid6 = parse_config(minimal());
		CHECK(grid6.train.batch_size == 50);
		CHECK(grid6.train.sequence_length == 7);
		CHECK(grid6.agent.returns.horizon == 6);
		CHECK(grid6.train.seed_episodes == 50);
		CHECK(grid6.train.updates == 100);
		CHECK(grid6.agent.arch.stoch == 30);
		CHECK(grid6.agent.arch.deter == 200);
		CHECK(grid6.agent.model_lr == 6e-4);
		CHECK(grid6.agent.behavior_lr == 8e-5);
		CHECK(grid6.agent.returns.gamma == 0.99);
		CHECK(grid6.agent.returns.lambda == 0.95);

		auto grid8 = minimal();
		grid8["env"] = {{"grid_size", 8}};
		CHECK(parse_config(grid8).train.sequence_length == 11);
		CHECK(parse_config(grid8).agent.returns.horizon == 10);

		auto reacher = minimal();
		reacher["env"] = {{"task", "reacher"}};
		auto r = parse_config(reacher);
		CHECK(r.train.batch_size == 30);
		CHECK(r.train.sequence_length == 30);

		auto explicit_b = minimal();
		explicit_b["training"] = {{"batch_size", 12}};
		CHECK(parse_config(explicit_b).train.batch_size == 12);
	}

	TEST_CASE("config errors name the offending field")
	{
		CHECK(error_of(json::object()).find("agent.agent_kind") != std::string::npos);
		auto unknown = minimal();
		unknown["agent"]["bogus"] = 1;
		CHECK(error_of(unknown).find("agent.bogus") != std::string::npos);
		auto top = minimal();
		top["extra"] = true;
		CHECK(error_of(top).find("extra") != std::string::npos);
		auto typed = minimal();
		typed["training"] = {{"updates", "many"}};
		CHECK(error_of(typed).find("training.updates") != std::string::npos);
		auto kind = minimal("planet");
		CHECK_FALSE(error_of(kind).empty());
		auto distraction = minimal();
		distraction["env"] = {{"task", "grid"}, {"distraction", {{"enabled", true}}}};
		CHECK_FALSE(error_of(distraction).empty());
	}

	TEST_CASE("configs round-trip through JSON and files")
	{
		auto config = parse_config(tiny_experiment("runs/x"));
		CHECK(parse_config(to_json(config)) == config);
		TempDir dir("caif_cfg");
		save_config(dir.path() / "c.json", config);
		CHECK(load_config(dir.path() / "c.json") == config);

		auto changed = load_config(dir.path() / "c.json", {"training.updates=7", "agent.agent_kind=dreamer"});
		CHECK(changed.train.updates == 7);
		CHECK(changed.agent.kind == trainer::AgentKind::dreamer);
		CHECK_THROWS_AS(load_config(dir.path() / "c.json", {"training.nope=1"}), ConfigError);

		std::ofstream(dir.path() / "broken.json") << "{\n  \"agent\": {\n    \"agent_kind\": \n}";
		try
		{
			load_config(dir.path() / "broken.json");
			FAIL("expected a ConfigError");
		}
		catch (const ConfigError& e)
		{
			const std::string what = e.what();
			CHECK(what.find("broken.json") != std::string::npos);
			CHECK(what.find("line 4") != std::string::npos);
		}
	}

	TEST_CASE("run directories honor the run-root variable")
	{
		OutputConfig output;
		output.run_dir = "runs/a";
		{
			ScopedEnv root("CAIF_RUN_ROOT", "/tmp/somewhere");
			CHECK(run_root(output) == std::filesystem::path("/tmp/somewhere/runs/a"));
			output.run_dir = "/abs/b";
			CHECK(run_root(output) == std::filesystem::path("/abs/b"));
		}
		CHECK(seed_directory("/r", 3) == std::filesystem::path("/r/seed_3"));
	}

	TEST_CASE("train, eval and analyze end to end")
	{
		TempDir dir("caif_cli");
		ScopedEnv root("CAIF_RUN_ROOT", dir.path().string());
		auto config = parse_config(tiny_experiment("exp"));
		auto runs = cmd_train(config);
		REQUIRE(runs.size() == 2);
		CHECK(runs[0] == dir.path() / "exp" / "seed_0");
		CHECK(runs[1] == dir.path() / "exp" / "seed_1");
		for (const auto& run : runs)
		{
			CHECK(std::filesystem::exists(default_checkpoint(run)));
			CHECK(std::filesystem::exists(run / "metrics.jsonl"));
			// The snapshot reproduces the seed's configuration.
			auto snapshot = load_config(run / "config.json");
			CHECK(snapshot.agent.kind == config.agent.kind);
			CHECK(snapshot.train.updates == config.train.updates);
		}

		auto empty = cmd_eval(runs[0], 0, 0);
		CHECK(empty.returns.empty());
		CHECK(std::filesystem::exists(runs[0] / "eval.json"));
		auto a = cmd_eval(runs[0], 2, 5);
		auto b = cmd_eval(runs[0], 2, 5);
		CHECK(a.returns == b.returns);
		CHECK(a.mean == b.mean);
		for (double r : a.returns)
		{
			CHECK(r >= 0.0);
			CHECK(r <= 1.0);
		}

		AnalyzeOptions heatmap;
		heatmap.report = "heatmap";
		heatmap.run_dir = runs[0];
		auto files = cmd_analyze(load_config(runs[0] / "config.json"), heatmap);
		CHECK_FALSE(files.empty());
		for (const auto& f : files)
		{
			CHECK(std::filesystem::exists(f));
		}

		AnalyzeOptions recon = heatmap;
		recon.report = "reconstructions";
		CHECK_THROWS_AS(cmd_analyze(load_config(runs[0] / "config.json"), recon), ConfigError);
		AnalyzeOptions unknown = heatmap;
		unknown.report = "everything";
		CHECK_THROWS_AS(cmd_analyze(load_config(runs[0] / "config.json"), unknown), ConfigError);
	}

	TEST_CASE("efficiency runs from the config alone; heatmap rejects the reacher")
	{
		TempDir dir("caif_analyze");
		auto config = parse_config(minimal());
		AnalyzeOptions options;
		options.report = "efficiency";
		options.output_dir = dir.path();
		auto files = cmd_analyze(config, options);
		REQUIRE(files.size() == 1);
		CHECK(std::filesystem::file_size(files[0]) > 0);

		auto reacher = minimal();
		reacher["env"] = {{"task", "reacher"}};
		AnalyzeOptions heatmap;
		heatmap.report = "heatmap";
		heatmap.output_dir = dir.path();
		CHECK_THROWS_AS(cmd_analyze(parse_config(reacher), heatmap), ConfigError);
	}
}
