#include "caif/cli/config.h"

#include "caif/common/errors.h"

#include <cstdlib>
#include <fstream>
#include <set>

namespace caif::cli
{

using nlohmann::json;
namespace fs = std::filesystem;

namespace
{

/// Walks one JSON object, converting known keys and remembering which were consumed.
class Reader
{
public:
	Reader(const json* object, std::string path) : object_(object), path_(std::move(path))
	{
		if (object_ && !object_->is_object())
		{
			throw ConfigError("'" + display() + "' must be an object");
		}
	}

	bool has(const std::string& key) const { return object_ && object_->contains(key); }

	Reader child(const std::string& key)
	{
		consumed_.insert(key);
		return {has(key) ? &object_->at(key) : nullptr, name(key)};
	}

	void read(const std::string& key, int& out)
	{
		if (const auto* v = take(key))
		{
			if (!v->is_number_integer())
			{
				throw type_error(key, "an integer");
			}
			out = v->get<int>();
		}
	}

	void read(const std::string& key, std::uint64_t& out)
	{
		if (const auto* v = take(key))
		{
			if (!v->is_number_integer() || v->get<std::int64_t>() < 0)
			{
				throw type_error(key, "a non-negative integer");
			}
			out = v->get<std::uint64_t>();
		}
	}

	void read(const std::string& key, double& out)
	{
		if (const auto* v = take(key))
		{
			if (!v->is_number())
			{
				throw type_error(key, "a number");
			}
			out = v->get<double>();
		}
	}

	void read(const std::string& key, bool& out)
	{
		if (const auto* v = take(key))
		{
			if (!v->is_boolean())
			{
				throw type_error(key, "true or false");
			}
			out = v->get<bool>();
		}
	}

	void read(const std::string& key, std::string& out)
	{
		if (const auto* v = take(key))
		{
			if (!v->is_string())
			{
				throw type_error(key, "a string");
			}
			out = v->get<std::string>();
		}
	}

	void read(const std::string& key, std::array<int, 4>& out)
	{
		if (const auto* v = take(key))
		{
			if (!v->is_array() || v->size() != out.size())
			{
				throw type_error(key, "an array of 4 integers");
			}
			for (std::size_t i = 0; i < out.size(); ++i)
			{
				if (!(*v)[i].is_number_integer())
				{
					throw type_error(key, "an array of 4 integers");
				}
				out[i] = (*v)[i].get<int>();
			}
		}
	}

	void read(const std::string& key, std::vector<std::uint64_t>& out)
	{
		if (const auto* v = take(key))
		{
			if (!v->is_array())
			{
				throw type_error(key, "an array of non-negative integers");
			}
			out.clear();
			for (const auto& item : *v)
			{
				if (!item.is_number_integer() || item.get<std::int64_t>() < 0)
				{
					throw type_error(key, "an array of non-negative integers");
				}
				out.push_back(item.get<std::uint64_t>());
			}
		}
	}

	/// Rejects keys that no read() or child() asked for.
	void finish() const
	{
		if (!object_)
		{
			return;
		}
		for (const auto& item : object_->items())
		{
			if (!consumed_.contains(item.key()))
			{
				throw ConfigError("unknown key '" + name(item.key()) + "'");
			}
		}
	}

	std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

	template <typename F>
	auto with_field(const std::string& key, F&& convert) const
	{
		try
		{
			return convert();
		}
		catch (const ConfigError& e)
		{
			throw ConfigError(name(key) + ": " + e.what());
		}
	}

private:
	const json* take(const std::string& key)
	{
		consumed_.insert(key);
		if (!has(key) || object_->at(key).is_null())
		{
			return nullptr;
		}
		return &object_->at(key);
	}

	ConfigError type_error(const std::string& key, const char* expected) const
	{
		return ConfigError("'" + name(key) + "' must be " + expected);
	}

	std::string display() const { return path_.empty() ? "<root>" : path_; }

	const json* object_;
	std::string path_;
	std::set<std::string> consumed_;
};

std::string to_string(envs::GoalPrior prior)
{
	return prior == envs::GoalPrior::laplace ? "laplace" : "gaussian";
}

envs::GoalPrior parse_goal_prior(const std::string& name)
{
	if (name == "laplace")
	{
		return envs::GoalPrior::laplace;
	}
	if (name == "gaussian")
	{
		return envs::GoalPrior::gaussian;
	}
	throw ConfigError("unknown goal prior '" + name + "' (expected laplace or gaussian)");
}

} // namespace

void ExperimentConfig::validate() const
{
	env.validate();
	agent.validate();
	train.validate();
	if (seeds.empty())
	{
		throw ConfigError("seeds must list at least one seed");
	}
	if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
	{
		throw ConfigError("seeds must be distinct");
	}
}

bool ExperimentConfig::operator==(const ExperimentConfig& other) const
{
	return to_json(*this) == to_json(other);
}

ExperimentConfig parse_config(const json& document)
{
	ExperimentConfig config;
	Reader root(&document, "");

	auto env = root.child("env");
	std::string task = envs::to_string(config.env.task);
	env.read("task", task);
	config.env.task = env.with_field("task", [&] { return envs::parse_task(task); });
	env.read("grid_size", config.env.grid_size);
	std::string difficulty = envs::to_string(config.env.difficulty);
	env.read("difficulty", difficulty);
	config.env.difficulty = env.with_field("difficulty", [&] { return envs::parse_difficulty(difficulty); });
	env.read("max_episode_steps", config.env.max_episode_steps);
	auto distraction = env.child("distraction");
	distraction.read("enabled", config.env.distraction.enabled);
	distraction.read("background_id", config.env.distraction.background_id);
	distraction.read("camera_jitter", config.env.distraction.camera_jitter);
	distraction.read("palette_shift", config.env.distraction.palette_shift);
	distraction.read("per_episode_reseed", config.env.distraction.per_episode_reseed);
	distraction.finish();
	env.finish();

	const auto defaults = trainer::task_defaults(config.env);

	auto agent = root.child("agent");
	if (!agent.has("agent_kind"))
	{
		throw ConfigError("missing required field 'agent.agent_kind'");
	}
	std::string kind;
	agent.read("agent_kind", kind);
	config.agent.kind = agent.with_field("agent_kind", [&] { return trainer::parse_agent_kind(kind); });
	agent.read("model_lr", config.agent.model_lr);
	agent.read("behavior_lr", config.agent.behavior_lr);
	agent.read("adam_eps", config.agent.adam_eps);
	agent.read("grad_clip", config.agent.grad_clip);
	agent.read("free_nats", config.agent.free_nats);
	agent.read("include_intrinsic", config.agent.include_intrinsic);
	std::string prior = to_string(config.agent.goal_prior);
	agent.read("goal_prior", prior);
	config.agent.goal_prior = agent.with_field("goal_prior", [&] { return parse_goal_prior(prior); });
	agent.read("gamma", config.agent.returns.gamma);
	agent.read("lambda", config.agent.returns.lambda);
	config.agent.returns.horizon = defaults.horizon;
	agent.read("horizon", config.agent.returns.horizon);
	agent.read("entropy_scale", config.agent.returns.entropy_scale);
	auto arch = agent.child("architecture");
	arch.read("stoch", config.agent.arch.stoch);
	arch.read("deter", config.agent.arch.deter);
	arch.read("hidden", config.agent.arch.hidden);
	arch.read("embed", config.agent.arch.embed);
	arch.read("channels", config.agent.arch.channels);
	arch.read("kernel", config.agent.arch.kernel);
	arch.read("stride", config.agent.arch.stride);
	arch.read("min_std", config.agent.arch.min_std);
	arch.finish();
	agent.finish();

	auto training = root.child("training");
	training.read("seed_episodes", config.train.seed_episodes);
	training.read("updates", config.train.updates);
	config.train.batch_size = defaults.batch_size;
	config.train.sequence_length = defaults.sequence_length;
	training.read("batch_size", config.train.batch_size);
	training.read("sequence_length", config.train.sequence_length);
	training.read("episodes", config.train.episodes);
	training.read("checkpoint_every", config.train.checkpoint_every);
	training.finish();

	auto output = root.child("output");
	output.read("run_dir", config.output.run_dir);
	output.read("log_level", config.output.log_level);
	output.finish();

	root.read("seeds", config.seeds);
	root.finish();

	config.validate();
	if (config.output.log_level != "debug" && config.output.log_level != "info" && config.output.log_level != "warn" &&
			config.output.log_level != "error" && config.output.log_level != "off")
	{
		throw ConfigError("'output.log_level' must be one of debug, info, warn, error, off");
	}
	return config;
}

json to_json(const ExperimentConfig& config)
{
	const auto& a = config.agent;
	const auto& d = config.env.distraction;
	return {
		{"env",
		 {{"task", envs::to_string(config.env.task)},
			{"grid_size", config.env.grid_size},
			{"difficulty", envs::to_string(config.env.difficulty)},
			{"max_episode_steps", config.env.max_episode_steps},
			{"distraction",
			 {{"enabled", d.enabled},
				{"background_id", d.background_id},
				{"camera_jitter", d.camera_jitter},
				{"palette_shift", d.palette_shift},
				{"per_episode_reseed", d.per_episode_reseed}}}}},
		{"agent",
		 {{"agent_kind", trainer::to_string(a.kind)},
			{"model_lr", a.model_lr},
			{"behavior_lr", a.behavior_lr},
			{"adam_eps", a.adam_eps},
			{"grad_clip", a.grad_clip},
			{"free_nats", a.free_nats},
			{"include_intrinsic", a.include_intrinsic},
			{"goal_prior", to_string(a.goal_prior)},
			{"gamma", a.returns.gamma},
			{"lambda", a.returns.lambda},
			{"horizon", a.returns.horizon},
			{"entropy_scale", a.returns.entropy_scale},
			{"architecture",
			 {{"stoch", a.arch.stoch},
				{"deter", a.arch.deter},
				{"hidden", a.arch.hidden},
				{"embed", a.arch.embed},
				{"channels", a.arch.channels},
				{"kernel", a.arch.kernel},
				{"stride", a.arch.stride},
				{"min_std", a.arch.min_std}}}}},
		{"training",
		 {{"seed_episodes", config.train.seed_episodes},
			{"updates", config.train.updates},
			{"batch_size", config.train.batch_size},
			{"sequence_length", config.train.sequence_length},
			{"episodes", config.train.episodes},
			{"checkpoint_every", config.train.checkpoint_every}}},
		{"output", {{"run_dir", config.output.run_dir}, {"log_level", config.output.log_level}}},
		{"seeds", config.seeds},
	};
}

void apply_override(json& document, const std::string& assignment)
{
	const auto eq = assignment.find('=');
	if (eq == std::string::npos || eq == 0)
	{
		throw ConfigError("override '" + assignment + "' must look like key.path=value");
	}
	const std::string path = assignment.substr(0, eq);
	const std::string text = assignment.substr(eq + 1);
	json value = json::parse(text, nullptr, false);
	if (value.is_discarded())
	{
		value = text;
	}

	json* node = &document;
	std::size_t begin = 0;
	while (true)
	{
		const auto dot = path.find('.', begin);
		const std::string key = path.substr(begin, dot == std::string::npos ? std::string::npos : dot - begin);
		if (key.empty())
		{
			throw ConfigError("override path '" + path + "' has an empty component");
		}
		if (!node->is_object())
		{
			if (!node->is_null())
			{
				throw ConfigError("override path '" + path + "' descends into a non-object value");
			}
			*node = json::object();
		}
		if (dot == std::string::npos)
		{
			(*node)[key] = value;
			return;
		}
		node = &(*node)[key];
		begin = dot + 1;
	}
}

ExperimentConfig load_config(const fs::path& path, const std::vector<std::string>& overrides)
{
	std::ifstream in(path);
	if (!in)
	{
		throw ConfigError("cannot open config file " + path.string());
	}
	json document;
	try
	{
		document = json::parse(in, nullptr, true, true);
	}
	catch (const json::parse_error& e)
	{
		throw ConfigError(path.string() + ": " + e.what());
	}
	for (const auto& assignment : overrides)
	{
		apply_override(document, assignment);
	}
	try
	{
		return parse_config(document);
	}
	catch (const ConfigError& e)
	{
		throw ConfigError(path.string() + ": " + e.what());
	}
}

void save_config(const fs::path& path, const ExperimentConfig& config)
{
	std::ofstream out(path);
	if (!out)
	{
		throw std::runtime_error("cannot write " + path.string());
	}
	out << to_json(config).dump(2) << '\n';
}

fs::path run_root(const OutputConfig& output)
{
	fs::path dir(output.run_dir);
	if (dir.is_relative())
	{
		if (const char* root = std::getenv("CAIF_RUN_ROOT"); root && *root)
		{
			return fs::path(root) / dir;
		}
	}
	return dir;
}

fs::path seed_directory(const fs::path& root, std::uint64_t seed)
{
	return root / ("seed_" + std::to_string(seed));
}

trainer::TrainConfig train_config_for_seed(const ExperimentConfig& config, std::uint64_t seed)
{
	auto train = config.train;
	train.seed = seed;
	return train;
}

} // namespace caif::cli
