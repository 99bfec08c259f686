#include "caif/analysis/efficiency.h"
#include "caif/behavior/objectives.h"
#include "caif/cli/config.h"
#include "caif/common/errors.h"
#include "caif/envs/factory.h"
#include "caif/envs/grid_world.h"
#include "caif/envs/reacher.h"
#include "caif/world_model/gaussian.h"
#include "caif/world_model/losses.h"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

namespace py = pybind11;
using namespace caif;

namespace
{

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

torch::Tensor to_tensor(const DoubleArray& array)
{
	std::vector<int64_t> shape(array.shape(), array.shape() + array.ndim());
	return torch::from_blob(const_cast<double*>(array.data()), shape, torch::kFloat64).clone();
}

DoubleArray to_array(const torch::Tensor& tensor)
{
	auto t = tensor.to(torch::kFloat64).contiguous();
	std::vector<py::ssize_t> shape(t.sizes().begin(), t.sizes().end());
	DoubleArray out(shape);
	std::memcpy(out.mutable_data(), t.data_ptr<double>(), sizeof(double) * t.numel());
	return out;
}

py::array_t<std::uint8_t> to_image(const envs::Observation& obs)
{
	py::array_t<std::uint8_t> out({envs::kImageSize, envs::kImageSize, envs::kImageChannels});
	std::memcpy(out.mutable_data(), obs.pixels.data(), obs.pixels.size());
	return out;
}

py::tuple step_tuple(const envs::StepResult& r)
{
	return py::make_tuple(to_image(r.observation), r.reward, r.done);
}

envs::ReacherDifficulty difficulty_of(const std::string& name)
{
	return envs::parse_difficulty(name);
}

} // namespace

PYBIND11_MODULE(_core, m)
{
	m.doc() = "Native core of the caif package";

	py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
	py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
	py::register_exception<UsageError>(m, "UsageError", PyExc_RuntimeError);

	m.def(
		"info_nce",
		[](const DoubleArray& scores) { return world_model::info_nce(to_tensor(scores)).item<double>(); },
		py::arg("scores"),
		"InfoNCE bound of a square score matrix whose diagonal holds the positive pairs.");
	m.def(
		"kl_gaussian",
		[](const DoubleArray& q_mean, const DoubleArray& q_std, const DoubleArray& p_mean, const DoubleArray& p_std)
		{
			return to_array(world_model::kl_gaussian({to_tensor(q_mean), to_tensor(q_std)}, {to_tensor(p_mean), to_tensor(p_std)}));
		},
		py::arg("q_mean"),
		py::arg("q_std"),
		py::arg("p_mean"),
		py::arg("p_std"),
		"KL[q || p] of diagonal Gaussians, summed over the last axis.");
	m.def(
		"lambda_returns",
		[](const DoubleArray& utilities, const DoubleArray& values, double gamma, double lambda)
		{ return to_array(behavior::lambda_returns(to_tensor(utilities), to_tensor(values), gamma, lambda)); },
		py::arg("utilities"),
		py::arg("values"),
		py::arg("gamma") = 0.99,
		py::arg("lambda_") = 0.95);

	m.def(
		"make_goal_image",
		[](const std::string& task, int grid_size, const std::string& difficulty)
		{
			const auto goal = envs::parse_task(task) == envs::Task::grid ? envs::make_grid_goal(grid_size)
																																: envs::make_reacher_goal(difficulty_of(difficulty));
			return to_image(goal.image);
		},
		py::arg("task") = "grid",
		py::arg("grid_size") = 6,
		py::arg("difficulty") = "easy");

	m.def(
		"efficiency_report",
		[]()
		{
			const auto report = analysis::efficiency_report(world_model::ArchitectureSpec{});
			py::dict out;
			for (const auto* path : {&report.likelihood, &report.contrastive, &report.shared})
			{
				out[py::str(path->name)] = py::dict(py::arg("macs") = path->macs(), py::arg("params") = path->params());
			}
			out["mac_ratio"] = report.mac_ratio();
			out["param_ratio"] = report.param_ratio();
			return out;
		},
		"Static MAC and parameter counts of the default architecture.");

	m.def(
		"validate_config",
		[](const std::string& text)
		{ return cli::to_json(cli::parse_config(nlohmann::json::parse(text))).dump(); },
		py::arg("json_text"),
		"Parses an experiment config and returns it with every default filled in.");

	py::class_<envs::GridWorld>(m, "GridWorld")
		.def(py::init<int, std::uint64_t, int>(), py::arg("size") = 6, py::arg("seed") = 0, py::arg("max_episode_steps") = 0)
		.def("reset", [](envs::GridWorld& env) { return to_image(env.reset()); })
		.def(
			"step",
			[](envs::GridWorld& env, int action)
			{
				if (action < 0 || action >= envs::kGridActionCount)
				{
					throw ContractError("grid action must be 0 (left), 1 (right) or 2 (forward)");
				}
				return step_tuple(env.step(static_cast<envs::GridAction>(action)));
			},
			py::arg("action"))
		.def_property_readonly("done", &envs::GridWorld::done)
		.def_property_readonly(
			"agent_pos", [](const envs::GridWorld& env) { return py::make_tuple(env.state().agent_pos.x, env.state().agent_pos.y); })
		.def_property_readonly(
			"goal_pos", [](const envs::GridWorld& env) { return py::make_tuple(env.state().goal_pos.x, env.state().goal_pos.y); })
		.def_property_readonly("max_episode_steps", [](const envs::GridWorld& env) { return env.config().max_episode_steps; });

	py::class_<envs::Reacher>(m, "Reacher")
		.def(
			py::init(
				[](const std::string& difficulty, bool distraction, std::uint64_t seed, int max_episode_steps)
				{
					envs::DistractionConfig config;
					config.enabled = distraction;
					return envs::Reacher(difficulty_of(difficulty), config, seed, max_episode_steps);
				}),
			py::arg("difficulty") = "easy",
			py::arg("distraction") = false,
			py::arg("seed") = 0,
			py::arg("max_episode_steps") = envs::kReacherEpisodeSteps)
		.def("reset", [](envs::Reacher& env) { return to_image(env.reset()); })
		.def(
			"step",
			[](envs::Reacher& env, std::array<double, 2> action) { return step_tuple(env.step(action)); },
			py::arg("action"))
		.def_property_readonly("done", &envs::Reacher::done)
		.def_property_readonly("joint_angles", [](const envs::Reacher& env) { return env.state().joint_angles; })
		.def_property_readonly("tip_inside_target", [](const envs::Reacher& env) { return envs::tip_inside_target(env.state(), env.physics()); });
}
