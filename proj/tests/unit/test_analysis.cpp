#include "support/doctest_torch.h"

#include "caif/analysis/efficiency.h"
#include "caif/analysis/reports.h"
#include "caif/common/errors.h"
#include "caif/world_model/world_model.h"
#include "support/test_support.h"

#include <cmath>
#include <fstream>

using namespace caif;
using namespace caif::analysis;
using caif::testing::TempDir;

namespace
{

// Brute-force multiply count of a valid, strided 2D convolution.
std::int64_t conv_mac_oracle(int in_c, int out_c, int kernel, int stride, int in_side)
{
	std::int64_t macs = 0;
	for (int oy = 0; oy + kernel <= in_side; oy += stride)
	{
		for (int ox = 0; ox + kernel <= in_side; ox += stride)
		{
			for (int o = 0; o < out_c; ++o)
			{
				for (int i = 0; i < in_c; ++i)
				{
					macs += static_cast<std::int64_t>(kernel) * kernel;
				}
			}
		}
	}
	return macs;
}

trainer::Agent make_agent(trainer::AgentKind kind, double entropy_scale = behavior::kDefaultEntropyScale)
{
	auto config = caif::testing::tiny_agent(kind);
	config.returns.entropy_scale = entropy_scale;
	envs::GridWorld env(6);
	return trainer::Agent(config, env.config().action_space, env.goal());
}

void zero_critic(trainer::Agent& agent)
{
	torch::NoGradGuard no_grad;
	for (const auto& item : agent.world_model()->named_parameters())
	{
		if (item.key().find("embedder") != std::string::npos)
		{
			item.value().zero_();
		}
	}
}

} // namespace

TEST_SUITE("analysis")
{
	TEST_CASE("layer counts match brute-force and module oracles")
	{
		CHECK(conv_layer("c", 3, 8, 4, 31).macs == conv_mac_oracle(3, 8, 4, 2, 64));
		CHECK(conv_layer("c", 5, 7, 3, 7).macs == conv_mac_oracle(5, 7, 3, 2, 15));
		torch::nn::Conv2d conv(torch::nn::Conv2dOptions(5, 7, 3).stride(2));
		std::int64_t params = 0;
		for (const auto& p : conv->parameters())
		{
			params += p.numel();
		}
		CHECK(conv_layer("c", 5, 7, 3, 7).params == params);

		torch::nn::GRUCell cell(6, 9);
		params = 0;
		for (const auto& p : cell->parameters())
		{
			params += p.numel();
		}
		CHECK(gru_cell("g", 6, 9).params == params);
		CHECK(conv_layer("c", 64, 128, 4, 6).macs == 4 * conv_layer("c", 32, 64, 4, 6).macs);
	}

	TEST_CASE("efficiency report matches constructed modules and the required ratios")
	{
		world_model::ArchitectureSpec arch;
		auto report = efficiency_report(arch);
		CHECK(report.mac_ratio() >= 5.0);
		CHECK(report.param_ratio() >= 2.5);
		CHECK(report.to_text() == efficiency_report(arch).to_text());

		world_model::WorldModelOptions options;
		options.arch = arch;
		options.action_dim = 3;
		options.critic = true;
		options.decoder = true;
		world_model::WorldModel model(options);
		CHECK(module_parameters(*model, {"decoder_in", "decoder"}) == report.likelihood.params());
		CHECK(module_parameters(*model, {"obs_embedder", "state_embedder"}) == report.contrastive.params());
		CHECK(
			module_parameters(*model, {"encoder", "transition_in", "cell", "prior_head", "posterior_head"}) ==
			report.shared.params());
	}

	TEST_CASE("heatmap covers every interior pose and never mutates the agent")
	{
		torch::manual_seed(0);
		auto agent = make_agent(trainer::AgentKind::contrastive_aif);
		const double before = agent.parameter_checksum();
		auto heatmap = grid_utility_heatmap(agent, 6);
		CHECK(agent.parameter_checksum() == before);
		CHECK(heatmap.poses.size() == 16 * 4);
		CHECK(std::isnan(heatmap.tile_mean(0, 0)));
		CHECK(std::isfinite(heatmap.tile_mean(4, 4)));
		for (const auto& pose : heatmap.poses)
		{
			CHECK(std::isfinite(pose.utility));
		}
		const double rank = heatmap.rank_fraction(4, 4);
		CHECK(rank > 0.0);
		CHECK(rank <= 1.0);

		TempDir dir("caif_heatmap");
		heatmap.write_csv(dir.path() / "h.csv");
		heatmap.write_png(dir.path() / "h.png");
		CHECK(std::filesystem::file_size(dir.path() / "h.png") > 0);
		std::ifstream csv(dir.path() / "h.csv");
		int lines = 0;
		for (std::string line; std::getline(csv, line);)
		{
			++lines;
		}
		CHECK(lines > 16);
	}

	TEST_CASE("zero critic gives a flat heatmap")
	{
		torch::manual_seed(1);
		auto agent = make_agent(trainer::AgentKind::contrastive_aif, 0.0);
		zero_critic(agent);
		auto heatmap = grid_utility_heatmap(agent, 6);
		CHECK(heatmap.low == heatmap.high);
	}

	TEST_CASE("min-max normalization and its degenerate case")
	{
		bool degenerate = true;
		auto n = normalize_unit_range({2.0, -1.0, 5.0}, &degenerate);
		CHECK_FALSE(degenerate);
		CHECK(n == std::vector<double>{0.5, 0.0, 1.0});
		auto flat = normalize_unit_range({3.0, 3.0}, &degenerate);
		CHECK(degenerate);
		CHECK(flat == std::vector<double>{0.5, 0.5});

		torch::manual_seed(2);
		auto agent = make_agent(trainer::AgentKind::contrastive_aif);
		auto poses = default_reacher_poses();
		auto table = pose_utility_table(agent, {poses.begin(), poses.begin() + 6}, envs::ReacherDifficulty::easy);
		CHECK(table.normalized.size() == 6);
		CHECK(*std::min_element(table.normalized.begin(), table.normalized.end()) == 0.0);
		CHECK(*std::max_element(table.normalized.begin(), table.normalized.end()) == 1.0);
	}

	TEST_CASE("reconstruction dump needs a decoder")
	{
		TempDir dir("caif_recon");
		envs::GridWorld env(6, 0, 10);
		std::mt19937_64 rng(0);
		auto buffer = trainer::seed_buffer(env, 2, rng);
		auto contrastive = make_agent(trainer::AgentKind::contrastive_aif);
		CHECK_THROWS_AS(reconstruction_dump(contrastive, buffer.episodes(), dir.path() / "r.png"), ConfigError);
		auto likelihood = make_agent(trainer::AgentKind::likelihood_aif);
		reconstruction_dump(likelihood, buffer.episodes(), dir.path() / "r.png", 4);
		CHECK(std::filesystem::file_size(dir.path() / "r.png") > 0);
	}

	TEST_CASE("distraction invariance compares every goal view with every random view")
	{
		torch::manual_seed(3);
		auto config = caif::testing::tiny_agent(trainer::AgentKind::contrastive_aif);
		envs::Reacher env(envs::ReacherDifficulty::easy);
		trainer::Agent agent(config, env.config().action_space, env.goal());
		auto result = distraction_invariance(agent, {}, envs::ReacherDifficulty::easy, 5, 0);
		CHECK(result.goal_scores.size() == 4);
		CHECK(result.random_scores.size() == 5);
		CHECK(result.win_rate >= 0.0);
		CHECK(result.win_rate <= 1.0);
		CHECK_THROWS_AS(distraction_invariance(agent, {}, envs::ReacherDifficulty::easy, 0, 0), ContractError);
	}
}
