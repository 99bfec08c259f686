#include "support/doctest_torch.h"

#include "caif/behavior/objectives.h"
#include "caif/behavior/policy.h"
#include "caif/common/errors.h"
#include "support/test_support.h"

#include <torch/torch.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using namespace caif;
using namespace caif::behavior;

namespace
{

const auto kDouble = torch::TensorOptions().dtype(torch::kFloat64);

// Forward expansion of the lambda-return: G_t = sum over the n-step returns weighted by
// (1 - lambda) lambda^(n-1), with the tail mass lambda^(T-1-t) on the full return to the end.
std::vector<double> lambda_oracle(const std::vector<double>& u, const std::vector<double>& v, double gamma, double lambda)
{
	const int T = static_cast<int>(u.size());
	std::vector<double> out(T);
	out[T - 1] = v[T - 1];
	for (int t = 0; t < T - 1; ++t)
	{
		const int max_n = T - 1 - t;
		auto n_step = [&](int n)
		{
			double acc = 0.0;
			for (int k = 0; k < n; ++k)
			{
				acc += std::pow(gamma, k) * u[t + k];
			}
			return acc + std::pow(gamma, n) * v[t + n];
		};
		double g = 0.0;
		for (int n = 1; n < max_n; ++n)
		{
			g += (1.0 - lambda) * std::pow(lambda, n - 1) * n_step(n);
		}
		g += std::pow(lambda, max_n - 1) * n_step(max_n);
		out[t] = g;
	}
	return out;
}

std::vector<double> to_vector(const torch::Tensor& t)
{
	auto c = t.to(torch::kFloat64).contiguous();
	return {c.data_ptr<double>(), c.data_ptr<double>() + c.numel()};
}

} // namespace

TEST_SUITE("behavior")
{
	TEST_CASE("return config validation")
	{
		ReturnConfig ok;
		CHECK_NOTHROW(ok.validate());
		for (auto mutate : std::vector<std::function<void(ReturnConfig&)>>{
					 [](ReturnConfig& c) { c.gamma = 1.0; },
					 [](ReturnConfig& c) { c.lambda = 0.0; },
					 [](ReturnConfig& c) { c.horizon = 0; },
					 [](ReturnConfig& c) { c.entropy_scale = -1.0; }})
		{
			ReturnConfig bad;
			mutate(bad);
			CHECK_THROWS_AS(bad.validate(), ConfigError);
		}
	}

	TEST_CASE("lambda returns: collapsed cases")
	{
		auto u = torch::tensor({1.0, 2.0, 3.0, 0.0}, kDouble);
		auto v = torch::tensor({0.5, -1.0, 4.0, 2.0}, kDouble);
		const double gamma = 0.9;
		auto zero = to_vector(lambda_returns(u, v, gamma, 0.0));
		for (int t = 0; t < 3; ++t)
		{
			CHECK(zero[t] == doctest::Approx(to_vector(u)[t] + gamma * to_vector(v)[t + 1]).epsilon(1e-14));
		}
		auto one = to_vector(lambda_returns(u, v, gamma, 1.0));
		CHECK(one[0] == doctest::Approx(1.0 + gamma * 2.0 + gamma * gamma * 3.0 + std::pow(gamma, 3) * 2.0).epsilon(1e-14));
		CHECK(one[3] == 2.0);
		CHECK_THROWS_AS(lambda_returns(u, v.narrow(0, 0, 3), gamma, 0.5), ContractError);
	}

	TEST_CASE("lambda returns: H=3 example and random oracle")
	{
		auto u = std::vector<double>{1.0, 2.0, 3.0, 0.0};
		auto v = std::vector<double>{0.3, -0.7, 1.1, 2.5};
		auto got = to_vector(lambda_returns(torch::tensor(u, kDouble), torch::tensor(v, kDouble), 0.99, 0.95));
		auto expected = lambda_oracle(u, v, 0.99, 0.95);
		for (int t = 0; t < 4; ++t)
		{
			CHECK(std::abs(got[t] - expected[t]) < 1e-10);
		}

		std::mt19937_64 rng(2);
		std::uniform_int_distribution<int> horizon(1, 6);
		std::uniform_real_distribution<double> unit(0.01, 0.99);
		std::normal_distribution<double> n(0.0, 3.0);
		for (int trial = 0; trial < 200; ++trial)
		{
			const int h = horizon(rng);
			std::vector<double> uu(h + 1);
			std::vector<double> vv(h + 1);
			for (int i = 0; i <= h; ++i)
			{
				uu[i] = i < h ? n(rng) : 0.0;
				vv[i] = n(rng);
			}
			const double gamma = unit(rng);
			const double lambda = unit(rng);
			auto g = to_vector(lambda_returns(torch::tensor(uu, kDouble), torch::tensor(vv, kDouble), gamma, lambda));
			auto o = lambda_oracle(uu, vv, gamma, lambda);
			for (int i = 0; i <= h; ++i)
			{
				CHECK(std::abs(g[i] - o[i]) < 1e-10);
			}
		}
	}

	TEST_CASE("lambda returns are monotone in each step utility")
	{
		std::mt19937_64 rng(6);
		std::normal_distribution<double> n(0.0, 1.0);
		std::uniform_real_distribution<double> unit(0.05, 0.95);
		std::uniform_real_distribution<double> bump(0.0, 2.0);
		for (int trial = 0; trial < 100; ++trial)
		{
			const int h = 5;
			auto u = torch::randn({h + 1}, kDouble);
			auto v = torch::randn({h + 1}, kDouble);
			const double gamma = unit(rng);
			const double lambda = unit(rng);
			const int t = static_cast<int>(rng() % h);
			auto raised = u.clone();
			raised[t] += bump(rng);
			auto before = to_vector(lambda_returns(u, v, gamma, lambda));
			auto after = to_vector(lambda_returns(raised, v, gamma, lambda));
			for (int s = 0; s <= t; ++s)
			{
				CHECK(after[s] >= before[s]);
			}
		}
	}

	TEST_CASE("entropy examples")
	{
		CHECK(categorical_entropy(torch::zeros({3}, kDouble)).item<double>() == doctest::Approx(std::log(3.0)).epsilon(1e-14));
		auto peaked = torch::tensor({0.0, -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()}, kDouble);
		CHECK(categorical_entropy(peaked).item<double>() == 0.0);
		auto stddev = torch::tensor({0.5, 2.0}, kDouble);
		const double expected = 0.5 * (std::log(2 * std::numbers::pi * std::numbers::e * 0.25) +
																	 std::log(2 * std::numbers::pi * std::numbers::e * 4.0));
		CHECK(gaussian_entropy(stddev).item<double>() == doctest::Approx(expected).epsilon(1e-14));
		// At u = 0 the squashing Jacobian is 1.
		CHECK(squashed_gaussian_entropy(stddev, torch::zeros({2}, kDouble)).item<double>() ==
					doctest::Approx(expected).epsilon(1e-14));
		auto u = torch::tensor({0.7, -30.0}, kDouble);
		const double log_det = std::log(1 - std::pow(std::tanh(0.7), 2)) + (2 * std::log(2.0) - 60.0);
		CHECK(squashed_gaussian_entropy(stddev, u).item<double>() == doctest::Approx(expected + log_det).epsilon(1e-10));
	}

	TEST_CASE("continuous policy actions stay in [-1, 1]")
	{
		torch::manual_seed(0);
		envs::ActionSpace space{envs::ActionSpace::Kind::continuous, 2};
		ActionModel actor(6, 8, space);
		auto dist = actor->forward(torch::randn({64, 6}) * 50.0);
		auto step = dist.sample();
		CHECK(torch::all(step.action.abs() <= 1.0).item<bool>());
		CHECK(torch::all(dist.mode().abs() <= 1.0).item<bool>());
		CHECK(torch::all(dist.stddev > 0).item<bool>());
		CHECK_THROWS_AS(dist.entropy(), ContractError);

		envs::ActionSpace discrete{envs::ActionSpace::Kind::discrete, 3};
		ActionModel cat(6, 8, discrete);
		auto d = cat->forward(torch::randn({10, 6}));
		CHECK(torch::all(torch::isfinite(d.logits)).item<bool>());
		auto s = d.sample();
		CHECK(torch::all(s.action.sum(-1) == 1).item<bool>());
	}

	TEST_CASE("step utilities: entropy scale zero is bit-exact, goal argmax invariant to score shifts")
	{
		torch::manual_seed(1);
		auto states = torch::tanh(torch::randn({7, 4}, kDouble));
		auto goal = torch::tanh(torch::randn({4}, kDouble));
		auto negatives = torch::tanh(torch::randn({5, 4}, kDouble));
		auto h0 = torch::rand({7}, kDouble);
		auto h1 = torch::rand({7}, kDouble) * 10.0;
		CHECK(torch::equal(step_utility_gnce(states, goal, negatives, h0, 0.0), step_utility_gnce(states, goal, negatives, h1, 0.0)));
		CHECK(torch::equal(step_utility_grl(h0, h0, 0.0), step_utility_grl(h0, h1, 0.0)));
		auto decoded = torch::rand({7, 3, 4, 4}, kDouble);
		auto goal_img = torch::rand({3, 4, 4}, kDouble);
		CHECK(torch::equal(
			step_utility_gaif(decoded, goal_img, envs::GoalPrior::laplace, std::nullopt, h0, 0.0),
			step_utility_gaif(decoded, goal_img, envs::GoalPrior::laplace, std::nullopt, h1, 0.0)));

		// Shifting every critic score by the same constant: -f(goal,s) + lse over shifted scores
		// changes each state's utility by the same amount, so the ranking holds.
		auto base = step_utility_gnce(states, goal, negatives, h0, 0.0);
		auto scores_goal = torch::matmul(states, goal) + 2.5;
		auto scores_neg = torch::matmul(states, negatives.t()) + 2.5;
		auto shifted = -scores_goal + torch::logsumexp(scores_neg, 1) - std::log(5.0);
		CHECK(torch::equal(base.argsort(), shifted.argsort()));
		CHECK_THROWS_AS(step_utility_gnce(states, goal, negatives.narrow(0, 0, 0), h0, 0.0), ContractError);
	}

	TEST_CASE("goal log-density matches the Laplace and Gaussian closed forms")
	{
		auto goal = torch::zeros({3, 2, 2}, kDouble);
		auto images = goal.unsqueeze(0).clone();
		CHECK(goal_log_density(images, goal, envs::GoalPrior::laplace).item<double>() == doctest::Approx(-12 * std::log(2.0)));
		auto off = images + 0.5;
		CHECK(goal_log_density(off, goal, envs::GoalPrior::laplace).item<double>() == doctest::Approx(-6.0 - 12 * std::log(2.0)));
		CHECK(goal_log_density(off, goal, envs::GoalPrior::gaussian).item<double>() ==
					doctest::Approx(-0.5 * 12 * 0.25 - 6 * std::log(2 * std::numbers::pi)));
	}

	TEST_CASE("REINFORCE: zero returns give zero gradient, constant returns average to zero")
	{
		auto logits = torch::tensor({0.3, -0.2, 1.0}, kDouble).requires_grad_();
		PolicyDistribution dist;
		dist.logits = logits.expand({4, 3});
		auto step = dist.sample();
		auto zeros = torch::zeros({1, 4}, kDouble);
		actor_loss_reinforce(zeros, zeros, step.log_prob.unsqueeze(0)).backward();
		CHECK(torch::all(logits.grad() == 0).item<bool>());

		logits.mutable_grad().zero_();
		torch::manual_seed(3);
		const int n = 40000;
		PolicyDistribution many;
		many.logits = logits.expand({n, 3});
		auto samples = many.sample();
		auto c = torch::full({1, n}, 2.0, kDouble);
		actor_loss_reinforce(c, torch::zeros_like(c), samples.log_prob.unsqueeze(0)).backward();
		CHECK(logits.grad().abs().max().item<double>() < 0.05);
		CHECK_THROWS_AS(actor_loss_reinforce(c, c, c.squeeze(0)), ContractError);
	}

	TEST_CASE("pathwise actor gradient matches finite differences on a quadratic utility")
	{
		torch::manual_seed(4);
		envs::ActionSpace space{envs::ActionSpace::Kind::continuous, 2};
		ActionModel actor(3, 5, space);
		actor->to(torch::kFloat64);
		auto state = torch::randn({4, 3}, kDouble);
		auto noise = torch::randn({4, 2}, kDouble);
		auto target = torch::tensor({0.3, -0.6}, kDouble);
		auto loss = [&]
		{
			auto action = actor->forward(state).sample(noise).action;
			auto u = (action - target).pow(2).sum(-1);
			auto utilities = torch::stack({u, torch::zeros_like(u)});
			auto values = torch::zeros_like(utilities);
			auto returns = lambda_returns(utilities, values, 0.99, 0.95);
			return actor_loss_pathwise(returns.narrow(0, 0, 1));
		};
		auto check = caif::testing::gradcheck(loss, actor->parameters());
		CHECK(check.fraction() >= 0.95);
	}

	TEST_CASE("utility loss examples")
	{
		auto r = torch::randn({5, 3}, kDouble);
		CHECK(utility_net_loss(r, r).item<double>() == 0.0);
		CHECK(utility_net_loss(r + 0.5, r).item<double>() == doctest::Approx(0.25).epsilon(1e-14));
		auto p = torch::randn({5, 3}, kDouble);
		double oracle = 0.0;
		auto pv = to_vector(p);
		auto rv = to_vector(r);
		for (std::size_t i = 0; i < pv.size(); ++i)
		{
			oracle += (pv[i] - rv[i]) * (pv[i] - rv[i]);
		}
		CHECK(utility_net_loss(p, r).item<double>() == doctest::Approx(oracle / 15.0).epsilon(1e-14));
	}

	TEST_CASE("copy_parameters clones values without sharing storage")
	{
		torch::manual_seed(5);
		UtilityModel a(4, 6);
		UtilityModel b(4, 6);
		copy_parameters(*b, *a);
		auto x = torch::randn({3, 4});
		CHECK(torch::equal(a->forward(x), b->forward(x)));
		{
			torch::NoGradGuard no_grad;
			a->parameters()[0].add_(1.0);
		}
		CHECK_FALSE(torch::equal(a->forward(x), b->forward(x)));
	}
}
