#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "evalrl/objectives.hpp"
#include "fixtures.hpp"

using namespace evalrl;
using fixtures::flatten;

namespace {

// Two-sample group on a 3-bin, 1-feature policy with chosen ratios.
GroupSample forced_ratio_group(const PolicyParams& p, double ratio0, double ratio1,
                               std::vector<double> adv) {
  const std::vector<double> x{1.0};
  const auto lp = policy_log_distribution(p, x);
  GroupSample g;
  g.input = x;
  g.rollout.bin_indices = {0, 1};
  g.rollout.values = {p.grid.value(0), p.grid.value(1)};
  g.rollout.old_logprobs = {lp(0) - std::log(ratio0), lp(1) - std::log(ratio1)};
  g.rollout.rewards = {0, 0};
  g.rollout.advantages = std::move(adv);
  return g;
}

}  // namespace

TEST(GrpoLoss, OnPolicyIdentityIsZero) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    auto in = fixtures::random_grpo_instance(rng);
    for (auto& g : in.groups) {
      g.rollout.old_logprobs.clear();
      const auto lp = policy_log_distribution(in.params, g.input);
      for (int b : g.rollout.bin_indices) g.rollout.old_logprobs.push_back(lp(b));
    }
    in.cfg.kl_beta = 0.0;
    EXPECT_LT(std::abs(grpo_loss(in.params, in.groups, in.params, in.cfg)), 1e-9);
    in.cfg.kl_beta = 0.1;
    EXPECT_LT(std::abs(grpo_loss(in.params, in.groups, in.params, in.cfg)), 1e-9);
  }
}

TEST(GrpoLoss, ClipBranchesByHand) {
  // A = (+1, -1) with ratios (1 + 2 eps, 1 - 2 eps), beta = 0. Both branches
  // bind: min(1+2e, 1+e) = 1+e and min(-(1-2e), -(1-e)) = -(1-e).
  const double eps = 0.2;
  GrpoConfig cfg;
  cfg.clip_epsilon = eps;
  cfg.kl_beta = 0.0;
  auto p = PolicyParams::zeros(BinGrid(3, ScoreRange(0, 1)), 1);
  p.bias << 0.3, -0.2, 0.1;
  const std::vector<GroupSample> groups{forced_ratio_group(p, 1 + 2 * eps, 1 - 2 * eps, {1, -1})};
  const double expected = -((1 + eps) * 1 + (1 - eps) * -1) / 2;
  EXPECT_NEAR(grpo_loss(p, groups, p, cfg), expected, 1e-12);
  EXPECT_NEAR(expected, -eps, 1e-15);

  // Ratios inside the interval take the unclipped values.
  const std::vector<GroupSample> inside{forced_ratio_group(p, 1.1, 0.95, {1, -1})};
  EXPECT_NEAR(grpo_loss(p, inside, p, cfg), -(1.1 - 0.95) / 2, 1e-12);
}

TEST(GrpoLoss, KlOnlyWhenAdvantagesZero) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 20; ++i) {
    auto in = fixtures::random_grpo_instance(rng);
    for (auto& g : in.groups) std::fill(g.rollout.advantages.begin(), g.rollout.advantages.end(), 0.0);
    in.cfg.kl_beta = 0.07;
    const double kl = mean_kl(in.params, in.groups, in.ref);
    EXPECT_GT(kl, 0.0);
    EXPECT_NEAR(grpo_loss(in.params, in.groups, in.ref, in.cfg), 0.07 * kl, 1e-12);
    in.cfg.kl_beta = 0.0;
    const auto lg = grpo_loss_and_gradient(in.params, in.groups, in.ref, in.cfg);
    EXPECT_EQ(lg.gradient.squared_norm(), 0.0);
  }
}

TEST(GrpoLoss, MatchesOracle) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const auto in = fixtures::random_grpo_instance(rng);
    const double lib = grpo_loss(in.params, in.groups, in.ref, in.cfg);
    const double ref = oracle::grpo_loss(fixtures::plain(in.params), fixtures::plain(in.ref),
                                         fixtures::plain_groups(in.groups), in.cfg.clip_epsilon,
                                         in.cfg.kl_beta);
    EXPECT_NEAR(lib, ref, 1e-12 * std::max(1.0, std::abs(ref)));
    EXPECT_DOUBLE_EQ(grpo_loss_and_gradient(in.params, in.groups, in.ref, in.cfg).loss, lib);
  }
}

TEST(GrpoGradient, FiniteDifferences) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 120; ++i) {
    const auto in = fixtures::random_grpo_instance(rng);
    const auto grid = in.params.grid;
    const int dim = in.params.feature_dim();
    auto f = [&](const std::vector<double>& t) {
      return grpo_loss(fixtures::unflatten(t, grid, dim), in.groups, in.ref, in.cfg);
    };
    const auto fd = oracle::central_difference(f, flatten(in.params));
    const auto an = flatten(grpo_loss_and_gradient(in.params, in.groups, in.ref, in.cfg).gradient);
    EXPECT_LT(oracle::relative_error(an, fd), 1e-5) << "instance " << i;
  }
}

TEST(GrpoGradient, UnclippedPolicyGradientOnPolicy) {
  // params = old, beta = 0: every ratio is 1, so the gradient is
  // -1/(nG) sum_i A_i (e_{k_i} - p) x^T.
  std::mt19937_64 rng(5);
  auto in = fixtures::random_grpo_instance(rng);
  in.old = in.params;
  in.cfg.kl_beta = 0.0;
  for (auto& g : in.groups) {
    g.rollout.old_logprobs.clear();
    const auto lp = policy_log_distribution(in.params, g.input);
    for (int b : g.rollout.bin_indices) g.rollout.old_logprobs.push_back(lp(b));
  }
  const int bins = in.params.bin_count(), dim = in.params.feature_dim();
  std::vector<double> gw(bins * dim, 0.0), gb(bins, 0.0);
  const double n = static_cast<double>(in.groups.size());
  const auto pi = fixtures::plain(in.params);
  for (const auto& g : in.groups) {
    const auto p = pi.probs(g.input);
    const double G = static_cast<double>(g.rollout.size());
    for (std::size_t i = 0; i < g.rollout.size(); ++i) {
      for (int k = 0; k < bins; ++k) {
        const double d = ((k == g.rollout.bin_indices[i]) - p[k]) * g.rollout.advantages[i] / (n * G);
        gb[k] -= d;
        for (int f = 0; f < dim; ++f) gw[k * dim + f] -= d * g.input[f];
      }
    }
  }
  gw.insert(gw.end(), gb.begin(), gb.end());
  const auto an = flatten(grpo_loss_and_gradient(in.params, in.groups, in.params, in.cfg).gradient);
  EXPECT_LT(oracle::relative_error(an, gw), 1e-12);
}

TEST(GrpoGradient, ClippedSideIsFlat) {
  // ratio0 > 1+eps with A > 0 and ratio1 < 1-eps with A < 0: raising bin 0
  // keeps both terms clipped, so the loss does not move and the gradient is 0.
  GrpoConfig cfg;
  cfg.kl_beta = 0.0;
  auto p = PolicyParams::zeros(BinGrid(3, ScoreRange(0, 1)), 1);
  const auto groups = std::vector<GroupSample>{forced_ratio_group(p, 1.5, 0.6, {1, -1})};
  const double base = grpo_loss(p, groups, p, cfg);
  EXPECT_EQ(grpo_loss_and_gradient(p, groups, p, cfg).gradient.squared_norm(), 0.0);
  for (double up : {0.1, 0.5, 2.0}) {
    auto q = p;
    q.bias(0) += up;
    EXPECT_EQ(grpo_loss(q, groups, p, cfg), base);
  }
}

TEST(MeanKl, ZeroOnEqualParams) {
  std::mt19937_64 rng(6);
  const auto in = fixtures::random_grpo_instance(rng);
  EXPECT_LT(std::abs(mean_kl(in.params, in.groups, in.params)), 1e-12);
  EXPECT_GE(mean_kl(in.params, in.groups, in.ref), 0.0);
}

TEST(MleLoss, Examples) {
  const auto grid = default_single_grid();
  const auto uniform = PolicyParams::zeros(grid, 2);
  const std::vector<MleExample> ex{{{0.5, -1}, 7.0}, {{2, 0}, 3.2}};
  EXPECT_NEAR(mle_loss(uniform, ex), std::log(21.0), 1e-12);
  EXPECT_NEAR(std::log(21.0), 3.0445, 1e-4);

  auto sharp = uniform;
  sharp.bias(14) = 60;  // s_ref 7.0 sits on bin 14
  EXPECT_LT(mle_loss(sharp, std::vector<MleExample>{{{0.5, -1}, 7.0}}), 1e-20);
  sharp.bias(14) = 0;
  sharp.bias(15) = 60;  // 7.25 rounds down to bin 14, not 15
  EXPECT_GT(mle_loss(sharp, std::vector<MleExample>{{{0.5, -1}, 7.25}}), 50.0);
}

TEST(MleLoss, BoundedAtInitialisation) {
  std::mt19937_64 rng(7);
  const auto grid = default_single_grid();
  std::vector<MleExample> ex;
  for (int i = 0; i < 30; ++i) ex.push_back({fixtures::normal_vector(rng, 4), 10.0 * (i / 29.0)});
  const double l = mle_loss(PolicyParams::zeros(grid, 4), ex);
  EXPECT_GE(l, 0.0);
  EXPECT_LE(l, std::log(21.0) + 1e-12);
}

TEST(MleLoss, MatchesOracleAndFiniteDifferences) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 120; ++i) {
    const int bins = fixtures::uniform_int(rng, 5, 21), dim = fixtures::uniform_int(rng, 2, 8);
    const BinGrid grid(bins, ScoreRange(1, 5));
    const auto params = fixtures::random_policy(rng, grid, dim, 0.7);
    std::vector<MleExample> ex;
    std::vector<std::vector<double>> xs;
    std::vector<int> targets;
    for (int n = fixtures::uniform_int(rng, 1, 6); n > 0; --n) {
      const double ref = 1 + 4 * u(rng);
      ex.push_back({fixtures::normal_vector(rng, dim), ref});
      xs.push_back(ex.back().input);
      targets.push_back(fixtures::nearest_bin(grid, ref));
    }
    const double lib = mle_loss(params, ex);
    EXPECT_NEAR(lib, oracle::mle_loss(fixtures::plain(params), xs, targets), 1e-12 * std::max(1.0, lib));
    auto f = [&](const std::vector<double>& t) {
      return mle_loss(fixtures::unflatten(t, grid, dim), ex);
    };
    const auto fd = oracle::central_difference(f, flatten(params));
    const auto an = flatten(mle_loss_and_gradient(params, ex).gradient);
    EXPECT_LT(oracle::relative_error(an, fd), 1e-6) << "instance " << i;
  }
}

TEST(MleExamples, FromTasks) {
  const std::vector<SingleEvalTask> tasks{{"a", {1, 2}, dimension_tag("overall"), ScoreRange(0, 10), 4}};
  const auto ex = mle_examples(tasks);
  ASSERT_EQ(ex.size(), 1u);
  EXPECT_EQ(ex[0].input, (FeatureVector{1, 2}));
  EXPECT_EQ(ex[0].reference, 4.0);
}

TEST(RankingLoss, Examples) {
  RankingConfig cfg;
  auto params = ScalarRewardParams::zeros(2);
  const std::vector<RankingPair> pairs{{{1, 0}, {0, 1}}};
  EXPECT_NEAR(ranking_loss(params, pairs, cfg), std::log(2.0), 1e-15);

  // r_c = +s, r_r = -s: centred, and the sigmoid term saturates.
  params.weights << 40, -40;
  EXPECT_LT(ranking_loss(params, pairs, cfg), 1e-30);

  // The centering term alone is minimised where r_c + r_r = 0.
  RankingConfig center_only;
  center_only.center_coeff = 1;
  ScalarRewardParams b = ScalarRewardParams::zeros(2);
  b.bias = 0.3;
  const std::vector<RankingPair> same{{{0, 0}, {0, 0}}};
  EXPECT_NEAR(ranking_loss(b, same, center_only), std::log(2.0) + 0.36, 1e-12);
  b.bias = 0.0;
  EXPECT_NEAR(ranking_loss(b, same, center_only), std::log(2.0), 1e-15);
}

TEST(RankingLoss, SigmoidTermAntisymmetryWithoutMargin) {
  std::mt19937_64 rng(9);
  RankingConfig cfg;
  cfg.center_coeff = 0;
  for (int i = 0; i < 50; ++i) {
    ScalarRewardParams p = ScalarRewardParams::zeros(3);
    const auto w = fixtures::normal_vector(rng, 3);
    p.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), 3);
    const auto c = fixtures::normal_vector(rng, 3), r = fixtures::normal_vector(rng, 3);
    const double d = p.score(c) - p.score(r);
    const double fwd = ranking_loss(p, std::vector<RankingPair>{{c, r}}, cfg);
    const double back = ranking_loss(p, std::vector<RankingPair>{{r, c}}, cfg);
    EXPECT_NEAR(back - fwd, d, 1e-12 * std::max(1.0, std::abs(d)));
  }
}

TEST(RankingLoss, StableForLargeScores) {
  RankingConfig cfg;
  cfg.center_coeff = 0;
  ScalarRewardParams p = ScalarRewardParams::zeros(1);
  p.weights << 1000;
  const std::vector<RankingPair> wrong{{{-1}, {1}}};
  EXPECT_NEAR(ranking_loss(p, wrong, cfg), 2000.0, 1e-9);
  const auto [loss, grad] = ranking_loss_and_gradient(p, wrong, cfg);
  EXPECT_TRUE(std::isfinite(loss));
  EXPECT_NEAR(grad.weights(0), 2.0, 1e-12);
}

TEST(RankingLoss, MatchesOracleAndFiniteDifferences) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 120; ++i) {
    const int dim = fixtures::uniform_int(rng, 2, 8);
    RankingConfig cfg;
    cfg.margin = u(rng);
    cfg.center_coeff = u(rng);
    std::vector<RankingPair> pairs;
    std::vector<std::pair<std::vector<double>, std::vector<double>>> plain_pairs;
    for (int n = fixtures::uniform_int(rng, 1, 6); n > 0; --n) {
      pairs.push_back({fixtures::normal_vector(rng, dim), fixtures::normal_vector(rng, dim)});
      plain_pairs.push_back({pairs.back().chosen, pairs.back().rejected});
    }
    std::vector<double> theta = fixtures::normal_vector(rng, dim + 1, 0.5);
    auto make = [dim](const std::vector<double>& t) {
      ScalarRewardParams p = ScalarRewardParams::zeros(dim);
      for (int f = 0; f < dim; ++f) p.weights(f) = t[f];
      p.bias = t[dim];
      return p;
    };
    const auto params = make(theta);
    const double lib = ranking_loss(params, pairs, cfg);
    const std::vector<double> w(theta.begin(), theta.begin() + dim);
    EXPECT_NEAR(lib, oracle::ranking_loss(w, theta[dim], plain_pairs, cfg.margin, cfg.center_coeff),
                1e-12 * std::max(1.0, lib));
    auto f = [&](const std::vector<double>& t) { return ranking_loss(make(t), pairs, cfg); };
    const auto fd = oracle::central_difference(f, theta);
    const auto [loss, grad] = ranking_loss_and_gradient(params, pairs, cfg);
    std::vector<double> an(grad.weights.data(), grad.weights.data() + dim);
    an.push_back(grad.bias);
    EXPECT_LT(oracle::relative_error(an, fd), 1e-5) << "instance " << i;
    EXPECT_EQ(loss, lib);
  }
}

TEST(RankingPairs, BetterSideFirstTiesSkipped) {
  const std::vector<PairEvalTask> tasks{{"1", {1}, {2}, 1.0, 1}, {"2", {3}, {4}, 0.0, 1},
                                        {"3", {5}, {6}, 0.5, std::nullopt}};
  const auto p = ranking_pairs(tasks);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p[0].chosen, FeatureVector{1});
  EXPECT_EQ(p[1].chosen, FeatureVector{4});
}

TEST(Configs, Validation) {
  GrpoConfig g;
  EXPECT_NO_THROW(g.validate());
  g.clip_epsilon = 1.0;
  EXPECT_THROW(g.validate(), InputError);
  g = {};
  g.group_size = 1;
  EXPECT_THROW(g.validate(), InputError);
  g = {};
  g.kl_beta = -1;
  EXPECT_THROW(g.validate(), InputError);
  RankingConfig r;
  r.margin = -1;
  EXPECT_THROW(r.validate(), InputError);
  EXPECT_EQ(GrpoConfig{}.group_size, 8);
}
