#include <cmath>

#include <gtest/gtest.h>

#include "iqlphase/errors.hpp"
#include "iqlphase/learner.hpp"
#include "oracles.hpp"

using namespace iqlphase;

namespace {

NetShape shape(int input, std::vector<int> hidden) {
  NetShape s;
  s.input_dim = input;
  s.hidden = std::move(hidden);
  return s;
}

// Two one-hot "states" over a 2-d input; a zero-bias linear net is then a Q table.
NetParams table(const std::array<QValues, 2>& q) {
  NetParams p(shape(2, {}));
  for (int a = 0; a < kNumActions; ++a) {
    p.weights(0)(a, 0) = q[0][a];
    p.weights(0)(a, 1) = q[1][a];
  }
  return p;
}

TrainerConfig quick_config() {
  TrainerConfig cfg;
  cfg.hidden = {32, 32};
  cfg.warmup = 200;
  cfg.batch_size = 16;
  return cfg;
}

}  // namespace

TEST(Epsilon, Schedule) {
  TrainerConfig cfg;
  EXPECT_EQ(epsilon(0, cfg), 1.0);
  EXPECT_DOUBLE_EQ(epsilon(1, cfg), 0.98);
  EXPECT_EQ(epsilon(1000, cfg), 0.01);
  double prev = 2.0;
  for (int e = 0; e < 2000; ++e) {
    const double eps = epsilon(e, cfg);
    EXPECT_LE(eps, prev);
    EXPECT_GE(eps, 0.01);
    prev = eps;
  }
}

TEST(SelectAction, GreedyAndTieBreak) {
  Rng rng(1);
  EXPECT_EQ(select_action(std::vector<double>{0, 1, 0, 0, 0}, 0.0, rng), 1);
  EXPECT_EQ(select_action(std::vector<double>{0.5, 0.5, 0.5, 0.5, 0.5}, 0.0, rng), 0);
  EXPECT_EQ(greedy_action(std::vector<double>{-1, 2, 3, 3, 0}), 2);
}

TEST(SelectAction, FullExplorationIsUniform) {
  Rng rng(2);
  std::vector<long> counts(kNumActions, 0);
  const std::vector<double> q{0, 10, 0, 0, 0};
  for (int k = 0; k < 100000; ++k) ++counts[select_action(q, 1.0, rng)];
  EXPECT_LT(oracle::chi_square(counts, 20000.0), oracle::chi_square_critical_p001(4));
}

TEST(Targets, DoubleDqnHandTable) {
  // Online prefers action 1 in state B; the target net scores that action 0.5.
  const NetParams online = table({QValues{0, 0, 0, 0, 0}, QValues{0.2, 0.9, 0.1, 0.3, 0.0}});
  const NetParams target = table({QValues{0, 0, 0, 0, 0}, QValues{2.0, 0.5, 1.0, 1.0, 1.0}});
  Transition t;
  t.obs = {1, 0};
  t.next_obs = {0, 1};
  t.reward = 0.1;
  t.done = false;
  const std::vector<Transition> batch{t};
  EXPECT_DOUBLE_EQ(compute_targets(batch, online, target, 0.95)[0], 0.575);

  // Vanilla DQN when target == online: y = r + gamma * max Q.
  EXPECT_DOUBLE_EQ(compute_targets(batch, target, target, 0.95)[0], 0.1 + 0.95 * 2.0);
}

TEST(Targets, TerminalAndZeroDiscount) {
  Rng rng(3);
  const NetParams online = init_params(shape(4, {8}), rng);
  const NetParams target = init_params(shape(4, {8}), rng);
  std::vector<Transition> batch;
  for (int k = 0; k < 10; ++k) {
    Transition t;
    t.obs = {rng.uniform01(), rng.uniform01(), rng.uniform01(), rng.uniform01()};
    t.next_obs = {rng.uniform01(), rng.uniform01(), rng.uniform01(), rng.uniform01()};
    t.reward = rng.uniform(-1, 1);
    t.done = k % 2 == 0;
    batch.push_back(t);
  }
  const auto y = compute_targets(batch, online, target, 0.95);
  const auto y0 = compute_targets(batch, online, target, 0.0);
  for (int k = 0; k < 10; ++k) {
    if (batch[k].done) EXPECT_EQ(y[k], batch[k].reward);
    EXPECT_EQ(y0[k], batch[k].reward);
  }
}

TEST(Targets, MatchBruteForceEnumeration) {
  Rng rng(4);
  const NetParams online = init_params(shape(3, {6}), rng);
  const NetParams target = init_params(shape(3, {6}), rng);
  std::vector<Transition> batch;
  for (int k = 0; k < 20; ++k) {
    Transition t;
    t.obs = {0, 0, 0};
    t.next_obs = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    t.reward = rng.uniform(-1, 1);
    t.done = rng.uniform01() < 0.3;
    batch.push_back(t);
  }
  const auto y = compute_targets(batch, online, target, 0.9);
  for (int k = 0; k < 20; ++k) {
    const auto qo = oracle::forward(online, batch[k].next_obs);
    const auto qt = oracle::forward(target, batch[k].next_obs);
    int best = 0;
    for (int a = 1; a < kNumActions; ++a) {
      if (qo[a] > qo[best]) best = a;
    }
    const double expect = batch[k].reward + (batch[k].done ? 0.0 : 0.9 * qt[best]);
    EXPECT_NEAR(y[k], expect, 1e-12);
  }
}

TEST(JointAction, OneSnapshotForAllAgents) {
  Rng rng(5);
  GridWorld env(GridConfig::for_condition(8, Density::from_denominator(8), true, 5));
  env.reset();
  const NetParams p = init_params(shape(env.config().observation_dim(), {16}), rng);
  const auto joint = select_joint_action(p, env, 0.0, rng);
  for (int i = 0; i < env.config().agent_count; ++i) {
    const QValues q = forward(p, env.observe(i));
    EXPECT_EQ(static_cast<int>(joint[i]), greedy_action(q)) << "agent " << i;
  }
}

TEST(Learner, NoUpdatesBeforeWarmup) {
  TrainerConfig cfg;
  cfg.hidden = {16};
  Learner learner(GridConfig::for_condition(8, Density::from_denominator(32), true, 1), cfg, 1);
  const NetParams before = learner.online();
  const EpisodeLog log = learner.train_episode();
  ASSERT_LT(learner.buffer().size(), cfg.warmup);
  EXPECT_TRUE(log.td_errors.empty());
  EXPECT_TRUE(log.grad_norms.empty());
  EXPECT_EQ(log.update_count, 0);
  EXPECT_TRUE(std::equal(before.flat().begin(), before.flat().end(), learner.online().flat().begin()));
  EXPECT_TRUE(std::equal(before.flat().begin(), before.flat().end(), learner.target().flat().begin()));
}

TEST(Learner, SameSeedSameLogs) {
  const auto grid = GridConfig::for_condition(8, Density::from_denominator(16), true, 3);
  Learner a(grid, quick_config(), 3);
  Learner b(grid, quick_config(), 3);
  for (int e = 0; e < 8; ++e) ASSERT_EQ(a.train_episode(), b.train_episode()) << "episode " << e;
  EXPECT_TRUE(std::equal(a.online().flat().begin(), a.online().flat().end(), b.online().flat().begin()));
  EXPECT_EQ(a.evaluate(3), b.evaluate(3));
}

TEST(Learner, UpdateCountAndFiniteLogs) {
  TrainerConfig cfg = quick_config();
  cfg.updates_per_env_step = 2;
  Learner learner(GridConfig::for_condition(8, Density::from_denominator(16), true, 4), cfg, 4);
  int updates = 0;
  for (int e = 0; e < 6; ++e) {
    const EpisodeLog log = learner.train_episode();
    EXPECT_EQ(log.update_count, 2 * log.steps_after_warmup);
    EXPECT_EQ(log.grad_norms.size(), static_cast<std::size_t>(log.update_count));
    EXPECT_EQ(log.td_errors.size(), static_cast<std::size_t>(log.update_count) * 16u);
    EXPECT_EQ(log.arrival_steps.size(), 4u);
    EXPECT_EQ(log.episode_index, e);
    for (double d : log.td_errors) ASSERT_TRUE(std::isfinite(d));
    for (double g : log.grad_norms) ASSERT_TRUE(std::isfinite(g) && g >= 0.0);
    updates += log.update_count;
  }
  EXPECT_GT(updates, 0);
  EXPECT_EQ(learner.adam().t, updates);
  EXPECT_TRUE(all_finite(learner.online().flat()));
}

TEST(Learner, EvaluationIsPure) {
  Learner learner(GridConfig::for_condition(8, Density::from_denominator(16), true, 6), quick_config(), 6);
  for (int e = 0; e < 4; ++e) learner.train_episode();
  const NetParams online = learner.online();
  const NetParams target = learner.target();
  const AdamState adam = learner.adam();
  const std::size_t size = learner.buffer().size();
  const Transition newest = learner.buffer().at(size - 1);
  const auto evals = learner.evaluate(5);
  EXPECT_EQ(evals.size(), 5u);
  for (const auto& r : evals) EXPECT_EQ(r.episode_index, 3);
  EXPECT_TRUE(std::equal(online.flat().begin(), online.flat().end(), learner.online().flat().begin()));
  EXPECT_TRUE(std::equal(target.flat().begin(), target.flat().end(), learner.target().flat().begin()));
  EXPECT_EQ(adam, learner.adam());
  EXPECT_EQ(learner.buffer().size(), size);
  EXPECT_EQ(learner.buffer().at(size - 1), newest);
}

TEST(Evaluate, GreedyIsDeterministicGivenSeed) {
  Rng rng(7);
  const auto grid = GridConfig::for_condition(8, Density::from_denominator(32), true, 7);
  const NetParams p = init_params(shape(grid.observation_dim(), {16}), rng);
  Rng e1(99), e2(99);
  EXPECT_EQ(evaluate(p, grid, 10, e1), evaluate(p, grid, 10, e2));
}

TEST(Evaluate, UntrainedNetRarelySucceeds) {
  Rng rng(8);
  const auto grid = GridConfig::for_condition(8, Density::from_denominator(32), true, 8);
  const NetParams p = init_params(shape(grid.observation_dim(), {128, 128}), rng);
  Rng eval_rng(1);
  const auto records = evaluate(p, grid, 20, eval_rng);
  int ok = 0;
  for (const auto& r : records) ok += r.all_reached;
  EXPECT_LT(ok, 10);
}

TEST(Evaluate, ConstructedGoalSeekingPolicyAlwaysArrives) {
  // h = relu of the four signed row/column offsets; Q(up) = h[r - gr], etc.
  NetParams p(shape(4, {4}));
  p.weights(0) << 1, 0, -1, 0,   // r - gr
      -1, 0, 1, 0,               // gr - r
      0, 1, 0, -1,               // c - gc
      0, -1, 0, 1;               // gc - c
  p.weights(1).setZero();
  p.weights(1)(static_cast<int>(Action::Up), 0) = 1;
  p.weights(1)(static_cast<int>(Action::Down), 1) = 1;
  p.weights(1)(static_cast<int>(Action::Left), 2) = 1;
  p.weights(1)(static_cast<int>(Action::Right), 3) = 1;
  const auto grid = GridConfig::custom(8, 1, false, 9);
  Rng eval_rng(3);
  for (const auto& r : evaluate(p, grid, 50, eval_rng)) {
    EXPECT_TRUE(r.all_reached);
    EXPECT_LE(r.steps, 14);
  }
}

TEST(TrainerConfig, Validation) {
  TrainerConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.gamma = 1.0;
  EXPECT_THROW(cfg.validate(), InvalidConfig);
  cfg = TrainerConfig{};
  cfg.eps_min = 1.5;
  EXPECT_THROW(cfg.validate(), InvalidConfig);
}
