#include <vector>

#include <benchmark/benchmark.h>

#include "iqlphase/gridworld.hpp"
#include "iqlphase/learner.hpp"
#include "iqlphase/neuralnet.hpp"
#include "iqlphase/rng.hpp"

using namespace iqlphase;

namespace {

NetShape shape_for(int input_dim) {
  NetShape s;
  s.input_dim = input_dim;
  return s;
}

Eigen::MatrixXd random_obs(int dim, int cols, Rng& rng) {
  Eigen::MatrixXd m(dim, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < dim; ++i) m(i, j) = rng.uniform01();
  return m;
}

void BM_Forward(benchmark::State& state) {
  Rng rng(1);
  const NetParams p = init_params(shape_for(8), rng);
  std::vector<double> obs(8, 0.25);
  for (auto _ : state) benchmark::DoNotOptimize(forward(p, obs));
}
BENCHMARK(BM_Forward);

void BM_ForwardBatch(benchmark::State& state) {
  Rng rng(2);
  const NetParams p = init_params(shape_for(8), rng);
  const Eigen::MatrixXd obs = random_obs(8, static_cast<int>(state.range(0)), rng);
  for (auto _ : state) benchmark::DoNotOptimize(forward_batch(p, obs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBatch)->Arg(1)->Arg(32)->Arg(64);

// One full gradient update: double-DQN targets, backward, clip, Adam, Polyak.
void BM_Update(benchmark::State& state) {
  Rng rng(3);
  const int dim = 8;
  const int batch = 64;
  NetParams online = init_params(shape_for(dim), rng);
  NetParams target = online;
  AdamState adam(online.size());
  const AdamConfig cfg;
  const Eigen::MatrixXd obs = random_obs(dim, batch, rng);
  const Eigen::MatrixXd next = random_obs(dim, batch, rng);
  std::vector<int> actions(batch);
  std::vector<double> rewards(batch, -0.005);
  std::vector<double> dones(batch, 0.0);
  for (auto& a : actions) a = static_cast<int>(rng.uniform_index(kNumActions));
  for (auto _ : state) {
    const auto y = compute_targets(next, rewards, dones, online, target, 0.95);
    auto r = backward(online, obs, actions, y);
    clip_gradients(r.grads, 1.0);
    adam_step(online, adam, r.grads, cfg);
    polyak_update(target, online, 1e-3);
    benchmark::DoNotOptimize(online.flat().data());
  }
}
BENCHMARK(BM_Update);

void BM_EnvStep(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const Density rho = Density::from_denominator(static_cast<int>(state.range(1)));
  GridWorld env(GridConfig::for_condition(side, rho, true, 7));
  Rng rng(11);
  env.reset();
  std::vector<Action> joint(static_cast<std::size_t>(env.config().agent_count));
  for (auto _ : state) {
    for (auto& a : joint) a = static_cast<Action>(rng.uniform_index(kNumActions));
    if (env.step(joint).done) env.reset();
  }
}
BENCHMARK(BM_EnvStep)->Args({8, 32})->Args({8, 2})->Args({32, 4});

void BM_TrainEpisode(benchmark::State& state) {
  TrainerConfig cfg;
  cfg.warmup = 64;
  Learner learner(GridConfig::for_condition(8, Density::from_denominator(16), true, 5), cfg, 5);
  for (auto _ : state) benchmark::DoNotOptimize(learner.train_episode());
}
BENCHMARK(BM_TrainEpisode)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
