#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "iqlphase/gridworld.hpp"
#include "iqlphase/neuralnet.hpp"
#include "iqlphase/replay.hpp"
#include "iqlphase/rng.hpp"

namespace iqlphase {

struct TrainerConfig {
  int episodes = 1500;
  double lr = 1.5e-4;
  double gamma = 0.95;
  double tau = 1e-3;
  double eps_start = 1.0;
  double eps_min = 0.01;
  double eps_decay = 0.98;
  int batch_size = 64;
  std::size_t warmup = kReplayWarmup;
  std::size_t replay_capacity = kReplayCapacity;
  int eval_every = 10;
  int eval_episodes = 5;
  int updates_per_env_step = 1;
  double max_grad_norm = 1.0;
  double adam_eps = 1e-8;
  std::vector<int> hidden{128, 128};

  void validate() const;
  AdamConfig adam() const { return AdamConfig{lr, 0.9, 0.999, adam_eps}; }
};

/// Exploration rate max(eps_min, eps_start * decay^episode).
double epsilon(int episode_index, const TrainerConfig& cfg);

/// epsilon-greedy over five actions; greedy ties go to the lowest index.
int select_action(std::span<const double> q_values, double eps, Rng& rng);
int greedy_action(std::span<const double> q_values);

/// Double DQN targets: the online net picks a' on next_obs, the target net scores it.
/// y = r + gamma * (1 - done) * Q_target(next_obs, a').
std::vector<double> compute_targets(const Eigen::MatrixXd& next_obs, std::span<const double> rewards,
                                    std::span<const double> dones, const NetParams& online,
                                    const NetParams& target, double gamma);
std::vector<double> compute_targets(std::span<const Transition> batch, const NetParams& online,
                                    const NetParams& target, double gamma);

/// Actions for every agent from one parameter snapshot. Reached agents get Stay
/// (the environment ignores it).
std::vector<Action> select_joint_action(const NetParams& snapshot, const GridWorld& env, double eps,
                                        Rng& rng);

struct EpisodeLog {
  int episode_index = 0;
  double epsilon = 0.0;
  std::vector<double> td_errors;
  std::vector<double> grad_norms;
  std::vector<std::optional<int>> arrival_steps;
  double episode_return = 0.0;
  DoneReason done_reason = DoneReason::None;
  int steps = 0;
  int update_count = 0;
  /// Environment steps that ended with the replay buffer past warm-up.
  int steps_after_warmup = 0;

  friend bool operator==(const EpisodeLog&, const EpisodeLog&) = default;
};

struct EvalRecord {
  /// Index of the training episode after which this evaluation ran.
  int episode_index = 0;
  int k = 0;
  bool all_reached = false;
  int steps = 0;
  std::vector<std::optional<int>> arrival_steps;

  friend bool operator==(const EvalRecord&, const EvalRecord&) = default;
};

/// Greedy rollouts with no learning and no buffer writes. Each episode gets
/// a fresh environment seeded from `eval_rng`.
std::vector<EvalRecord> evaluate(const NetParams& online, const GridConfig& grid, int episodes,
                                 Rng& eval_rng, int episode_index = 0);

/// Parameter-shared Double DQN over one environment: one online net, one
/// Polyak-averaged target net, one Adam state and one shared replay buffer.
class Learner {
 public:
  Learner(const GridConfig& grid, TrainerConfig cfg, std::uint64_t master_seed);

  EpisodeLog train_episode();
  /// Greedy evaluation tagged with the index of the last finished training episode.
  std::vector<EvalRecord> evaluate(int episodes);

  const NetParams& online() const { return online_; }
  const NetParams& target() const { return target_; }
  const AdamState& adam() const { return adam_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  const GridConfig& grid() const { return grid_; }
  const TrainerConfig& config() const { return cfg_; }
  int episodes_done() const { return episode_; }

 private:
  void update(EpisodeLog& log);

  GridConfig grid_;
  TrainerConfig cfg_;
  RngStreams rng_;
  GridWorld env_;
  NetParams online_;
  NetParams target_;
  AdamState adam_;
  ReplayBuffer buffer_;
  TransitionBatch batch_;
  int episode_ = 0;
};

}  // namespace iqlphase
