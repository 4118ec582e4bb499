#include "iqlphase/learner.hpp"

#include <algorithm>
#include <cmath>

#include "iqlphase/errors.hpp"

namespace iqlphase {

void TrainerConfig::validate() const {
  if (episodes <= 0) throw InvalidConfig("episodes must be positive");
  if (!(lr > 0.0)) throw InvalidConfig("learning rate must be positive");
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidConfig("gamma must lie in (0, 1)");
  if (!(tau > 0.0 && tau <= 1.0)) throw InvalidConfig("tau must lie in (0, 1]");
  if (!(eps_min > 0.0) || !(eps_start >= eps_min) || eps_start > 1.0) {
    throw InvalidConfig("need 0 < eps_min <= eps_start <= 1");
  }
  if (!(eps_decay > 0.0 && eps_decay <= 1.0)) throw InvalidConfig("eps_decay must lie in (0, 1]");
  if (batch_size <= 0) throw InvalidConfig("batch size must be positive");
  if (warmup == 0 || replay_capacity == 0) throw InvalidConfig("warm-up and capacity must be positive");
  if (eval_every <= 0 || eval_episodes <= 0) throw InvalidConfig("evaluation cadence must be positive");
  if (updates_per_env_step <= 0) throw InvalidConfig("updates_per_env_step must be positive");
  if (!(max_grad_norm > 0.0)) throw InvalidConfig("max_grad_norm must be positive");
  if (hidden.empty() || std::any_of(hidden.begin(), hidden.end(), [](int h) { return h <= 0; })) {
    throw InvalidConfig("hidden widths must be positive");
  }
}

double epsilon(int episode_index, const TrainerConfig& cfg) {
  return std::max(cfg.eps_min, cfg.eps_start * std::pow(cfg.eps_decay, episode_index));
}

int greedy_action(std::span<const double> q_values) {
  return static_cast<int>(std::max_element(q_values.begin(), q_values.end()) - q_values.begin());
}

int select_action(std::span<const double> q_values, double eps, Rng& rng) {
  if (static_cast<int>(q_values.size()) != kNumActions) {
    throw DimensionMismatch("expected one Q-value per action");
  }
  if (eps > 0.0 && rng.uniform01() < eps) {
    return static_cast<int>(rng.uniform_index(kNumActions));
  }
  return greedy_action(q_values);
}

std::vector<double> compute_targets(const Eigen::MatrixXd& next_obs, std::span<const double> rewards,
                                    std::span<const double> dones, const NetParams& online,
                                    const NetParams& target, double gamma) {
  const auto n = static_cast<std::size_t>(next_obs.cols());
  if (rewards.size() != n || dones.size() != n) {
    throw DimensionMismatch("reward/done lengths differ from batch size");
  }
  const Eigen::MatrixXd q_online = forward_batch(online, next_obs);
  const Eigen::MatrixXd q_target = forward_batch(target, next_obs);
  std::vector<double> y(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    const int a = greedy_action(
        std::span<const double>(q_online.col(col).data(), static_cast<std::size_t>(q_online.rows())));
    y[j] = rewards[j] + gamma * (1.0 - dones[j]) * q_target(a, col);
  }
  return y;
}

std::vector<double> compute_targets(std::span<const Transition> batch, const NetParams& online,
                                    const NetParams& target, double gamma) {
  if (batch.empty()) throw DimensionMismatch("empty batch");
  const auto dim = static_cast<Eigen::Index>(batch.front().next_obs.size());
  Eigen::MatrixXd next_obs(dim, static_cast<Eigen::Index>(batch.size()));
  std::vector<double> rewards(batch.size());
  std::vector<double> dones(batch.size());
  for (std::size_t j = 0; j < batch.size(); ++j) {
    if (static_cast<Eigen::Index>(batch[j].next_obs.size()) != dim) {
      throw DimensionMismatch("ragged next observations");
    }
    next_obs.col(static_cast<Eigen::Index>(j)) =
        Eigen::Map<const Eigen::VectorXd>(batch[j].next_obs.data(), dim);
    rewards[j] = batch[j].reward;
    dones[j] = batch[j].done ? 1.0 : 0.0;
  }
  return compute_targets(next_obs, rewards, dones, online, target, gamma);
}

std::vector<Action> select_joint_action(const NetParams& snapshot, const GridWorld& env, double eps,
                                        Rng& rng) {
  const GridConfig& grid = env.config();
  const EnvState& state = env.state();
  std::vector<int> active;
  for (int i = 0; i < grid.agent_count; ++i) {
    if (!state.reached[i]) active.push_back(i);
  }
  std::vector<Action> joint(static_cast<std::size_t>(grid.agent_count), Action::Stay);
  if (active.empty()) return joint;

  const int dim = grid.observation_dim();
  Eigen::MatrixXd obs(dim, static_cast<Eigen::Index>(active.size()));
  for (std::size_t k = 0; k < active.size(); ++k) {
    env.observe_into(active[k], std::span<double>(obs.col(static_cast<Eigen::Index>(k)).data(),
                                                  static_cast<std::size_t>(dim)));
  }
  const Eigen::MatrixXd q = forward_batch(snapshot, obs);
  for (std::size_t k = 0; k < active.size(); ++k) {
    const std::span<const double> qk(q.col(static_cast<Eigen::Index>(k)).data(), kNumActions);
    joint[static_cast<std::size_t>(active[k])] = static_cast<Action>(select_action(qk, eps, rng));
  }
  return joint;
}

std::vector<EvalRecord> evaluate(const NetParams& online, const GridConfig& grid, int episodes,
                                 Rng& eval_rng, int episode_index) {
  std::vector<EvalRecord> out;
  out.reserve(static_cast<std::size_t>(std::max(episodes, 0)));
  Rng unused(0);
  for (int k = 0; k < episodes; ++k) {
    GridConfig g = grid;
    g.rng_seed = eval_rng.next();
    GridWorld env(g);
    env.reset();
    while (!env.state().done) {
      env.step(select_joint_action(online, env, 0.0, unused));
    }
    const EnvState& s = env.state();
    EvalRecord rec;
    rec.episode_index = episode_index;
    rec.k = k;
    rec.all_reached = std::all_of(s.reached.begin(), s.reached.end(), [](bool r) { return r; });
    rec.steps = s.step_count;
    rec.arrival_steps = s.arrival_step;
    out.push_back(std::move(rec));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

TrainerConfig validated(TrainerConfig cfg) {
  cfg.validate();
  return cfg;
}

GridConfig seeded(GridConfig grid, Rng& env_stream) {
  grid.rng_seed = env_stream.next();
  return grid;
}

NetShape shape_for(const GridConfig& grid, const TrainerConfig& cfg) {
  NetShape shape;
  shape.input_dim = grid.observation_dim();
  shape.hidden = cfg.hidden;
  shape.output_dim = kNumActions;
  return shape;
}

}  // namespace

Learner::Learner(const GridConfig& grid, TrainerConfig cfg, std::uint64_t master_seed)
    : grid_(grid),
      cfg_(validated(std::move(cfg))),
      rng_(RngStreams::from_master(master_seed)),
      env_(seeded(grid, rng_.env)),
      online_(init_params(shape_for(grid, cfg_), rng_.init)),
      target_(online_),
      adam_(online_.size()),
      buffer_(ObsLayout{4, grid.id_enabled ? grid.agent_count : 0}, cfg_.replay_capacity, cfg_.warmup) {}

void Learner::update(EpisodeLog& log) {
  const auto idx = buffer_.sample_indices(static_cast<std::size_t>(cfg_.batch_size), rng_.replay);
  buffer_.gather(idx, batch_);
  const std::vector<double> y =
      compute_targets(batch_.next_obs, batch_.rewards, batch_.dones, online_, target_, cfg_.gamma);
  BackwardResult br = backward(online_, batch_.obs, batch_.actions, y);
  const double norm = clip_gradients(br.grads, cfg_.max_grad_norm);
  adam_step(online_, adam_, br.grads, cfg_.adam());
  polyak_update(target_, online_, cfg_.tau);

  log.td_errors.insert(log.td_errors.end(), br.residuals.begin(), br.residuals.end());
  log.grad_norms.push_back(norm);
  ++log.update_count;
}

EpisodeLog Learner::train_episode() {
  EpisodeLog log;
  log.episode_index = episode_;
  log.epsilon = epsilon(episode_, cfg_);

  env_.reset();
  const int n = grid_.agent_count;
  const auto dim = static_cast<std::size_t>(grid_.observation_dim());
  std::vector<double> obs(static_cast<std::size_t>(n) * dim);
  std::vector<double> next(dim);

  while (!env_.state().done) {
    std::vector<int> active;
    for (int i = 0; i < n; ++i) {
      if (!env_.state().reached[i]) {
        active.push_back(i);
        env_.observe_into(i, std::span<double>(obs.data() + i * dim, dim));
      }
    }
    const std::vector<Action> joint = select_joint_action(online_, env_, log.epsilon, rng_.action);
    const StepResult result = env_.step(joint);

    for (int i : active) {
      env_.observe_into(i, next);
      const bool done = env_.state().reached[i] || result.done;
      buffer_.push(std::span<const double>(obs.data() + i * dim, dim), static_cast<int>(joint[i]),
                   result.rewards[i], next, done, i);
    }

    if (buffer_.ready()) {
      ++log.steps_after_warmup;
      for (int u = 0; u < cfg_.updates_per_env_step; ++u) update(log);
    }
  }

  const EnvState& s = env_.state();
  log.arrival_steps = s.arrival_step;
  log.episode_return = s.accumulated_reward;
  log.done_reason = s.done_reason;
  log.steps = s.step_count;
  ++episode_;
  return log;
}

std::vector<EvalRecord> Learner::evaluate(int episodes) {
  return iqlphase::evaluate(online_, grid_, episodes, rng_.eval, episode_ - 1);
}

}  // namespace iqlphase
