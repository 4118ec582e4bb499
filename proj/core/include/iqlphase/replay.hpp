#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "iqlphase/rng.hpp"

namespace iqlphase {

struct Transition {
  std::vector<double> obs;
  int action = 0;
  double reward = 0.0;
  std::vector<double> next_obs;
  bool done = false;
  int agent_index = 0;

  friend bool operator==(const Transition&, const Transition&) = default;
};

/// Observation = `base_dim` dense features followed by an optional
/// `id_dim`-long one-hot agent identifier.
struct ObsLayout {
  int base_dim = 4;
  int id_dim = 0;
  int total() const { return base_dim + id_dim; }
};

/// Mini-batch in column layout, ready for the network.
struct TransitionBatch {
  Eigen::MatrixXd obs;
  Eigen::MatrixXd next_obs;
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<double> dones;
  std::vector<int> agent_indices;
};

inline constexpr std::size_t kReplayCapacity = 100000;
inline constexpr std::size_t kReplayWarmup = 1500;

/// Fixed-capacity FIFO ring shared by all agents. Only the dense part of
/// each observation is stored; the identifier is rebuilt from agent_index.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(ObsLayout layout, std::size_t capacity = kReplayCapacity,
                        std::size_t warmup = kReplayWarmup);

  void push(const Transition& t);
  void push(std::span<const double> obs, int action, double reward, std::span<const double> next_obs,
            bool done, int agent_index);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t warmup() const { return warmup_; }
  bool ready() const { return size_ >= warmup_; }
  const ObsLayout& layout() const { return layout_; }

  /// Element by age: 0 is the oldest stored transition.
  Transition at(std::size_t index) const;

  /// Uniform draws with replacement, as ages in [0, size). Throws WarmupNotReached.
  std::vector<std::size_t> sample_indices(std::size_t batch_size, Rng& rng) const;
  std::vector<Transition> sample(std::size_t batch_size, Rng& rng) const;
  void gather(std::span<const std::size_t> indices, TransitionBatch& out) const;

 private:
  std::size_t slot(std::size_t age) const;
  void check_obs(std::span<const double> obs, int agent_index) const;
  void write_obs(std::size_t slot, const std::vector<double>& store, std::span<double> out,
                 int agent_index) const;

  ObsLayout layout_;
  std::size_t capacity_;
  std::size_t warmup_;
  std::size_t size_ = 0;
  std::size_t cursor_ = 0;

  std::vector<double> obs_;
  std::vector<double> next_obs_;
  std::vector<int> actions_;
  std::vector<double> rewards_;
  std::vector<unsigned char> dones_;
  std::vector<int> agents_;
};

}  // namespace iqlphase
