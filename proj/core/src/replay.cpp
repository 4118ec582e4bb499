#include "iqlphase/replay.hpp"

#include <algorithm>
#include <string>

#include "iqlphase/errors.hpp"
#include "iqlphase/gridworld.hpp"

namespace iqlphase {

ReplayBuffer::ReplayBuffer(ObsLayout layout, std::size_t capacity, std::size_t warmup)
    : layout_(layout), capacity_(capacity), warmup_(warmup) {
  if (capacity_ == 0) throw InvalidConfig("replay capacity must be positive");
  if (layout_.base_dim <= 0 || layout_.id_dim < 0) throw InvalidConfig("bad observation layout");
}

void ReplayBuffer::check_obs(std::span<const double> obs, int agent_index) const {
  if (static_cast<int>(obs.size()) != layout_.total()) {
    throw DimensionMismatch("transition observation has dimension " + std::to_string(obs.size()) +
                            ", buffer expects " + std::to_string(layout_.total()));
  }
  if (layout_.id_dim == 0) return;
  if (agent_index < 0 || agent_index >= layout_.id_dim) {
    throw IndexOutOfRange("agent index outside the identifier range");
  }
  for (int k = 0; k < layout_.id_dim; ++k) {
    const double expected = k == agent_index ? 1.0 : 0.0;
    if (obs[static_cast<std::size_t>(layout_.base_dim + k)] != expected) {
      throw DimensionMismatch("identifier suffix is not the one-hot code of agent_index");
    }
  }
}

void ReplayBuffer::push(const Transition& t) {
  push(t.obs, t.action, t.reward, t.next_obs, t.done, t.agent_index);
}

void ReplayBuffer::push(std::span<const double> obs, int action, double reward,
                        std::span<const double> next_obs, bool done, int agent_index) {
  if (action < 0 || action >= kNumActions) throw IndexOutOfRange("action index out of range");
  check_obs(obs, agent_index);
  check_obs(next_obs, agent_index);
  const auto base = static_cast<std::size_t>(layout_.base_dim);

  if (size_ < capacity_) {
    obs_.insert(obs_.end(), obs.begin(), obs.begin() + base);
    next_obs_.insert(next_obs_.end(), next_obs.begin(), next_obs.begin() + base);
    actions_.push_back(action);
    rewards_.push_back(reward);
    dones_.push_back(done ? 1 : 0);
    agents_.push_back(agent_index);
    ++size_;
    cursor_ = size_ % capacity_;
    return;
  }
  const std::size_t s = cursor_;
  std::copy(obs.begin(), obs.begin() + base, obs_.begin() + s * base);
  std::copy(next_obs.begin(), next_obs.begin() + base, next_obs_.begin() + s * base);
  actions_[s] = action;
  rewards_[s] = reward;
  dones_[s] = done ? 1 : 0;
  agents_[s] = agent_index;
  cursor_ = (cursor_ + 1) % capacity_;
}

std::size_t ReplayBuffer::slot(std::size_t age) const {
  return size_ < capacity_ ? age : (cursor_ + age) % capacity_;
}

void ReplayBuffer::write_obs(std::size_t s, const std::vector<double>& store, std::span<double> out,
                             int agent_index) const {
  const auto base = static_cast<std::size_t>(layout_.base_dim);
  std::copy_n(store.begin() + s * base, base, out.begin());
  if (layout_.id_dim > 0) {
    std::fill(out.begin() + base, out.end(), 0.0);
    out[base + static_cast<std::size_t>(agent_index)] = 1.0;
  }
}

Transition ReplayBuffer::at(std::size_t index) const {
  if (index >= size_) throw IndexOutOfRange("replay index out of range");
  const std::size_t s = slot(index);
  Transition t;
  t.obs.resize(static_cast<std::size_t>(layout_.total()));
  t.next_obs.resize(t.obs.size());
  write_obs(s, obs_, t.obs, agents_[s]);
  write_obs(s, next_obs_, t.next_obs, agents_[s]);
  t.action = actions_[s];
  t.reward = rewards_[s];
  t.done = dones_[s] != 0;
  t.agent_index = agents_[s];
  return t;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch_size, Rng& rng) const {
  if (size_ < warmup_) {
    throw WarmupNotReached("replay holds " + std::to_string(size_) + " transitions, warm-up needs " +
                           std::to_string(warmup_));
  }
  std::vector<std::size_t> idx(batch_size);
  for (auto& i : idx) i = rng.uniform_index(size_);
  return idx;
}

std::vector<Transition> ReplayBuffer::sample(std::size_t batch_size, Rng& rng) const {
  std::vector<Transition> out;
  out.reserve(batch_size);
  for (std::size_t i : sample_indices(batch_size, rng)) out.push_back(at(i));
  return out;
}

void ReplayBuffer::gather(std::span<const std::size_t> indices, TransitionBatch& out) const {
  const auto n = static_cast<Eigen::Index>(indices.size());
  const auto dim = static_cast<Eigen::Index>(layout_.total());
  out.obs.resize(dim, n);
  out.next_obs.resize(dim, n);
  out.actions.resize(indices.size());
  out.rewards.resize(indices.size());
  out.dones.resize(indices.size());
  out.agent_indices.resize(indices.size());
  for (Eigen::Index j = 0; j < n; ++j) {
    const std::size_t age = indices[static_cast<std::size_t>(j)];
    if (age >= size_) throw IndexOutOfRange("replay index out of range");
    const std::size_t s = slot(age);
    const int agent = agents_[s];
    write_obs(s, obs_, std::span<double>(out.obs.col(j).data(), static_cast<std::size_t>(dim)), agent);
    write_obs(s, next_obs_, std::span<double>(out.next_obs.col(j).data(), static_cast<std::size_t>(dim)),
              agent);
    out.actions[j] = actions_[s];
    out.rewards[j] = rewards_[s];
    out.dones[j] = dones_[s] != 0 ? 1.0 : 0.0;
    out.agent_indices[j] = agent;
  }
}

}  // namespace iqlphase
