#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iqlphase/gridworld.hpp"
#include "iqlphase/learner.hpp"

namespace iqlphase {

struct RunMeta {
  int side = 8;
  Density density = Density::from_denominator(32);
  int agent_count = 2;
  int seed = 0;
  bool id_enabled = true;
  int obs_dim = 6;
  int horizon = 64;
  std::uint64_t master_seed = 0;
  int episodes_planned = 0;
  /// Checkpoint file name relative to the record's directory; empty if none.
  std::string checkpoint;

  friend bool operator==(const RunMeta&, const RunMeta&) = default;
};

/// Per-episode training summary; one line of a run record.
struct EpisodeRow {
  int episode = 0;
  double episode_return = 0.0;
  DoneReason done_reason = DoneReason::None;
  int steps = 0;
  int updates = 0;
  double epsilon = 0.0;
  std::int64_t td_count = 0;
  double td_mean = 0.0;
  double td_var = 0.0;
  std::int64_t grad_count = 0;
  double grad_mean = 0.0;
  double grad_var = 0.0;
  double spread = 0.0;
  double co_reach = 0.0;

  friend bool operator==(const EpisodeRow&, const EpisodeRow&) = default;
};

struct RunRecord {
  RunMeta meta;
  std::vector<EpisodeRow> episodes;
  std::vector<EvalRecord> evals;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

EpisodeRow summarize_episode(const EpisodeLog& log, int horizon);

}  // namespace iqlphase
