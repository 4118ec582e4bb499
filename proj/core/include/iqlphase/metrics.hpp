#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "iqlphase/gridworld.hpp"
#include "iqlphase/run_record.hpp"

namespace iqlphase {

double mean(std::span<const double> values);
/// Population variance (divides by n). Zero for n < 2.
double population_variance(std::span<const double> values);

/// Fraction of evaluation episodes in which every agent reached the goal.
double csr(std::span<const EvalRecord> records);

/// Mean of per-episode TD-error variances over rows with at least two samples.
double td_variance(std::span<const EpisodeRow> rows);
/// Same aggregation applied to per-episode variances of pre-clip gradient norms.
double grad_norm_variance(std::span<const EpisodeRow> rows);

/// S = 1 - v / v_max.
double stability_index(double v, double v_max);
double grad_stability_index(double grad_var, double grad_var_max);

/// Population std of arrival steps; unreached agents count as arriving at `horizon`.
double arrival_spread(std::span<const std::optional<int>> arrival_steps, int horizon);
/// Fraction of agents with an arrival step.
double co_reach(std::span<const std::optional<int>> arrival_steps);

double rho_eff(double density, double csr_value);

/// The trailing window of a run: episodes [start, start + count).
struct Window {
  int start = 0;
  int count = 0;
  bool contains(int episode) const { return episode >= start && episode < start + count; }
};
/// Last ceil(fraction * episodes_run) episodes.
Window trailing_window(int episodes_run, double fraction);

/// Mean and 95% normal-approximation half-width over seed-level means.
struct Estimate {
  double mean = 0.0;
  double ci95 = 0.0;
};
Estimate seed_estimate(std::span<const double> per_seed);

enum class SyncSource { Evaluation, Training };

/// How many rows each aggregate consumed; lets callers audit window discipline.
struct WindowCounters {
  std::int64_t runs = 0;
  std::int64_t episode_rows = 0;
  std::int64_t td_rows = 0;
  std::int64_t grad_rows = 0;
  std::int64_t eval_rows = 0;
  std::vector<Window> windows;
};

struct SeriesPoint {
  int episode = 0;
  int seeds = 0;
  Estimate td_mean;
  Estimate td_var;
  Estimate grad_mean;
  Estimate grad_var;
  Estimate spread;
  Estimate co_reach;
  Estimate episode_return;
};

struct ConditionStats {
  int side = 0;
  Density density = Density::from_denominator(32);
  bool id_enabled = true;
  int agent_count = 0;
  int seeds = 0;
  double csr = 0.0;
  double csr_ci95 = 0.0;
  double v = 0.0;
  double v_ci95 = 0.0;
  double grad_var = 0.0;
  double grad_mean = 0.0;
  double td_mean = 0.0;
  /// Filled by normalize_stability once every condition is known.
  double s = 0.0;
  double s_grad = 0.0;
  double spread_mean = 0.0;
  double co_reach_mean = 0.0;
  double rho_eff = 0.0;
  std::int64_t eval_episodes = 0;
  std::vector<SeriesPoint> series;
};

/// Aggregates all seeds of one condition over the trailing window of each run.
ConditionStats condition_stats(std::span<const RunRecord> runs, double window_fraction = 0.25,
                               SyncSource sync = SyncSource::Evaluation,
                               WindowCounters* counters = nullptr);

/// Sets s and s_grad on every condition using the sweep-wide maxima.
void normalize_stability(std::span<ConditionStats> stats);

}  // namespace iqlphase
