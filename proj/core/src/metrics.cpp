#include "iqlphase/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "iqlphase/errors.hpp"

namespace iqlphase {

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double population_variance(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean(values);
  double sum = 0.0;
  for (double v : values) sum += (v - m) * (v - m);
  return sum / static_cast<double>(values.size());
}

EpisodeRow summarize_episode(const EpisodeLog& log, int horizon) {
  EpisodeRow row;
  row.episode = log.episode_index;
  row.episode_return = log.episode_return;
  row.done_reason = log.done_reason;
  row.steps = log.steps;
  row.updates = log.update_count;
  row.epsilon = log.epsilon;
  row.td_count = static_cast<std::int64_t>(log.td_errors.size());
  row.td_mean = mean(log.td_errors);
  row.td_var = population_variance(log.td_errors);
  row.grad_count = static_cast<std::int64_t>(log.grad_norms.size());
  row.grad_mean = mean(log.grad_norms);
  row.grad_var = population_variance(log.grad_norms);
  row.spread = arrival_spread(log.arrival_steps, horizon);
  row.co_reach = co_reach(log.arrival_steps);
  return row;
}

double csr(std::span<const EvalRecord> records) {
  if (records.empty()) throw EmptyWindow("no evaluation episodes in the aggregation window");
  const auto hits = std::count_if(records.begin(), records.end(), [](const EvalRecord& r) { return r.all_reached; });
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

namespace {

template <class CountFn, class VarFn>
double mean_episode_variance(std::span<const EpisodeRow> rows, CountFn count, VarFn var, const char* what) {
  double sum = 0.0;
  std::int64_t used = 0;
  for (const EpisodeRow& r : rows) {
    if (count(r) < 2) continue;
    sum += var(r);
    ++used;
  }
  if (used == 0) throw EmptyWindow(std::string("no episode in the window has two or more ") + what);
  return sum / static_cast<double>(used);
}

}  // namespace

double td_variance(std::span<const EpisodeRow> rows) {
  return mean_episode_variance(
      rows, [](const EpisodeRow& r) { return r.td_count; }, [](const EpisodeRow& r) { return r.td_var; },
      "TD-error samples");
}

double grad_norm_variance(std::span<const EpisodeRow> rows) {
  return mean_episode_variance(
      rows, [](const EpisodeRow& r) { return r.grad_count; },
      [](const EpisodeRow& r) { return r.grad_var; }, "gradient-norm samples");
}

double stability_index(double v, double v_max) {
  if (!(v_max > 0.0)) throw DegenerateNormalizer("maximum variance is zero; stability index undefined");
  return std::clamp(1.0 - v / v_max, 0.0, 1.0);
}

double grad_stability_index(double grad_var, double grad_var_max) {
  return stability_index(grad_var, grad_var_max);
}

double arrival_spread(std::span<const std::optional<int>> arrival_steps, int horizon) {
  std::vector<double> times;
  times.reserve(arrival_steps.size());
  for (const auto& a : arrival_steps) times.push_back(a ? *a : horizon);
  return std::sqrt(population_variance(times));
}

double co_reach(std::span<const std::optional<int>> arrival_steps) {
  if (arrival_steps.empty()) return 0.0;
  const auto hits = std::count_if(arrival_steps.begin(), arrival_steps.end(),
                                  [](const std::optional<int>& a) { return a.has_value(); });
  return static_cast<double>(hits) / static_cast<double>(arrival_steps.size());
}

double rho_eff(double density, double csr_value) { return density * csr_value; }

Window trailing_window(int episodes_run, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidConfig("window fraction must lie in (0, 1]");
  if (episodes_run <= 0) return Window{0, 0};
  // Round away floating noise before the ceiling: 0.25 * 400 must give exactly 100.
  const double raw = fraction * episodes_run;
  int count = static_cast<int>(std::ceil(raw - 1e-9));
  count = std::clamp(count, 1, episodes_run);
  return Window{episodes_run - count, count};
}

Estimate seed_estimate(std::span<const double> per_seed) {
  Estimate e;
  e.mean = mean(per_seed);
  if (per_seed.size() >= 2) {
    double ss = 0.0;
    for (double v : per_seed) ss += (v - e.mean) * (v - e.mean);
    const double sd = std::sqrt(ss / static_cast<double>(per_seed.size() - 1));
    e.ci95 = 1.96 * sd / std::sqrt(static_cast<double>(per_seed.size()));
  }
  return e;
}

ConditionStats condition_stats(std::span<const RunRecord> runs, double window_fraction, SyncSource sync,
                               WindowCounters* counters) {
  if (runs.empty()) throw MissingRuns("no run records for condition");
  const RunMeta& m0 = runs.front().meta;
  ConditionStats st;
  st.side = m0.side;
  st.density = m0.density;
  st.id_enabled = m0.id_enabled;
  st.agent_count = m0.agent_count;
  st.seeds = static_cast<int>(runs.size());

  std::vector<EpisodeRow> window_rows;
  std::vector<EvalRecord> window_evals;
  std::vector<double> seed_csr;
  std::vector<double> seed_v;
  std::vector<double> sync_spread;
  std::vector<double> sync_co;
  WindowCounters local;

  for (const RunRecord& run : runs) {
    const RunMeta& m = run.meta;
    if (m.side != m0.side || !(m.density == m0.density) || m.id_enabled != m0.id_enabled) {
      throw InvalidConfig("condition_stats called with records from different conditions");
    }
    const Window w = trailing_window(static_cast<int>(run.episodes.size()), window_fraction);
    local.windows.push_back(w);
    ++local.runs;

    std::vector<EpisodeRow> rows;
    for (const EpisodeRow& r : run.episodes) {
      if (w.contains(r.episode)) rows.push_back(r);
    }
    std::vector<EvalRecord> evals;
    for (const EvalRecord& e : run.evals) {
      if (w.contains(e.episode_index)) evals.push_back(e);
    }
    local.episode_rows += static_cast<std::int64_t>(rows.size());
    local.eval_rows += static_cast<std::int64_t>(evals.size());
    for (const EpisodeRow& r : rows) {
      if (r.td_count >= 2) ++local.td_rows;
      if (r.grad_count >= 2) ++local.grad_rows;
    }

    if (!evals.empty()) seed_csr.push_back(csr(evals));
    try {
      seed_v.push_back(td_variance(rows));
    } catch (const EmptyWindow&) {
    }

    if (sync == SyncSource::Evaluation) {
      for (const EvalRecord& e : evals) {
        sync_spread.push_back(arrival_spread(e.arrival_steps, m.horizon));
        sync_co.push_back(co_reach(e.arrival_steps));
      }
    } else {
      for (const EpisodeRow& r : rows) {
        sync_spread.push_back(r.spread);
        sync_co.push_back(r.co_reach);
      }
    }
    window_rows.insert(window_rows.end(), rows.begin(), rows.end());
    window_evals.insert(window_evals.end(), evals.begin(), evals.end());
  }

  st.csr = csr(window_evals);
  st.csr_ci95 = seed_estimate(seed_csr).ci95;
  st.eval_episodes = static_cast<std::int64_t>(window_evals.size());
  st.v = td_variance(window_rows);
  st.v_ci95 = seed_estimate(seed_v).ci95;
  st.grad_var = grad_norm_variance(window_rows);

  std::vector<double> td_means;
  std::vector<double> grad_means;
  for (const EpisodeRow& r : window_rows) {
    if (r.td_count > 0) td_means.push_back(r.td_mean);
    if (r.grad_count > 0) grad_means.push_back(r.grad_mean);
  }
  st.td_mean = mean(td_means);
  st.grad_mean = mean(grad_means);
  st.spread_mean = mean(sync_spread);
  st.co_reach_mean = mean(sync_co);
  st.rho_eff = rho_eff(st.density.value(), st.csr);

  // Time series over the full run, seeds aligned by episode index.
  std::map<int, std::vector<const EpisodeRow*>> by_episode;
  for (const RunRecord& run : runs) {
    for (const EpisodeRow& r : run.episodes) by_episode[r.episode].push_back(&r);
  }
  for (const auto& [episode, rows] : by_episode) {
    SeriesPoint p;
    p.episode = episode;
    p.seeds = static_cast<int>(rows.size());
    auto collect = [&rows](auto field) {
      std::vector<double> vals;
      vals.reserve(rows.size());
      for (const EpisodeRow* r : rows) vals.push_back(field(*r));
      return seed_estimate(vals);
    };
    p.td_mean = collect([](const EpisodeRow& r) { return r.td_mean; });
    p.td_var = collect([](const EpisodeRow& r) { return r.td_var; });
    p.grad_mean = collect([](const EpisodeRow& r) { return r.grad_mean; });
    p.grad_var = collect([](const EpisodeRow& r) { return r.grad_var; });
    p.spread = collect([](const EpisodeRow& r) { return r.spread; });
    p.co_reach = collect([](const EpisodeRow& r) { return r.co_reach; });
    p.episode_return = collect([](const EpisodeRow& r) { return r.episode_return; });
    st.series.push_back(p);
  }

  if (counters) *counters = std::move(local);
  return st;
}

void normalize_stability(std::span<ConditionStats> stats) {
  if (stats.empty()) return;
  double v_max = 0.0;
  double g_max = 0.0;
  for (const auto& s : stats) {
    v_max = std::max(v_max, s.v);
    g_max = std::max(g_max, s.grad_var);
  }
  for (auto& s : stats) {
    s.s = stability_index(s.v, v_max);
    s.s_grad = grad_stability_index(s.grad_var, g_max);
  }
}

}  // namespace iqlphase
