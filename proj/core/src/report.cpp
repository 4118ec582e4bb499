#include <algorithm>
#include <map>
#include <ostream>

#include <json.hpp>

#include "iqlphase/errors.hpp"
#include "iqlphase/record_io.hpp"
#include "iqlphase/sweep.hpp"

namespace iqlphase {

namespace {

using nlohmann::ordered_json;

std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::string heatmap_csv(const PhaseField& field) {
  std::string out = "L\\rho";
  for (const Density& d : field.densities) out += "," + d.to_string();
  out += '\n';
  for (std::size_t r = 0; r < field.sides.size(); ++r) {
    out += std::to_string(field.sides[r]);
    for (std::size_t c = 0; c < field.densities.size(); ++c) out += "," + cell(field.at(r, c));
    out += '\n';
  }
  return out;
}

PhaseField stat_field(const SweepConfig& cfg, std::span<const ConditionStats> stats, double ConditionStats::*member) {
  PhaseField f;
  f.sides = cfg.sides;
  f.densities = cfg.densities;
  f.values.assign(f.sides.size() * f.densities.size(), std::nullopt);
  for (const auto& s : stats) {
    const auto r = std::find(f.sides.begin(), f.sides.end(), s.side) - f.sides.begin();
    const auto c = std::find(f.densities.begin(), f.densities.end(), s.density) - f.densities.begin();
    f.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = s.*member;
  }
  return f;
}

std::string ridge_csv(const PhaseField& field, std::span<const RidgeCrossing> ridge) {
  std::string out = "from_L,from_rho,to_L,to_rho,fraction,chain\n";
  for (const auto& x : ridge) {
    out += std::to_string(field.sides[static_cast<std::size_t>(x.from.row)]) + ',' +
           field.densities[static_cast<std::size_t>(x.from.col)].to_string() + ',' +
           std::to_string(field.sides[static_cast<std::size_t>(x.to.row)]) + ',' +
           field.densities[static_cast<std::size_t>(x.to.col)].to_string() + ',' + format_double(x.fraction) + ',' +
           std::to_string(x.chain) + '\n';
  }
  return out;
}

std::string series_csv(const ConditionStats& st) {
  std::string out =
      "episode,seeds,td_mean,td_mean_ci95,td_var,td_var_ci95,grad_mean,grad_mean_ci95,grad_var,grad_var_ci95,"
      "spread,spread_ci95,co_reach,co_reach_ci95,return,return_ci95\n";
  auto est = [](const Estimate& e) { return format_double(e.mean) + ',' + format_double(e.ci95); };
  for (const SeriesPoint& p : st.series) {
    out += std::to_string(p.episode) + ',' + std::to_string(p.seeds) + ',' + est(p.td_mean) + ',' + est(p.td_var) +
           ',' + est(p.grad_mean) + ',' + est(p.grad_var) + ',' + est(p.spread) + ',' + est(p.co_reach) + ',' +
           est(p.episode_return) + '\n';
  }
  return out;
}

const PhasePoint* find_point(const std::optional<PhaseMap>& map, const ConditionStats& st) {
  if (!map) return nullptr;
  for (const auto& p : map->points) {
    if (p.side == st.side && p.density == st.density) return &p;
  }
  return nullptr;
}

}  // namespace

ReportResult write_report(const std::filesystem::path& runs_dir, const ReportOptions& options) {
  const auto config_path = runs_dir / "config.resolved.json";
  if (!std::filesystem::exists(config_path)) {
    throw MissingRuns("no config.resolved.json in " + runs_dir.string());
  }
  SweepConfig cfg = SweepConfig::load(config_path);
  if (options.window_frac) cfg.window_frac = *options.window_frac;
  if (options.ridge_level) cfg.ridge_level = *options.ridge_level;
  if (options.sync_source) cfg.sync_source = *options.sync_source;

  std::map<std::pair<int, int>, std::vector<RunRecord>> grouped;
  const auto record_dir = runs_dir / "runs";
  if (std::filesystem::exists(record_dir)) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(record_dir)) {
      if (entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      RunRecord rec = read_run_record(f);
      if (rec.meta.id_enabled != cfg.id_enabled) continue;
      grouped[{rec.meta.side, rec.meta.density.denominator()}].push_back(std::move(rec));
    }
  }

  ReportResult result;
  for (const Condition& c : cfg.conditions()) {
    const auto it = grouped.find({c.side, c.density.denominator()});
    if (it == grouped.end()) {
      throw MissingRuns("no run records for condition L=" + std::to_string(c.side) + " rho=" + c.density.to_string());
    }
    auto& runs = it->second;
    std::sort(runs.begin(), runs.end(), [](const RunRecord& a, const RunRecord& b) { return a.meta.seed < b.meta.seed; });
    result.stats.push_back(condition_stats(runs, cfg.window_frac, cfg.sync_source));
  }
  normalize_stability(result.stats);
  if (result.stats.size() >= 2) {
    result.phase = build_phase_map(result.stats, cfg.sides, cfg.densities, cfg.ridge_level, StabilityAxis::TdError);
    result.phase_grad =
        build_phase_map(result.stats, cfg.sides, cfg.densities, cfg.ridge_level, StabilityAxis::GradientNorm);
  }

  const auto dir = runs_dir / "report";
  result.directory = dir;
  std::filesystem::create_directories(dir / "timeseries");

  std::string table =
      "L,rho,id_enabled,agent_count,seeds,eval_episodes,csr,csr_ci95,v,v_ci95,S,td_mean,grad_mean,grad_var,S_grad,"
      "spread,co_reach,rho_eff,d_phase,regime,d_phase_grad,regime_grad\n";
  ordered_json conditions = ordered_json::array();
  for (const ConditionStats& st : result.stats) {
    const PhasePoint* p = find_point(result.phase, st);
    const PhasePoint* pg = find_point(result.phase_grad, st);
    table += std::to_string(st.side) + ',' + st.density.to_string() + ',' + (st.id_enabled ? "1" : "0") + ',' +
             std::to_string(st.agent_count) + ',' + std::to_string(st.seeds) + ',' + std::to_string(st.eval_episodes) +
             ',' + format_double(st.csr) + ',' + format_double(st.csr_ci95) + ',' + format_double(st.v) + ',' +
             format_double(st.v_ci95) + ',' + format_double(st.s) + ',' + format_double(st.td_mean) + ',' +
             format_double(st.grad_mean) + ',' + format_double(st.grad_var) + ',' + format_double(st.s_grad) + ',' +
             format_double(st.spread_mean) + ',' + format_double(st.co_reach_mean) + ',' + format_double(st.rho_eff) +
             ',' + (p ? format_double(p->d_phase) : "") + ',' + (p ? std::string(to_string(p->regime)) : "") + ',' +
             (pg ? format_double(pg->d_phase) : "") + ',' + (pg ? std::string(to_string(pg->regime)) : "") + '\n';

    ordered_json j;
    j["L"] = st.side;
    j["rho"] = st.density.to_string();
    j["id_enabled"] = st.id_enabled;
    j["agent_count"] = st.agent_count;
    j["seeds"] = st.seeds;
    j["eval_episodes"] = st.eval_episodes;
    j["csr"] = st.csr;
    j["csr_ci95"] = st.csr_ci95;
    j["v"] = st.v;
    j["v_ci95"] = st.v_ci95;
    j["S"] = st.s;
    j["td_mean"] = st.td_mean;
    j["grad_mean"] = st.grad_mean;
    j["grad_var"] = st.grad_var;
    j["S_grad"] = st.s_grad;
    j["spread"] = st.spread_mean;
    j["co_reach"] = st.co_reach_mean;
    j["rho_eff"] = st.rho_eff;
    if (p) {
      j["d_phase"] = p->d_phase;
      j["regime"] = to_string(p->regime);
    }
    if (pg) {
      j["d_phase_grad"] = pg->d_phase;
      j["regime_grad"] = to_string(pg->regime);
    }
    conditions.push_back(j);

    write_file_atomic(dir / "timeseries" / (condition_stem(Condition{st.side, st.density}, st.id_enabled) + ".csv"),
                      series_csv(st));
  }
  write_file_atomic(dir / "conditions.csv", table);

  ordered_json summary;
  summary["window_frac"] = cfg.window_frac;
  summary["ridge_level"] = cfg.ridge_level;
  summary["sync_source"] = cfg.sync_source == SyncSource::Evaluation ? "eval" : "train";
  summary["id_enabled"] = cfg.id_enabled;
  if (result.phase) {
    summary["tau_csr"] = result.phase->tau.csr;
    summary["tau_S"] = result.phase->tau.s;
    summary["ridge_chains"] = chain_count(result.phase->ridge);
  }
  summary["conditions"] = conditions;
  write_file_atomic(dir / "conditions.json", summary.dump(2) + "\n");

  write_file_atomic(dir / "heatmap_csr.csv", heatmap_csv(stat_field(cfg, result.stats, &ConditionStats::csr)));
  write_file_atomic(dir / "heatmap_S.csv", heatmap_csv(stat_field(cfg, result.stats, &ConditionStats::s)));
  write_file_atomic(dir / "heatmap_S_grad.csv", heatmap_csv(stat_field(cfg, result.stats, &ConditionStats::s_grad)));
  write_file_atomic(dir / "heatmap_rho_eff.csv", heatmap_csv(stat_field(cfg, result.stats, &ConditionStats::rho_eff)));
  if (result.phase) {
    write_file_atomic(dir / "heatmap_dphase.csv", heatmap_csv(result.phase->d_phase));
    write_file_atomic(dir / "ridge.csv", ridge_csv(result.phase->d_phase, result.phase->ridge));
    write_file_atomic(dir / "heatmap_dphase_grad.csv", heatmap_csv(result.phase_grad->d_phase));
    write_file_atomic(dir / "ridge_grad.csv", ridge_csv(result.phase_grad->d_phase, result.phase_grad->ridge));
  } else {
    PhaseField empty = stat_field(cfg, {}, &ConditionStats::csr);
    for (const auto& st : result.stats) {
      const auto r = std::find(empty.sides.begin(), empty.sides.end(), st.side) - empty.sides.begin();
      const auto c = std::find(empty.densities.begin(), empty.densities.end(), st.density) - empty.densities.begin();
      // A lone condition has no reference point: its distance is reported as 0.
      empty.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = 0.0;
    }
    write_file_atomic(dir / "heatmap_dphase.csv", heatmap_csv(empty));
  }
  return result;
}

SweepSummary run_ablation(const SweepConfig& config, std::ostream* progress) {
  SweepConfig with_id = config;
  with_id.id_enabled = true;
  with_id.out = config.out / "with_id";
  SweepConfig no_id = config;
  no_id.id_enabled = false;
  no_id.out = config.out / "no_id";

  SweepSummary total;
  for (const SweepConfig* arm : {&with_id, &no_id}) {
    if (progress) *progress << "ablation arm id_enabled=" << (arm->id_enabled ? 1 : 0) << "\n";
    SweepSummary s = run_sweep(*arm, progress);
    total.planned += s.planned;
    total.completed += s.completed;
    total.skipped += s.skipped;
    total.failures.insert(total.failures.end(), s.failures.begin(), s.failures.end());
  }
  if (!total.ok()) return total;

  const ReportResult a = write_report(with_id.out);
  const ReportResult b = write_report(no_id.out);
  std::string out = "L,rho,arm,id_enabled,obs_dim,agent_count,seeds,csr,v,S,td_mean,grad_mean,grad_var,S_grad\n";
  for (std::size_t k = 0; k < a.stats.size(); ++k) {
    for (const ConditionStats* st : {&a.stats[k], &b.stats[k]}) {
      const int obs_dim = 4 + (st->id_enabled ? st->agent_count : 0);
      out += std::to_string(st->side) + ',' + st->density.to_string() + ',' + (st->id_enabled ? "with_id" : "no_id") +
             ',' + (st->id_enabled ? "1" : "0") + ',' + std::to_string(obs_dim) + ',' + std::to_string(st->agent_count) +
             ',' + std::to_string(st->seeds) + ',' + format_double(st->csr) + ',' + format_double(st->v) + ',' +
             format_double(st->s) + ',' + format_double(st->td_mean) + ',' + format_double(st->grad_mean) + ',' +
             format_double(st->grad_var) + ',' + format_double(st->s_grad) + '\n';
    }
  }
  write_file_atomic(config.out / "ablation_comparison.csv", out);
  return total;
}

}  // namespace iqlphase
