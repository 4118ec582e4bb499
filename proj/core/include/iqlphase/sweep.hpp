#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "iqlphase/gridworld.hpp"
#include "iqlphase/learner.hpp"
#include "iqlphase/metrics.hpp"
#include "iqlphase/phase.hpp"
#include "iqlphase/run_record.hpp"

namespace iqlphase {

struct Condition {
  int side = 8;
  Density density = Density::from_denominator(32);
  friend bool operator==(const Condition&, const Condition&) = default;
};

struct SweepConfig {
  std::vector<int> sides{8};
  std::vector<Density> densities{Density::from_denominator(32)};
  std::vector<Condition> excluded;
  std::vector<int> seeds{0};
  bool id_enabled = true;
  bool fixed_goal = false;
  std::filesystem::path out = "iqlphase-out";
  int workers = 1;
  double window_frac = 0.25;
  double ridge_level = kDefaultRidgeLevel;
  SyncSource sync_source = SyncSource::Evaluation;
  TrainerConfig trainer;

  /// Parses the JSON config format described in docs/file_formats.md.
  static SweepConfig parse(std::string_view json_text);
  static SweepConfig load(const std::filesystem::path& path);
  /// Fully resolved config as canonical JSON; round-trips through parse().
  std::string to_json() const;

  void validate() const;
  /// Cartesian product of sides and densities minus exclusions, in row-major order.
  std::vector<Condition> conditions() const;
  bool is_excluded(const Condition& c) const;
};

/// Run seed from (condition, seed index); independent of the ID arm so both
/// ablation arms share their streams.
std::uint64_t run_master_seed(const Condition& condition, int seed);
std::string condition_stem(const Condition& condition, bool id_enabled);
std::string run_stem(const Condition& condition, bool id_enabled, int seed);

/// One full training run with periodic greedy evaluation. Saves the final
/// online parameters to `checkpoint` when given.
RunRecord train_run(const Condition& condition, int seed, const SweepConfig& config,
                    const std::optional<std::filesystem::path>& checkpoint = std::nullopt);

struct SweepSummary {
  std::size_t planned = 0;
  std::size_t completed = 0;
  std::size_t skipped = 0;
  std::vector<std::string> failures;
  bool ok() const { return failures.empty(); }
};

/// Runs every (condition, seed) pair across `config.workers` threads into
/// `config.out`. Records already listed in the manifest with a matching
/// hash are skipped.
SweepSummary run_sweep(const SweepConfig& config, std::ostream* progress = nullptr);

/// Number of runs a sweep would launch.
std::size_t planned_runs(const SweepConfig& config);

struct ReportOptions {
  std::optional<double> window_frac;
  std::optional<double> ridge_level;
  std::optional<SyncSource> sync_source;
};

struct ReportResult {
  std::vector<ConditionStats> stats;
  std::optional<PhaseMap> phase;
  std::optional<PhaseMap> phase_grad;
  std::filesystem::path directory;
};

/// Loads every run record under `runs_dir`, aggregates per condition and
/// writes summary tables, heatmaps, ridge crossings and time series into
/// `runs_dir/report`.
ReportResult write_report(const std::filesystem::path& runs_dir, const ReportOptions& options = {});

/// Sweeps with and without agent identifiers under shared seeds, reports
/// both arms and writes `ablation_comparison.csv` under `config.out`.
SweepSummary run_ablation(const SweepConfig& config, std::ostream* progress = nullptr);

}  // namespace iqlphase
