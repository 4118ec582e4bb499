#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "iqlphase/errors.hpp"
#include "iqlphase/learner.hpp"
#include "iqlphase/neuralnet.hpp"
#include "iqlphase/record_io.hpp"
#include "iqlphase/rng.hpp"
#include "iqlphase/sweep.hpp"

namespace fs = std::filesystem;
using namespace iqlphase;

namespace {

constexpr int kUsageError = 2;

struct Common {
  std::string config;
  std::string out;
  int workers = 0;
  int episodes = 0;
  bool no_id = false;
};

// Precedence for the output root: --out, then "out" in the config file, then
// $IQLPHASE_OUT, then the built-in default.
SweepConfig resolve_config(const Common& c) {
  SweepConfig cfg;
  bool config_has_out = false;
  if (!c.config.empty()) {
    const std::string text = read_file(c.config);
    cfg = SweepConfig::parse(text);
    const auto j = nlohmann::json::parse(text, nullptr, false);
    config_has_out = j.is_object() && j.contains("out");
  }
  if (!c.out.empty()) {
    cfg.out = c.out;
  } else if (!config_has_out) {
    if (const char* env = std::getenv("IQLPHASE_OUT"); env && *env) cfg.out = env;
  }
  if (c.workers > 0) cfg.workers = c.workers;
  if (c.episodes > 0) cfg.trainer.episodes = c.episodes;
  if (c.no_id) cfg.id_enabled = false;
  cfg.validate();
  return cfg;
}

Density parse_rho(const std::string& text) {
  try {
    return Density::parse(text);
  } catch (const Error&) {
    throw UnsupportedCondition("unsupported rho '" + text + "'; supported: " + supported_conditions_text());
  }
}

int report_sweep(const SweepSummary& s) {
  std::cout << "planned " << s.planned << ", completed " << s.completed << ", skipped " << s.skipped << "\n";
  if (!s.ok()) {
    std::cerr << s.failures.size() << " run(s) failed:\n";
    for (const auto& f : s.failures) std::cerr << "  " << f << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Independent Q-learning phase sweeps on a shared-goal gridworld"};
  app.require_subcommand(1);

  Common common;
  bool dry_run = false;
  int side = 0;
  std::string rho;
  int seed = 0;
  std::string checkpoint;
  int eval_episodes = 0;
  std::optional<double> ridge_level;
  std::optional<double> window_frac;
  std::string sync;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", common.config, "JSON sweep config")->check(CLI::ExistingFile);
    if (config_required) opt->required();
    sub->add_option("--out", common.out, "output directory (default: $IQLPHASE_OUT)");
    sub->add_option("--workers", common.workers, "parallel runs")->check(CLI::PositiveNumber);
    sub->add_option("--episodes", common.episodes, "training episodes per run")->check(CLI::PositiveNumber);
    sub->add_flag("--no-id", common.no_id, "drop the one-hot agent identifier");
  };
  auto add_condition = [&](CLI::App* sub) {
    sub->add_option("--L", side, "grid side")->required();
    sub->add_option("--rho", rho, "agent density, e.g. 0.03125 or 1/32")->required();
    sub->add_option("--seed", seed, "seed index")->check(CLI::NonNegativeNumber);
  };

  auto* sweep = app.add_subcommand("sweep", "train every (L, rho, seed) run of a config");
  add_common(sweep, true);
  sweep->add_flag("--dry-run", dry_run, "print the plan without training");

  auto* train = app.add_subcommand("train", "train a single run");
  add_common(train, false);
  add_condition(train);

  auto* eval = app.add_subcommand("eval", "greedy evaluation of a checkpoint");
  add_common(eval, false);
  add_condition(eval);
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  eval->add_option("--eval-episodes", eval_episodes, "evaluation episodes")->check(CLI::PositiveNumber);

  auto* report = app.add_subcommand("report", "aggregate run records into summary tables");
  report->add_option("--out", common.out, "sweep output directory (default: $IQLPHASE_OUT)");
  report->add_option("--ridge-level", ridge_level, "d_phase contour level");
  report->add_option("--window-frac", window_frac, "trailing window fraction")->check(CLI::Range(0.0, 1.0));
  report->add_option("--sync", sync, "CSR source")->check(CLI::IsMember({"eval", "train"}));

  auto* ablate = app.add_subcommand("ablate", "sweep with and without agent identifiers");
  add_common(ablate, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sweep) {
      const SweepConfig cfg = resolve_config(common);
      if (dry_run) {
        std::cout << cfg.conditions().size() << " conditions x " << cfg.seeds.size() << " seeds = "
                  << planned_runs(cfg) << " runs, " << cfg.trainer.episodes << " episodes each, out " << cfg.out.string()
                  << "\n";
        return 0;
      }
      return report_sweep(run_sweep(cfg, &std::cerr));
    }
    if (*ablate) {
      return report_sweep(run_ablation(resolve_config(common), &std::cerr));
    }
    if (*train || *eval) {
      SweepConfig cfg = resolve_config(common);
      const Condition cond{side, parse_rho(rho)};
      density_to_count(cond.side, cond.density);
      if (*train) {
        fs::create_directories(cfg.out);
        const std::string stem = run_stem(cond, cfg.id_enabled, seed);
        const RunRecord rec = train_run(cond, seed, cfg, cfg.out / (stem + ".ckpt"));
        write_run_record(cfg.out / (stem + ".csv"), rec);
        std::cout << (cfg.out / (stem + ".csv")).string() << "\n";
        return 0;
      }
      const std::uint64_t master = run_master_seed(cond, seed);
      const GridConfig grid = GridConfig::for_condition(cond.side, cond.density, cfg.id_enabled, master);
      const NetParams params = load_checkpoint(checkpoint);
      if (params.shape().input_dim != grid.observation_dim()) {
        throw DimensionMismatch("checkpoint input dim " + std::to_string(params.shape().input_dim) +
                                " does not match observation dim " + std::to_string(grid.observation_dim()));
      }
      Rng eval_rng = RngStreams::from_master(master).eval;
      const int n = eval_episodes > 0 ? eval_episodes : cfg.trainer.eval_episodes;
      std::cout << format_eval_table(evaluate(params, grid, n, eval_rng));
      return 0;
    }
    if (*report) {
      fs::path dir = common.out;
      if (dir.empty()) {
        const char* env = std::getenv("IQLPHASE_OUT");
        if (!env || !*env) throw InvalidConfig("report needs --out or IQLPHASE_OUT");
        dir = env;
      }
      ReportOptions opts;
      opts.ridge_level = ridge_level;
      opts.window_frac = window_frac;
      if (!sync.empty()) opts.sync_source = sync == "eval" ? SyncSource::Evaluation : SyncSource::Training;
      const ReportResult r = write_report(dir, opts);
      std::cout << r.stats.size() << " conditions -> " << r.directory.string() << "\n";
      return 0;
    }
  } catch (const UnsupportedCondition& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const InvalidConfig& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
