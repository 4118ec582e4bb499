#include "iqlphase/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>

#include <json.hpp>

#include "iqlphase/errors.hpp"
#include "iqlphase/record_io.hpp"

namespace iqlphase {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

Density density_from_json(const json& j) {
  if (j.is_string()) return Density::parse(j.get<std::string>());
  if (j.is_number()) return Density::from_value(j.get<double>());
  throw InvalidConfig("density entries must be numbers or strings");
}

void read_trainer(const json& j, TrainerConfig& t) {
  auto opt = [&j](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
  };
  opt("episodes", t.episodes);
  opt("lr", t.lr);
  opt("gamma", t.gamma);
  opt("tau", t.tau);
  opt("eps_start", t.eps_start);
  opt("eps_min", t.eps_min);
  opt("eps_decay", t.eps_decay);
  opt("batch_size", t.batch_size);
  opt("warmup", t.warmup);
  opt("replay_capacity", t.replay_capacity);
  opt("eval_every", t.eval_every);
  opt("eval_episodes", t.eval_episodes);
  opt("updates_per_env_step", t.updates_per_env_step);
  opt("max_grad_norm", t.max_grad_norm);
  opt("adam_eps", t.adam_eps);
  opt("hidden", t.hidden);
}

ordered_json trainer_json(const TrainerConfig& t) {
  ordered_json j;
  j["episodes"] = t.episodes;
  j["lr"] = t.lr;
  j["gamma"] = t.gamma;
  j["tau"] = t.tau;
  j["eps_start"] = t.eps_start;
  j["eps_min"] = t.eps_min;
  j["eps_decay"] = t.eps_decay;
  j["batch_size"] = t.batch_size;
  j["warmup"] = t.warmup;
  j["replay_capacity"] = t.replay_capacity;
  j["eval_every"] = t.eval_every;
  j["eval_episodes"] = t.eval_episodes;
  j["updates_per_env_step"] = t.updates_per_env_step;
  j["max_grad_norm"] = t.max_grad_norm;
  j["adam_eps"] = t.adam_eps;
  j["hidden"] = t.hidden;
  return j;
}

struct Manifest {
  std::map<std::string, std::string> files;  // relative path -> sha256

  static Manifest load(const std::filesystem::path& path) {
    Manifest m;
    if (!std::filesystem::exists(path)) return m;
    const json j = json::parse(read_file(path));
    for (const auto& f : j.at("files")) m.files[f.at("path").get<std::string>()] = f.at("sha256").get<std::string>();
    return m;
  }

  void save(const std::filesystem::path& path) const {
    ordered_json j;
    j["version"] = 1;
    j["files"] = ordered_json::array();
    for (const auto& [p, h] : files) j["files"].push_back(ordered_json{{"path", p}, {"sha256", h}});
    write_file_atomic(path, j.dump(2) + "\n");
  }

  bool valid(const std::filesystem::path& root, const std::string& rel) const {
    const auto it = files.find(rel);
    if (it == files.end()) return false;
    const auto full = root / rel;
    return std::filesystem::exists(full) && sha256_file(full) == it->second;
  }
};

std::string sync_to_string(SyncSource s) { return s == SyncSource::Evaluation ? "eval" : "train"; }

SyncSource sync_from_string(const std::string& s) {
  if (s == "eval") return SyncSource::Evaluation;
  if (s == "train") return SyncSource::Training;
  throw InvalidConfig("sync_source must be 'eval' or 'train'");
}

}  // namespace

// ---------------------------------------------------------------------------
// SweepConfig

SweepConfig SweepConfig::parse(std::string_view json_text) {
  SweepConfig cfg;
  try {
    const json j = json::parse(json_text);
    if (j.contains("sides")) cfg.sides = j.at("sides").get<std::vector<int>>();
    if (j.contains("densities")) {
      cfg.densities.clear();
      for (const auto& d : j.at("densities")) cfg.densities.push_back(density_from_json(d));
    }
    if (j.contains("exclude")) {
      for (const auto& pair : j.at("exclude")) {
        if (!pair.is_array() || pair.size() != 2) throw InvalidConfig("exclude entries must be [L, rho] pairs");
        cfg.excluded.push_back(Condition{pair[0].get<int>(), density_from_json(pair[1])});
      }
    }
    if (j.contains("seeds")) {
      const auto& s = j.at("seeds");
      if (s.is_number_integer()) {
        const int n = s.get<int>();
        if (n <= 0) throw InvalidConfig("seed count must be positive");
        cfg.seeds.resize(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) cfg.seeds[k] = k;
      } else {
        cfg.seeds = s.get<std::vector<int>>();
      }
    }
    if (j.contains("trainer")) read_trainer(j.at("trainer"), cfg.trainer);
    if (j.contains("episodes")) cfg.trainer.episodes = j.at("episodes").get<int>();
    if (j.contains("id_enabled")) cfg.id_enabled = j.at("id_enabled").get<bool>();
    if (j.contains("fixed_goal")) cfg.fixed_goal = j.at("fixed_goal").get<bool>();
    if (j.contains("out")) cfg.out = j.at("out").get<std::string>();
    if (j.contains("workers")) cfg.workers = j.at("workers").get<int>();
    if (j.contains("window_frac")) cfg.window_frac = j.at("window_frac").get<double>();
    if (j.contains("ridge_level")) cfg.ridge_level = j.at("ridge_level").get<double>();
    if (j.contains("sync_source")) cfg.sync_source = sync_from_string(j.at("sync_source").get<std::string>());
  } catch (const json::exception& e) {
    throw InvalidConfig(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

SweepConfig SweepConfig::load(const std::filesystem::path& path) { return parse(read_file(path)); }

std::string SweepConfig::to_json() const {
  ordered_json j;
  j["sides"] = sides;
  j["densities"] = ordered_json::array();
  for (const Density& d : densities) j["densities"].push_back(d.to_string());
  j["exclude"] = ordered_json::array();
  for (const Condition& c : excluded) j["exclude"].push_back(ordered_json::array({c.side, c.density.to_string()}));
  j["seeds"] = seeds;
  j["episodes"] = trainer.episodes;
  j["id_enabled"] = id_enabled;
  j["fixed_goal"] = fixed_goal;
  j["window_frac"] = window_frac;
  j["ridge_level"] = ridge_level;
  j["sync_source"] = sync_to_string(sync_source);
  j["trainer"] = trainer_json(trainer);
  return j.dump(2) + "\n";
}

bool SweepConfig::is_excluded(const Condition& c) const {
  return std::find(excluded.begin(), excluded.end(), c) != excluded.end();
}

std::vector<Condition> SweepConfig::conditions() const {
  std::vector<Condition> out;
  for (int side : sides) {
    for (const Density& d : densities) {
      const Condition c{side, d};
      if (!is_excluded(c)) out.push_back(c);
    }
  }
  return out;
}

void SweepConfig::validate() const {
  if (sides.empty() || densities.empty()) throw InvalidConfig("sweep needs at least one side and one density");
  if (seeds.empty()) throw InvalidConfig("sweep needs at least one seed");
  if (std::set<int>(seeds.begin(), seeds.end()).size() != seeds.size()) throw InvalidConfig("seed list has duplicates");
  if (std::any_of(seeds.begin(), seeds.end(), [](int s) { return s < 0; })) throw InvalidConfig("seeds must be >= 0");
  if (workers <= 0) throw InvalidConfig("workers must be positive");
  if (!(window_frac > 0.0 && window_frac <= 1.0)) throw InvalidConfig("window_frac must lie in (0, 1]");
  if (!(ridge_level > 0.0)) throw InvalidConfig("ridge_level must be positive");
  trainer.validate();
  const auto conds = conditions();
  if (conds.empty()) throw InvalidConfig("every condition is excluded");
  for (const Condition& c : conds) density_to_count(c.side, c.density);
}

// ---------------------------------------------------------------------------
// Runs

std::uint64_t run_master_seed(const Condition& condition, int seed) {
  return mix_seed({0x49514C50ULL, static_cast<std::uint64_t>(condition.side),
                   static_cast<std::uint64_t>(condition.density.denominator()), static_cast<std::uint64_t>(seed)});
}

std::string condition_stem(const Condition& condition, bool id_enabled) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "L%02d_rho%s_id%d", condition.side, condition.density.to_string().c_str(),
                id_enabled ? 1 : 0);
  return buf;
}

std::string run_stem(const Condition& condition, bool id_enabled, int seed) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "_s%04d", seed);
  return condition_stem(condition, id_enabled) + buf;
}

RunRecord train_run(const Condition& condition, int seed, const SweepConfig& config,
                    const std::optional<std::filesystem::path>& checkpoint) {
  const std::uint64_t master = run_master_seed(condition, seed);
  GridConfig grid = GridConfig::for_condition(condition.side, condition.density, config.id_enabled, master);
  grid.fixed_goal = config.fixed_goal;

  Learner learner(grid, config.trainer, master);
  RunRecord rec;
  rec.meta.side = condition.side;
  rec.meta.density = condition.density;
  rec.meta.agent_count = grid.agent_count;
  rec.meta.seed = seed;
  rec.meta.id_enabled = grid.id_enabled;
  rec.meta.obs_dim = grid.observation_dim();
  rec.meta.horizon = grid.horizon;
  rec.meta.master_seed = master;
  rec.meta.episodes_planned = config.trainer.episodes;

  const TrainerConfig& t = config.trainer;
  for (int e = 0; e < t.episodes; ++e) {
    rec.episodes.push_back(summarize_episode(learner.train_episode(), grid.horizon));
    if ((e + 1) % t.eval_every == 0) {
      auto evals = learner.evaluate(t.eval_episodes);
      rec.evals.insert(rec.evals.end(), evals.begin(), evals.end());
    }
  }
  if (checkpoint) {
    save_checkpoint(learner.online(), *checkpoint);
    rec.meta.checkpoint = checkpoint->filename().string();
  }
  return rec;
}

std::size_t planned_runs(const SweepConfig& config) { return config.conditions().size() * config.seeds.size(); }

SweepSummary run_sweep(const SweepConfig& config, std::ostream* progress) {
  config.validate();
  const std::filesystem::path root = config.out;
  std::filesystem::create_directories(root / "runs");
  std::filesystem::create_directories(root / "checkpoints");

  const std::string resolved = config.to_json();
  const auto config_path = root / "config.resolved.json";
  if (std::filesystem::exists(config_path) && read_file(config_path) != resolved) {
    throw InvalidConfig("output directory " + root.string() + " holds results of a different config");
  }
  write_file_atomic(config_path, resolved);

  struct Job {
    Condition condition;
    int seed;
    std::string stem;
  };
  std::vector<Job> jobs;
  for (const Condition& c : config.conditions()) {
    for (int s : config.seeds) jobs.push_back(Job{c, s, run_stem(c, config.id_enabled, s)});
  }

  const auto manifest_path = root / "manifest.json";
  Manifest manifest = Manifest::load(manifest_path);
  std::mutex mu;
  SweepSummary summary;
  summary.planned = jobs.size();

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= jobs.size()) return;
      const Job& job = jobs[k];
      const std::string run_rel = "runs/" + job.stem + ".csv";
      const std::string ckpt_rel = "checkpoints/" + job.stem + ".ckpt";
      {
        std::lock_guard lock(mu);
        if (manifest.valid(root, run_rel) && manifest.valid(root, ckpt_rel)) {
          ++summary.skipped;
          if (progress) *progress << "skip " << job.stem << " (complete)\n";
          continue;
        }
      }
      try {
        const auto ckpt_tmp = root / (ckpt_rel + ".partial");
        RunRecord rec = train_run(job.condition, job.seed, config, ckpt_tmp);
        rec.meta.checkpoint = ckpt_rel;
        std::filesystem::rename(ckpt_tmp, root / ckpt_rel);
        write_run_record(root / run_rel, rec);
        const std::string run_hash = sha256_file(root / run_rel);
        const std::string ckpt_hash = sha256_file(root / ckpt_rel);
        std::lock_guard lock(mu);
        manifest.files[run_rel] = run_hash;
        manifest.files[ckpt_rel] = ckpt_hash;
        manifest.save(manifest_path);
        ++summary.completed;
        if (progress) *progress << "done " << job.stem << "\n" << std::flush;
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        summary.failures.push_back(job.stem + ": " + e.what());
        if (progress) *progress << "FAILED " << job.stem << ": " << e.what() << "\n";
      }
    }
  };

  const int n_threads = std::max(1, std::min<int>(config.workers, static_cast<int>(jobs.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < n_threads; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  manifest.save(manifest_path);
  std::sort(summary.failures.begin(), summary.failures.end());
  return summary;
}

}  // namespace iqlphase
