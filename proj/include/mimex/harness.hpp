#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <future>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mimex/config.hpp"
#include "mimex/envs/plane.hpp"
#include "mimex/envs/rooms.hpp"
#include "mimex/envs/wormhole.hpp"
#include "mimex/metrics.hpp"
#include "mimex/ppo.hpp"
#include "mimex/rollout.hpp"
#include "mimex/serialize.hpp"

namespace mimex {

inline constexpr const char* kVersion = "0.1.0";

inline std::unique_ptr<Environment> make_environment(const ExperimentConfig& cfg,
                                                     std::uint64_t seed) {
  if (cfg.env == "plane") {
    PlaneOptions o;
    o.half_width = cfg.half_width;
    o.goal_radius = cfg.goal_radius;
    o.action_bound = cfg.action_bound;
    o.max_steps = cfg.max_steps;
    return std::make_unique<PlaneEnv>(seed, o);
  }
  if (cfg.env == "wormhole") {
    WormholeOptions o;
    o.half_width = cfg.half_width;
    o.radius = cfg.wormhole_radius;
    o.upper_z = cfg.upper_z;
    o.action_bound = cfg.action_bound;
    o.max_steps = cfg.max_steps;
    return std::make_unique<WormholeEnv>(seed, o);
  }
  if (cfg.env == "rooms") {
    RoomsOptions o;
    o.random_start = cfg.random_start;
    o.max_steps = cfg.max_steps;
    return std::make_unique<RoomsEnv>(seed, o);
  }
  throw ConfigError("unknown env '" + cfg.env + "'");
}

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

inline json metrics_to_json(const RunMetrics& m) {
  json j;
  j["seed"] = m.seed;
  j["env"] = m.env;
  j["method"] = m.method;
  j["steps"] = m.steps;
  if (m.steps_to_first_reward) {
    j["steps_to_first_reward"] = *m.steps_to_first_reward;
  } else {
    j["steps_to_first_reward"] = nullptr;  // censored: budget exhausted
  }
  j["reached_goal"] = m.reached_goal;
  j["boundary_occupancy"] = m.boundary_occupancy;
  j["tv_occupancy"] = m.tv_occupancy;
  j["episodes"] = m.episode_returns.size();
  j["wall_clock_seconds"] = m.wall_clock_seconds;
  j["digest"] = m.digest();
  if (!m.error.empty()) j["error"] = m.error;
  return j;
}

inline void append_trajectory_rows(std::ofstream& out, const RolloutBatch& batch,
                                   std::size_t upto, std::uint64_t first_step) {
  for (std::size_t i = 0; i < upto; ++i) {
    const Transition& t = batch.transitions[i];
    out << first_step + i;
    for (double v : t.s.values()) out << ',' << format_double(v);
    for (double v : t.a.values()) out << ',' << format_double(v);
    out << ',' << format_double(t.r_ext) << ',' << format_double(t.r_int) << ','
        << (t.done ? 1 : 0) << '\n';
  }
}

}  // namespace detail

// One seed of Algorithm-1 training: alternate collection, intrinsic-reward
// assignment, world-model update, and PPO update until the step budget is
// spent (or, in race mode, the first extrinsic reward is seen). Artifacts go
// to seed_dir when given; a numeric failure mid-run keeps whatever was
// already written and reports the error in the metrics.
inline RunMetrics run_single_seed(const ExperimentConfig& cfg, std::uint64_t seed,
                                  const std::filesystem::path& seed_dir = {}) {
  auto t0 = std::chrono::steady_clock::now();
  RunMetrics m;
  m.seed = seed;
  m.env = cfg.env;
  m.method = cfg.method;

  bool race = cfg.mode == "race";
  VisitationGrid grid(cfg.heatmap_bin);
  std::vector<std::array<double, 2>> trajectory;
  std::ofstream traj_file;
  if (!seed_dir.empty()) {
    std::filesystem::create_directories(seed_dir);
    if (cfg.emit_trajectory) {
      traj_file.open(seed_dir / "trajectory.csv");
      if (!traj_file) throw IoError("cannot write trajectory.csv in " + seed_dir.string());
      traj_file << "step";
      // header widths depend on the env; fill after the spec is known
    }
  }

  std::unique_ptr<Policy> policy;
  std::optional<ValueNet> vnet;
  std::optional<IntrinsicMethod> method;

  try {
    Rng root(seed);
    std::vector<EnvSlot> slots;
    for (std::size_t e = 0; e < cfg.num_envs; ++e) {
      slots.emplace_back(make_environment(cfg, root.fork("env", e).seed()), root.fork("act", e));
    }
    const EnvSpec& spec = slots[0].env->spec();
    if (traj_file.is_open()) {
      for (std::size_t i = 0; i < spec.observation_dim; ++i) traj_file << ",obs" << i;
      std::size_t act_w = spec.action_kind == ActionKind::discrete ? 1 : spec.action_dim;
      for (std::size_t i = 0; i < act_w; ++i) traj_file << ",act" << i;
      traj_file << ",r_ext,r_int,done\n";
    }

    policy = make_policy(spec, cfg.policy, root.fork("policy"));
    ValueOptions vopts;
    vopts.hidden = cfg.policy.hidden;
    vopts.learning_rate = cfg.value_lr;
    vopts.heads = cfg.advantage.dual ? 2 : 1;
    vnet.emplace(spec, vopts, root.fork("value"));
    method.emplace(spec, cfg.intrinsic, root.fork("intrinsic"));
    Rng shuffle = root.fork("shuffle");

    std::vector<double> ep_return(cfg.num_envs, 0.0);
    bool stop = false;

    while (!stop && m.steps < cfg.budget) {
      std::size_t h = std::min<std::size_t>(cfg.horizon, (cfg.budget - m.steps) / cfg.num_envs);
      if (h == 0) break;  // budget not divisible by num_envs; undershoot
      RolloutBatch batch = collect_rollouts(slots, *policy, *method, h);

      // process steps in batch order (chronological when num_envs == 1)
      std::size_t used = batch.size();
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const Transition& t = batch.transitions[i];
        std::size_t e = batch.env_index[i];
        ep_return[e] += t.r_ext;
        if (t.done) {
          m.episode_returns.push_back(ep_return[e]);
          ep_return[e] = 0.0;
        }
        if (t.r_ext > 0.0) {
          m.reached_goal = true;
          if (!m.steps_to_first_reward) m.steps_to_first_reward = m.steps + i + 1;
          if (race) {
            used = i + 1;  // trajectory counts end at the winning step
            stop = true;
            break;
          }
        }
      }

      for (std::size_t i = 0; i < used; ++i) {
        grid.record(batch.positions[i][0], batch.positions[i][1]);
        trajectory.push_back(batch.positions[i]);
      }
      if (traj_file.is_open()) detail::append_trajectory_rows(traj_file, batch, used, m.steps);

      double ext_sum = 0.0, int_sum = 0.0;
      for (std::size_t i = 0; i < used; ++i) {
        ext_sum += batch.transitions[i].r_ext;
        int_sum += batch.transitions[i].r_int;
      }
      m.extrinsic_mean_series.push_back(ext_sum / double(used));
      m.intrinsic_mean_series.push_back(int_sum / double(used));
      m.steps += used;
      if (stop) break;  // race finished: skip the now-pointless updates

      compute_advantages(batch, *vnet, cfg.advantage);
      ppo_update(*policy, *vnet, batch, cfg.ppo, shuffle);

      if (method->has_model()) {
        std::size_t n = batch.transitions.size();
        for (std::size_t pass = 0; pass < cfg.model_epochs; ++pass) {
          for (std::size_t mb = 0; mb < cfg.model_minibatches; ++mb) {
            std::size_t lo = mb * n / cfg.model_minibatches;
            std::size_t hi = (mb + 1) * n / cfg.model_minibatches;
            if (lo == hi) continue;
            method->update(std::span<Transition>(batch.transitions).subspan(lo, hi - lo));
          }
        }
      }
    }

    if (cfg.env == "wormhole" && !trajectory.empty()) {
      m.boundary_occupancy =
          boundary_occupancy(trajectory, cfg.boundary_radius, cfg.boundary_tolerance);
    }
    if (cfg.env == "rooms" && !trajectory.empty()) {
      m.tv_occupancy = tv_room_occupancy(trajectory);
    }
  } catch (const std::exception& e) {
    m.error = e.what();
  }

  m.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (!seed_dir.empty()) {
    detail::write_text(seed_dir / "metrics.json", detail::metrics_to_json(m).dump(2) + "\n");
    emit_series_csv(m, seed_dir / "series.csv");
    if (cfg.emit_heatmap && !grid.empty()) emit_heatmap(grid, seed_dir / "heatmap");
    if (cfg.emit_checkpoints && policy && vnet) {
      save_values(policy->params_flat(), seed_dir / "policy.bin");
      save_values(vnet->params_flat(), seed_dir / "value.bin");
      if (method && method->has_model()) {
        save_network(*method->world_model(), seed_dir / "model.bin");
      }
    }
    if (!m.error.empty()) {
      detail::write_text(seed_dir / "error.txt", m.error + "\n");
    }
  }
  return m;
}

struct ExperimentResult {
  std::vector<RunMetrics> runs;  // in config seed order
  SeedAggregate aggregate;
  std::filesystem::path dir;  // empty when nothing was written

  bool ok() const {
    for (const RunMetrics& r : runs) {
      if (!r.error.empty()) return false;
    }
    return true;
  }
};

// All seeds of one configuration. Seeds are independent jobs: they run in
// parallel via std::async unless the config asks for the serial reference
// path. Artifacts land in <out>/<env>-<method>/seed-<seed>/ unless write_dir
// is false.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write_dir = true) {
  ExperimentResult result;
  std::filesystem::path dir;
  if (write_dir) {
    dir = std::filesystem::path(cfg.out) / (cfg.env + "-" + cfg.method);
    std::filesystem::create_directories(dir);
    detail::write_text(dir / "config.json", emit_config(cfg));
    std::string manifest = "version " + std::string(kVersion) + "\nseeds";
    for (std::uint64_t s : cfg.seeds) manifest += " " + std::to_string(s);
    manifest += "\nmode " + cfg.mode + (cfg.serial ? " serial" : " parallel") + "\n";
    detail::write_text(dir / "manifest.txt", manifest);
    result.dir = dir;
  }

  auto seed_dir = [&](std::uint64_t s) {
    return write_dir ? dir / ("seed-" + std::to_string(s)) : std::filesystem::path{};
  };

  if (cfg.serial) {
    for (std::uint64_t s : cfg.seeds) result.runs.push_back(run_single_seed(cfg, s, seed_dir(s)));
  } else {
    std::vector<std::future<RunMetrics>> jobs;
    for (std::uint64_t s : cfg.seeds) {
      jobs.push_back(std::async(std::launch::async,
                                [&cfg, s, d = seed_dir(s)] { return run_single_seed(cfg, s, d); }));
    }
    for (auto& j : jobs) result.runs.push_back(j.get());
  }

  result.aggregate = aggregate_seeds(result.runs);
  if (write_dir) {
    json agg;
    agg["median_steps_to_first_reward"] =
        result.aggregate.median_steps_to_first_reward
            ? json(*result.aggregate.median_steps_to_first_reward)
            : json(nullptr);
    agg["steps_to_first_reward_mean"] = result.aggregate.steps_to_first_reward.mean;
    agg["steps_to_first_reward_std"] = result.aggregate.steps_to_first_reward.stddev;
    agg["censored_runs"] = result.aggregate.steps_to_first_reward.censored;
    agg["boundary_occupancy_mean"] = result.aggregate.boundary_occupancy.mean;
    agg["tv_occupancy_mean"] = result.aggregate.tv_occupancy.mean;
    agg["goal_seeds"] = result.aggregate.goal_seeds;
    agg["total_seeds"] = result.aggregate.total_seeds;
    detail::write_text(dir / "aggregate.json", agg.dump(2) + "\n");
  }
  return result;
}

struct ComparisonCheck {
  std::string description;
  bool passed = false;
};

struct ComparisonReport {
  std::vector<std::string> methods;
  std::vector<ExperimentResult> results;  // parallel to methods
  std::vector<ComparisonCheck> checks;

  bool all_passed() const {
    for (const ComparisonCheck& c : checks) {
      if (!c.passed) return false;
    }
    for (const ExperimentResult& r : results) {
      if (!r.ok()) return false;
    }
    return true;
  }
};

namespace detail {

inline double median_or_inf(const ExperimentResult& r) {
  return r.aggregate.median_steps_to_first_reward
             ? *r.aggregate.median_steps_to_first_reward
             : std::numeric_limits<double>::infinity();
}

}  // namespace detail

// Run several methods under one config (same env, seeds, budget) and compare
// the exploration metrics. The report flags the orderings the comparison is
// meant to establish: on reward races, curiosity methods should beat "none";
// on the wormhole, surprisal should stick to the boundary more than mime.
inline ComparisonReport compare_methods(const ExperimentConfig& base,
                                        const std::vector<std::string>& methods,
                                        bool write_dir = true) {
  if (methods.size() < 2) throw ConfigError("compare: need at least two methods");
  ComparisonReport report;
  report.methods = methods;

  for (const std::string& method : methods) {
    json user = base.resolved;
    user["method"] = method;
    ExperimentConfig cfg = parse_config(user);
    report.results.push_back(run_experiment(cfg, write_dir));
  }

  auto find = [&](const std::string& name) -> const ExperimentResult* {
    for (std::size_t i = 0; i < methods.size(); ++i) {
      if (methods[i] == name) return &report.results[i];
    }
    return nullptr;
  };

  const ExperimentResult* none = find("none");
  if (base.mode == "race") {
    for (const char* curious : {"mime", "surprisal"}) {
      const ExperimentResult* r = find(curious);
      if (r && none) {
        report.checks.push_back({std::string(curious) + " finds reward faster than none",
                                 detail::median_or_inf(*r) < detail::median_or_inf(*none)});
      }
    }
  }
  if (base.env == "wormhole") {
    const ExperimentResult* surprisal = find("surprisal");
    const ExperimentResult* mime = find("mime");
    if (surprisal && mime) {
      report.checks.push_back({"surprisal sticks to the boundary more than mime",
                               surprisal->aggregate.boundary_occupancy.mean >
                                   mime->aggregate.boundary_occupancy.mean});
    }
  }

  if (write_dir) {
    std::filesystem::path dir(base.out);
    std::filesystem::create_directories(dir);
    json j;
    j["env"] = base.env;
    j["mode"] = base.mode;
    std::string table = "method  median_first_reward  censored  boundary_occ  tv_occ  goals\n";
    for (std::size_t i = 0; i < methods.size(); ++i) {
      const SeedAggregate& a = report.results[i].aggregate;
      json row;
      row["method"] = methods[i];
      row["median_steps_to_first_reward"] =
          a.median_steps_to_first_reward ? json(*a.median_steps_to_first_reward) : json(nullptr);
      row["censored"] = a.steps_to_first_reward.censored;
      row["boundary_occupancy_mean"] = a.boundary_occupancy.mean;
      row["tv_occupancy_mean"] = a.tv_occupancy.mean;
      row["goal_seeds"] = a.goal_seeds;
      j["rows"].push_back(row);

      table += methods[i] + "  " +
               (a.median_steps_to_first_reward
                    ? detail::format_double(*a.median_steps_to_first_reward)
                    : std::string("censored")) +
               "  " + std::to_string(a.steps_to_first_reward.censored) + "  " +
               detail::format_double(a.boundary_occupancy.mean) + "  " +
               detail::format_double(a.tv_occupancy.mean) + "  " +
               std::to_string(a.goal_seeds) + "/" + std::to_string(a.total_seeds) + "\n";
    }
    for (const ComparisonCheck& c : report.checks) {
      json row;
      row["check"] = c.description;
      row["passed"] = c.passed;
      j["checks"].push_back(row);
      table += std::string(c.passed ? "[pass] " : "[FAIL] ") + c.description + "\n";
    }
    detail::write_text(dir / "report.json", j.dump(2) + "\n");
    detail::write_text(dir / "report.txt", table);
  }
  return report;
}

struct ReplayResult {
  std::vector<std::uint64_t> seeds;
  std::vector<bool> matched;  // digest of re-run equals the stored digest

  bool all_matched() const {
    for (bool b : matched) {
      if (!b) return false;
    }
    return !matched.empty();
  }
};

// Re-run every seed of a finished run directory in serial mode and verify the
// stored metrics digests byte for byte.
inline ReplayResult replay(const std::filesystem::path& run_dir) {
  std::ifstream cfg_in(run_dir / "config.json");
  if (!cfg_in) throw IoError("replay: no config.json in " + run_dir.string());
  std::stringstream ss;
  ss << cfg_in.rdbuf();
  ExperimentConfig cfg = parse_config_text(ss.str());

  ReplayResult result;
  for (std::uint64_t seed : cfg.seeds) {
    std::filesystem::path metrics_path = run_dir / ("seed-" + std::to_string(seed)) /
                                         "metrics.json";
    std::ifstream min(metrics_path);
    if (!min) throw IoError("replay: missing " + metrics_path.string());
    json stored = json::parse(min, nullptr, false);
    if (stored.is_discarded() || !stored.contains("digest")) {
      throw IoError("replay: malformed " + metrics_path.string());
    }
    RunMetrics fresh = run_single_seed(cfg, seed);
    result.seeds.push_back(seed);
    result.matched.push_back(fresh.digest() == stored["digest"].get<std::uint64_t>());
  }
  return result;
}

}  // namespace mimex
