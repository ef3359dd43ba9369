#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mimex/errors.hpp"
#include "mimex/intrinsic.hpp"
#include "mimex/policy.hpp"
#include "mimex/ppo.hpp"
#include "mimex/rollout.hpp"

namespace mimex {

using json = nlohmann::json;

// Every key an experiment file may set, with its default. A minimal config
// names only "env" and "method"; the merged tree is written back next to the
// run artifacts so the effective values are always auditable.
inline json default_config_json() {
  return json{
      {"env", "plane"},        // plane | wormhole | rooms
      {"method", "none"},      // none | count | surprisal | mime | pred-improve | rnd
      {"mode", "budget"},      // "race" stops at the first extrinsic reward
      {"seeds", json::array({1, 2, 3})},
      {"budget", 500000},
      {"out", "runs"},
      {"eta", 0.5},
      {"serial", false},
      {"emit",
       {{"heatmap", true}, {"trajectory", false}, {"checkpoints", false}}},
      {"env_params",
       {{"half_width", 2.0},
        {"goal_radius", 0.05},
        {"action_bound", 0.01},
        {"max_steps", 500},
        {"wormhole_radius", 0.5},
        {"upper_z", 1000.0},
        {"random_start", false}}},  // rooms only; fixed start cell by default
      {"intrinsic",
       {{"feature_mode", "raw"},  // raw | frozen-features | trainable-model-frozen-target
        {"k", 1},
        {"bin_width", 0.05},
        {"model_lr", 1e-3},
        {"feature_dim", 16},
        {"model_hidden", 32},
        {"model_epochs", 4},
        {"model_minibatches", 4}}},
      {"policy",
       {{"hidden", 32}, {"learning_rate", 3e-4}, {"init_log_std", -1.0}, {"value_lr", 1e-3}}},
      {"ppo", {{"clip_eps", 0.2}, {"epochs", 4}, {"minibatches", 4}, {"ent_coef", 0.0}}},
      {"advantage",
       {{"gamma", 0.99},
        {"gamma_int", 0.99},
        {"lambda", 0.95},
        {"dual", false},
        {"normalize", true}}},
      {"rollout", {{"horizon", 5000}, {"num_envs", 1}}},
      {"metrics",
       {{"heatmap_bin", 0.02}, {"boundary_radius", 0.5}, {"boundary_tolerance", 0.05}}},
  };
}

namespace detail {

inline bool types_compatible(const json& base, const json& user) {
  if (base.type() == user.type()) return true;
  // integer <-> float promotion both ways; everything else must match
  return base.is_number() && user.is_number();
}

inline void merge_checked(json& base, const json& user, const std::string& path) {
  if (!user.is_object()) {
    throw ConfigError("config: expected an object at '" + (path.empty() ? "<root>" : path) + "'");
  }
  for (auto it = user.begin(); it != user.end(); ++it) {
    std::string here = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) {
      throw ConfigError("config: unknown key '" + here + "'");
    }
    json& slot = base[it.key()];
    if (slot.is_object()) {
      merge_checked(slot, it.value(), here);
    } else {
      if (!types_compatible(slot, it.value())) {
        throw ConfigError("config: wrong type for '" + here + "' (expected " +
                          std::string(slot.type_name()) + ", got " +
                          std::string(it.value().type_name()) + ")");
      }
      slot = it.value();
    }
  }
}

// MIMEX_PPO_EPOCHS=8 overrides ppo.epochs, and so on for every leaf.
inline void apply_env_overrides(json& tree, const std::string& path) {
  for (auto it = tree.begin(); it != tree.end(); ++it) {
    std::string here = path.empty() ? it.key() : path + "." + it.key();
    if (it.value().is_object()) {
      apply_env_overrides(it.value(), here);
      continue;
    }
    std::string var = "MIMEX_";
    for (char c : here) var += c == '.' ? '_' : char(std::toupper(static_cast<unsigned char>(c)));
    const char* raw = std::getenv(var.c_str());
    if (!raw) continue;

    json parsed;
    if (it.value().is_string()) {
      parsed = std::string(raw);
    } else {
      parsed = json::parse(raw, nullptr, false);
      if (parsed.is_discarded() && it.value().is_array()) {
        // allow bare comma lists for arrays: MIMEX_SEEDS=1,2,3
        parsed = json::array();
        std::stringstream ss(raw);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
          json v = json::parse(tok, nullptr, false);
          if (v.is_discarded()) parsed = json();  // force the error below
          if (parsed.is_array()) parsed.push_back(v);
        }
      }
      if (parsed.is_discarded() || !types_compatible(it.value(), parsed)) {
        throw ConfigError("config: cannot parse " + var + "='" + raw + "' for '" + here + "'");
      }
    }
    it.value() = parsed;
  }
}

}  // namespace detail

inline IntrinsicKind intrinsic_kind_from_name(const std::string& s) {
  if (s == "none") return IntrinsicKind::none;
  if (s == "count") return IntrinsicKind::count;
  if (s == "surprisal") return IntrinsicKind::surprisal;
  if (s == "mime") return IntrinsicKind::mime;
  if (s == "pred-improve") return IntrinsicKind::pred_improve;
  if (s == "rnd") return IntrinsicKind::rnd;
  throw ConfigError("config: unknown method '" + s + "'");
}

inline FeatureMode feature_mode_from_name(const std::string& s) {
  if (s == "raw") return FeatureMode::raw;
  if (s == "frozen-features") return FeatureMode::frozen_features;
  if (s == "trainable-model-frozen-target") return FeatureMode::trainable_model_frozen_target;
  throw ConfigError("config: unknown intrinsic.feature_mode '" + s + "'");
}

// Typed view over the resolved tree. `resolved` keeps the exact merged JSON
// for snapshotting; parse(emit(config)) reproduces it bit for bit.
struct ExperimentConfig {
  std::string env, method, mode, out;
  std::vector<std::uint64_t> seeds;
  std::uint64_t budget = 0;
  double eta = 0.5;
  bool serial = false;
  bool emit_heatmap = true, emit_trajectory = false, emit_checkpoints = false;

  double half_width = 2.0, goal_radius = 0.05, action_bound = 0.01;
  std::size_t max_steps = 500;
  double wormhole_radius = 0.5, upper_z = 1000.0;
  bool random_start = false;

  IntrinsicOptions intrinsic;
  std::size_t model_epochs = 4, model_minibatches = 4;

  PolicyOptions policy;
  double value_lr = 1e-3;
  PpoOptions ppo;
  AdvantageOptions advantage;
  std::size_t horizon = 5000, num_envs = 1;

  double heatmap_bin = 0.02, boundary_radius = 0.5, boundary_tolerance = 0.05;

  json resolved;
};

inline ExperimentConfig parse_config(const json& user) {
  json tree = default_config_json();
  detail::merge_checked(tree, user, "");
  detail::apply_env_overrides(tree, "");

  ExperimentConfig c;
  c.resolved = tree;
  c.env = tree["env"];
  c.method = tree["method"];
  c.mode = tree["mode"];
  c.out = tree["out"];
  for (const json& s : tree["seeds"]) {
    if (!s.is_number_integer() || s.get<std::int64_t>() < 0) {
      throw ConfigError("config: 'seeds' must be non-negative integers");
    }
    c.seeds.push_back(s.get<std::uint64_t>());
  }
  c.budget = tree["budget"].get<std::uint64_t>();
  c.eta = tree["eta"];
  c.serial = tree["serial"];
  c.emit_heatmap = tree["emit"]["heatmap"];
  c.emit_trajectory = tree["emit"]["trajectory"];
  c.emit_checkpoints = tree["emit"]["checkpoints"];

  const json& ep = tree["env_params"];
  c.half_width = ep["half_width"];
  c.goal_radius = ep["goal_radius"];
  c.action_bound = ep["action_bound"];
  c.max_steps = ep["max_steps"].get<std::size_t>();
  c.wormhole_radius = ep["wormhole_radius"];
  c.upper_z = ep["upper_z"];
  c.random_start = ep["random_start"];

  const json& in = tree["intrinsic"];
  c.intrinsic.kind = intrinsic_kind_from_name(c.method);
  c.intrinsic.feature_mode = feature_mode_from_name(in["feature_mode"]);
  c.intrinsic.k = in["k"].get<std::size_t>();
  c.intrinsic.bin_width = in["bin_width"];
  c.intrinsic.model_lr = in["model_lr"];
  c.intrinsic.feature_dim = in["feature_dim"].get<std::size_t>();
  c.intrinsic.model_hidden = in["model_hidden"].get<std::size_t>();
  c.model_epochs = in["model_epochs"].get<std::size_t>();
  c.model_minibatches = in["model_minibatches"].get<std::size_t>();

  const json& po = tree["policy"];
  c.policy.hidden = po["hidden"].get<std::size_t>();
  c.policy.learning_rate = po["learning_rate"];
  c.policy.init_log_std = po["init_log_std"];
  c.value_lr = po["value_lr"];

  const json& pp = tree["ppo"];
  c.ppo.clip_eps = pp["clip_eps"];
  c.ppo.epochs = pp["epochs"].get<std::size_t>();
  c.ppo.minibatches = pp["minibatches"].get<std::size_t>();
  c.ppo.ent_coef = pp["ent_coef"];

  const json& ad = tree["advantage"];
  c.advantage.gamma = ad["gamma"];
  c.advantage.gamma_int = ad["gamma_int"];
  c.advantage.lambda = ad["lambda"];
  c.advantage.dual = ad["dual"];
  c.advantage.normalize = ad["normalize"];
  c.advantage.eta = c.eta;

  const json& ro = tree["rollout"];
  c.horizon = ro["horizon"].get<std::size_t>();
  c.num_envs = ro["num_envs"].get<std::size_t>();

  const json& me = tree["metrics"];
  c.heatmap_bin = me["heatmap_bin"];
  c.boundary_radius = me["boundary_radius"];
  c.boundary_tolerance = me["boundary_tolerance"];

  // semantic validation, with the offending field named
  if (c.env != "plane" && c.env != "wormhole" && c.env != "rooms") {
    throw ConfigError("config: unknown env '" + c.env + "'");
  }
  if (c.mode != "budget" && c.mode != "race") {
    throw ConfigError("config: 'mode' must be budget or race");
  }
  if (c.seeds.empty()) throw ConfigError("config: 'seeds' must be non-empty");
  for (std::size_t i = 0; i < c.seeds.size(); ++i) {
    for (std::size_t j = i + 1; j < c.seeds.size(); ++j) {
      if (c.seeds[i] == c.seeds[j]) throw ConfigError("config: 'seeds' must be distinct");
    }
  }
  if (c.budget == 0) throw ConfigError("config: 'budget' must be positive");
  if (c.eta < 0.0) throw ConfigError("config: 'eta' must be non-negative");
  if (c.horizon == 0) throw ConfigError("config: 'rollout.horizon' must be positive");
  if (c.num_envs == 0) throw ConfigError("config: 'rollout.num_envs' must be positive");
  if (c.mode == "race" && c.num_envs != 1) {
    throw ConfigError("config: race mode tracks a single agent; set rollout.num_envs to 1");
  }
  if (c.heatmap_bin <= 0.0) throw ConfigError("config: 'metrics.heatmap_bin' must be positive");
  if (c.boundary_tolerance < 0.0) {
    throw ConfigError("config: 'metrics.boundary_tolerance' must be non-negative");
  }
  return c;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  json user = json::parse(text, nullptr, false);
  if (user.is_discarded()) throw ConfigError("config: malformed JSON");
  return parse_config(user);
}

inline ExperimentConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

inline std::string emit_config(const ExperimentConfig& c) { return c.resolved.dump(2) + "\n"; }

}  // namespace mimex
