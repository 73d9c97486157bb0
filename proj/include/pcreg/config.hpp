#pragma once

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pcreg/data.hpp"
#include "pcreg/env.hpp"
#include "pcreg/eval.hpp"
#include "pcreg/expert.hpp"
#include "pcreg/icp.hpp"
#include "pcreg/learn.hpp"
#include "pcreg/model.hpp"

namespace pcreg {

inline const char* to_string(TransformMode mode) {
  switch (mode) {
    case TransformMode::kGlobalDisentangled: return "global";
    case TransformMode::kLocalDisentangled: return "local";
    case TransformMode::kBasic: return "basic";
  }
  return "unknown";
}

inline TransformMode transform_mode_from_string(const std::string& s) {
  if (s == "global") return TransformMode::kGlobalDisentangled;
  if (s == "local") return TransformMode::kLocalDisentangled;
  if (s == "basic") return TransformMode::kBasic;
  throw ConfigError("unknown transform mode: " + s + " (expected global|local|basic)");
}

inline const char* to_string(ExpertKind kind) {
  return kind == ExpertKind::kSteady ? "steady" : "greedy";
}

inline ExpertKind expert_kind_from_string(const std::string& s) {
  if (s == "steady") return ExpertKind::kSteady;
  if (s == "greedy") return ExpertKind::kGreedy;
  throw ConfigError("unknown expert kind: " + s + " (expected steady|greedy)");
}

/// Whole-run configuration; every section falls back to the module
/// defaults, unknown keys are rejected by name.
struct RunConfig {
  std::uint64_t seed = 0;
  ExpertKind expert = ExpertKind::kSteady;
  TransformMode transform_mode = TransformMode::kGlobalDisentangled;
  TrainConfig train;
  CorruptionConfig data;
  RewardWeights reward;
  IcpConfig icp;
  AgentConfig model;
  struct Paths {
    std::string data;
    std::string checkpoint;
    std::string log;
  } paths;

  EnvConfig env_config() const {
    EnvConfig cfg;
    cfg.mode = transform_mode;
    cfg.reward_weights = reward;
    cfg.n_max = train.n_steps;
    return cfg;
  }

  TrainSetup train_setup() const {
    TrainSetup setup;
    setup.train = train;
    setup.corruption = data;
    setup.env = env_config();
    setup.model = model;
    setup.expert = expert;
    setup.seed = seed;
    return setup;
  }

  void validate() const {
    train.validate();
    icp.validate();
    model.validate();
    if (reward.eps_plus <= 0 || reward.eps_zero <= 0 || reward.eps_minus <= 0) {
      throw ConfigError("reward: all epsilons must be positive");
    }
    if (reward.eps_minus <= reward.eps_plus) {
      throw ConfigError("reward: eps_minus must exceed eps_plus");
    }
    if (data.n_sample < 1 || data.n_total < data.n_sample) {
      throw ConfigError("data: need 1 <= n_sample <= n_total");
    }
    if (data.rot_range_deg < 0 || data.trans_range < 0 || data.jitter_sigma < 0 ||
        data.jitter_clip < 0) {
      throw ConfigError("data: ranges must be non-negative");
    }
  }
};

namespace detail {

/// Strict object reader: every present key must be consumed exactly once.
class JsonSection {
 public:
  JsonSection(const nlohmann::json& j, std::string path) : json_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(path_ + ": expected a JSON object");
  }

  ~JsonSection() = default;

  template <class T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    const auto it = json_.find(key);
    if (it == json_.end()) return;
    try {
      out = it->get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(path_ + key + ": wrong type");
    }
  }

  void read_string(const char* key, std::string& out) { read<std::string>(key, out); }

  bool has(const char* key) {
    seen_.insert(key);
    return json_.contains(key);
  }

  const nlohmann::json& at(const char* key) { return json_.at(key); }

  /// Throws on the first key not claimed by any read()/has() call.
  void finish() const {
    for (const auto& [key, value] : json_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown config key: " + path_ + key);
    }
  }

  std::string child_path(const char* key) const { return path_ + key + "."; }

 private:
  const nlohmann::json& json_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
  RunConfig cfg;
  detail::JsonSection root(j, "");
  root.read("seed", cfg.seed);

  if (root.has("expert")) {
    std::string s;
    root.read_string("expert", s);
    cfg.expert = expert_kind_from_string(s);
  }
  if (root.has("transform_mode")) {
    std::string s;
    root.read_string("transform_mode", s);
    cfg.transform_mode = transform_mode_from_string(s);
  }

  if (root.has("train")) {
    detail::JsonSection s(root.at("train"), root.child_path("train"));
    s.read("n_steps", cfg.train.n_steps);
    s.read("n_trajectories", cfg.train.n_trajectories);
    s.read("gamma", cfg.train.gamma);
    s.read("gae_lambda", cfg.train.gae_lambda);
    s.read("alpha", cfg.train.alpha);
    s.read("clip_ratio", cfg.train.clip_ratio);
    s.read("entropy_coeff", cfg.train.entropy_coeff);
    s.read("value_coeff", cfg.train.value_coeff);
    s.read("batch_observations", cfg.train.batch_observations);
    s.read("batch_records", cfg.train.batch_records);
    s.read("lr", cfg.train.lr);
    s.read("lr_halve_every", cfg.train.lr_halve_every);
    s.read("epochs", cfg.train.epochs);
    s.read("augment", cfg.train.augment);
    s.finish();
  }
  if (root.has("data")) {
    detail::JsonSection s(root.at("data"), root.child_path("data"));
    s.read("n_sample", cfg.data.n_sample);
    s.read("n_total", cfg.data.n_total);
    s.read("rot_range_deg", cfg.data.rot_range_deg);
    s.read("trans_range", cfg.data.trans_range);
    s.read("jitter_sigma", cfg.data.jitter_sigma);
    s.read("jitter_clip", cfg.data.jitter_clip);
    s.read("shuffle", cfg.data.shuffle);
    s.finish();
  }
  if (root.has("reward")) {
    detail::JsonSection s(root.at("reward"), root.child_path("reward"));
    s.read("eps_plus", cfg.reward.eps_plus);
    s.read("eps_zero", cfg.reward.eps_zero);
    s.read("eps_minus", cfg.reward.eps_minus);
    s.finish();
  }
  if (root.has("icp")) {
    detail::JsonSection s(root.at("icp"), root.child_path("icp"));
    s.read("max_iterations", cfg.icp.max_iterations);
    s.read("convergence_tol", cfg.icp.convergence_tol);
    s.read("max_correspondence_distance", cfg.icp.max_correspondence_distance);
    s.finish();
  }
  if (root.has("model")) {
    detail::JsonSection s(root.at("model"), root.child_path("model"));
    s.read("encoder_widths", cfg.model.encoder_widths);
    s.read("head_widths", cfg.model.head_widths);
    s.read("value_hidden", cfg.model.value_hidden);
    s.finish();
  }
  if (root.has("paths")) {
    detail::JsonSection s(root.at("paths"), root.child_path("paths"));
    s.read_string("data", cfg.paths.data);
    s.read_string("checkpoint", cfg.paths.checkpoint);
    s.read_string("log", cfg.paths.log);
    s.finish();
  }
  root.finish();
  try {
    cfg.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config file " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config JSON parse error: ") + e.what());
  }
  return parse_run_config(j);
}

}  // namespace pcreg
