#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pcreg/config.hpp"
#include "pcreg/data.hpp"
#include "pcreg/eval.hpp"
#include "pcreg/learn.hpp"
#include "pcreg/model.hpp"

namespace pcreg {

namespace cli_detail {

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (const char c : s) {
    if (c == '"') quoted += "\"\"";
    else quoted += c;
  }
  quoted += "\"";
  return quoted;
}

inline std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::vector<std::string> list_xyz_files(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".xyz") {
      files.push_back(entry.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

/// Clean clouds of a dataset split, sorted by filename.
inline std::vector<PointCloud> load_split(const std::string& data_dir, const std::string& split,
                                          int expected_points) {
  namespace fs = std::filesystem;
  const fs::path sub = fs::path(data_dir) / split;
  const std::string dir = fs::is_directory(sub) ? sub.string() : data_dir;
  const auto files = list_xyz_files(dir);
  if (files.empty()) throw ConfigError("no .xyz files found under " + dir);
  std::vector<PointCloud> clouds;
  for (const auto& f : files) {
    PointCloud c = load_cloud(f);
    if (expected_points > 0 && static_cast<int>(c.size()) != expected_points) {
      throw ConfigError("cloud " + f + " has " + std::to_string(c.size()) +
                        " points, config expects n_total=" + std::to_string(expected_points));
    }
    clouds.push_back(std::move(c));
  }
  return clouds;
}

inline std::vector<RegistrationPair> build_pairs(const std::vector<PointCloud>& clean,
                                                 const CorruptionConfig& cfg, std::uint64_t seed) {
  Rng root(seed);
  std::vector<RegistrationPair> pairs;
  pairs.reserve(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    Rng stream = root.substream(i);
    pairs.push_back(make_pair(clean[i], cfg, stream));
  }
  return pairs;
}

inline nlohmann::json transform_to_json(const RigidTransform& t) {
  nlohmann::json rot = nlohmann::json::array();
  for (int r = 0; r < 3; ++r) {
    rot.push_back({t.rotation(r, 0), t.rotation(r, 1), t.rotation(r, 2)});
  }
  const EulerAngles e = rotation_to_euler(t.rotation);
  return {{"rotation", rot},
          {"translation", {t.translation.x(), t.translation.y(), t.translation.z()}},
          {"euler_deg", {rad_to_deg(e.x), rad_to_deg(e.y), rad_to_deg(e.z)}}};
}

inline RigidTransform transform_from_json(const nlohmann::json& j) {
  RigidTransform t;
  const auto& rot = j.at("rotation");
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) t.rotation(r, c) = rot.at(r).at(c).get<double>();
  }
  const auto& tr = j.at("translation");
  for (int k = 0; k < 3; ++k) t.translation[k] = tr.at(k).get<double>();
  if (!is_rotation_matrix(t.rotation)) {
    throw InvalidInput("transform JSON: rotation is not orthonormal with det +1");
  }
  return t;
}

inline void write_text(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open output file " + path);
  os << content;
  if (!os) throw IoError("write failed for " + path);
}

// --- subcommand bodies -------------------------------------------------------

struct GenerateArgs {
  std::string out;
  std::uint64_t seed = 0;
  int train_count = 8;
  int test_count = 32;
  int points = 2048;
};

inline int run_generate(const GenerateArgs& args) {
  namespace fs = std::filesystem;
  if (args.points < 1 || args.train_count < 0 || args.test_count < 0) {
    throw ConfigError("generate: counts must be non-negative and points >= 1");
  }
  Rng root(args.seed);
  const auto write_split = [&](const std::string& split, int count, std::uint64_t base) {
    const fs::path dir = fs::path(args.out) / split;
    fs::create_directories(dir);
    for (int i = 0; i < count; ++i) {
      const ShapeKind kind = kAllShapeKinds[static_cast<std::size_t>(i) % kAllShapeKinds.size()];
      const std::uint64_t shape_seed = root.substream(base + static_cast<std::uint64_t>(i)).seed();
      const PointCloud cloud = generate_shape(kind, args.points, shape_seed);
      char name[64];
      std::snprintf(name, sizeof name, "%03d-%s.xyz", i, to_string(kind));
      save_cloud(cloud, (dir / name).string());
    }
  };
  write_split("train", args.train_count, 0);
  write_split("test", args.test_count, 1u << 20);
  return 0;
}

struct TrainArgs {
  std::string config_path;
  std::string data_dir;
  std::string checkpoint_out;
  std::string log_path;
  std::string init_checkpoint;
  std::optional<std::uint64_t> seed;
  int eval_every = 0;
};

inline int run_train(const TrainArgs& args) {
  RunConfig cfg = args.config_path.empty() ? RunConfig{} : load_run_config(args.config_path);
  if (!args.data_dir.empty()) cfg.paths.data = args.data_dir;
  if (!args.checkpoint_out.empty()) cfg.paths.checkpoint = args.checkpoint_out;
  if (!args.log_path.empty()) cfg.paths.log = args.log_path;
  if (args.seed) cfg.seed = *args.seed;
  if (cfg.paths.data.empty()) throw ConfigError("train: no dataset directory (--data or paths.data)");
  if (cfg.paths.checkpoint.empty()) cfg.paths.checkpoint = "agent.ragt";

  const std::vector<PointCloud> dataset = load_split(cfg.paths.data, "train", cfg.data.n_total);

  std::optional<AgentParams> start;
  if (!args.init_checkpoint.empty()) {
    start = load_checkpoint(args.init_checkpoint);
    cfg.model = start->config;  // fine-tuning keeps the checkpoint architecture
  }

  std::vector<RegistrationPair> eval_pairs;
  if (args.eval_every > 0) {
    const auto eval_clouds = load_split(cfg.paths.data, "test", cfg.data.n_total);
    eval_pairs = build_pairs(eval_clouds, cfg.data, Rng(cfg.seed).substream(1001).seed());
  }

  std::ofstream log;
  if (!cfg.paths.log.empty()) {
    log.open(cfg.paths.log, std::ios::binary);
    if (!log) throw IoError("cannot open log file " + cfg.paths.log);
  }

  EvalOptions eval_opts;
  eval_opts.env = cfg.env_config();
  eval_opts.icp = cfg.icp;
  eval_opts.n_steps = cfg.train.n_steps;

  const auto on_epoch = [&](const EpochStats& stats, const AgentParams& params) {
    if (!log.is_open()) return;
    nlohmann::json j;
    j["epoch"] = stats.epoch;
    j["lr"] = stats.lr;
    j["bc_loss"] = stats.bc_loss;
    j["ppo_loss"] = stats.ppo_loss;
    j["mean_reward"] = stats.mean_reward;
    j["expert_agreement"] = stats.expert_agreement;
    if (args.eval_every > 0 && (stats.epoch + 1) % args.eval_every == 0) {
      nlohmann::json e;
      e["agreement"] = heldout_agreement(params, eval_pairs, eval_opts);
      e["mean_reward"] = mean_episode_reward(params, eval_pairs, eval_opts);
      e["modified_chamfer"] = mean_final_modified_chamfer(eval_pairs, [&](const RegistrationPair& p) {
        return run_agent_episode(p.source, p.target, params, eval_opts, false, nullptr).estimate();
      });
      j["eval"] = e;
    } else {
      j["eval"] = nullptr;
    }
    log << j.dump() << "\n";
  };

  const AgentParams params = train_run(dataset, cfg.train_setup(), std::move(start), on_epoch);
  save_checkpoint(params, cfg.paths.checkpoint);
  return 0;
}

struct EvalArgs {
  std::string config_path;
  std::string data_dir;
  std::string methods = "icp,expert";
  std::string checkpoint;
  std::string out_csv;
  std::optional<std::uint64_t> seed;
};

inline int run_eval(const EvalArgs& args) {
  RunConfig cfg = args.config_path.empty() ? RunConfig{} : load_run_config(args.config_path);
  if (!args.data_dir.empty()) cfg.paths.data = args.data_dir;
  if (args.seed) cfg.seed = *args.seed;
  if (!args.checkpoint.empty()) cfg.paths.checkpoint = args.checkpoint;
  if (cfg.paths.data.empty()) throw ConfigError("eval: no dataset directory (--data or paths.data)");

  const auto clouds = load_split(cfg.paths.data, "test", cfg.data.n_total);
  const auto pairs = build_pairs(clouds, cfg.data, cfg.seed);

  std::vector<Method> methods;
  for (const auto& name : split_csv(args.methods)) methods.push_back(method_from_string(name));

  std::optional<AgentParams> params;
  const bool needs_agent = std::any_of(methods.begin(), methods.end(), [](Method m) {
    return m == Method::kAgent || m == Method::kAgentArgmax;
  });
  if (needs_agent) {
    if (cfg.paths.checkpoint.empty()) throw ConfigError("eval: agent methods need --ckpt");
    params = load_checkpoint(cfg.paths.checkpoint);
  }

  EvalOptions opts;
  opts.env = cfg.env_config();
  opts.icp = cfg.icp;
  opts.n_steps = cfg.train.n_steps;

  std::string csv =
      "method,mae_r,mae_t,iso_r,iso_t,adi_auc,modified_chamfer,ms_per_registration\n";
  for (const Method m : methods) {
    Rng rng(Rng::splitmix64(cfg.seed ^ 0x5EEDu));
    const EvalRow row = evaluate_method(m, pairs, params ? &*params : nullptr, opts, rng);
    csv += csv_field(row.method);
    for (const double v : {row.mae_r, row.mae_t, row.iso_r, row.iso_t, row.adi_auc,
                           row.modified_chamfer}) {
      csv += "," + fmt_double(v);
    }
    csv += "," + fmt_double(row.ms_per_registration) + "\n";
  }
  write_text(args.out_csv, csv);
  return 0;
}

struct RegisterArgs {
  std::string config_path;
  std::string source_path;
  std::string target_path;
  std::string checkpoint;
  std::string out_path;
  int steps = 10;
};

inline int run_register(const RegisterArgs& args) {
  RunConfig cfg = args.config_path.empty() ? RunConfig{} : load_run_config(args.config_path);
  const PointCloud source = load_cloud(args.source_path);
  const PointCloud target = load_cloud(args.target_path);
  const AgentParams params = load_checkpoint(args.checkpoint);
  EvalOptions opts;
  opts.env = cfg.env_config();
  opts.n_steps = args.steps;
  const Episode ep = run_agent_episode(source, target, params, opts, false, nullptr);
  write_text(args.out_path, transform_to_json(ep.estimate()).dump() + "\n");
  return 0;
}

struct TraceArgs {
  std::string config_path;
  std::string source_path;
  std::string target_path;
  std::string checkpoint;
  std::string truth_path;
  std::string out_path;
  int steps = 10;
};

inline int run_trace(const TraceArgs& args) {
  RunConfig cfg = args.config_path.empty() ? RunConfig{} : load_run_config(args.config_path);
  const PointCloud source = load_cloud(args.source_path);
  const PointCloud target = load_cloud(args.target_path);
  const AgentParams params = load_checkpoint(args.checkpoint);

  std::optional<RigidTransform> truth;
  if (!args.truth_path.empty()) {
    std::ifstream is(args.truth_path);
    if (!is) throw IoError("cannot open truth file " + args.truth_path);
    nlohmann::json j;
    try {
      is >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("truth JSON parse error: ") + e.what());
    }
    truth = transform_from_json(j);
  }

  EnvConfig env_cfg = cfg.env_config();
  env_cfg.n_max = args.steps;
  Episode ep(source, target, truth, env_cfg);

  std::string out;
  while (!ep.done()) {
    const PolicyOutput policy = forward(ep.current_source(), ep.target(), params);
    const ActionVector action = argmax_action(policy);
    TraceRecord rec;
    ep.step(action, &rec);
    nlohmann::json j = to_json(rec);
    const auto probs = action_probabilities(policy);
    nlohmann::json rot = nlohmann::json::array(), trans = nlohmann::json::array();
    for (int axis = 0; axis < 3; ++axis) {
      nlohmann::json r = nlohmann::json::array(), t = nlohmann::json::array();
      for (int k = 0; k < StepTable::kNumSteps; ++k) {
        r.push_back(probs[static_cast<std::size_t>(axis)][k]);
        t.push_back(probs[static_cast<std::size_t>(axis + 3)][k]);
      }
      rot.push_back(r);
      trans.push_back(t);
    }
    j["policy"] = {{"rot", rot}, {"trans", trans}};
    j["value"] = policy.value;
    out += j.dump() + "\n";
  }
  write_text(args.out_path, out);
  return 0;
}

}  // namespace cli_detail

/// Entry point shared by the binary and the tests. `args` excludes argv[0].
inline int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Iterative point cloud registration agent toolkit"};
  app.require_subcommand(1);

  cli_detail::GenerateArgs gen;
  auto* c_gen = app.add_subcommand("generate", "Write a procedural shape dataset");
  c_gen->add_option("--out", gen.out, "Output dataset directory")->required();
  c_gen->add_option("--seed", gen.seed, "Master seed");
  c_gen->add_option("--train", gen.train_count, "Number of training shapes");
  c_gen->add_option("--test", gen.test_count, "Number of test shapes");
  c_gen->add_option("--points", gen.points, "Points per cloud");

  cli_detail::TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Train the registration agent");
  c_train->add_option("--config", train.config_path, "JSON run configuration");
  c_train->add_option("--data", train.data_dir, "Dataset directory (train/ split)");
  c_train->add_option("--out", train.checkpoint_out, "Checkpoint output path");
  c_train->add_option("--log", train.log_path, "JSONL training log path");
  c_train->add_option("--init", train.init_checkpoint, "Checkpoint to fine-tune from");
  std::uint64_t train_seed = 0;
  auto* train_seed_opt = c_train->add_option("--seed", train_seed, "Seed override");
  c_train->add_option("--eval-every", train.eval_every, "Evaluate on the test split every N epochs");

  cli_detail::EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Evaluate methods on a dataset");
  c_eval->add_option("--config", ev.config_path, "JSON run configuration");
  c_eval->add_option("--data", ev.data_dir, "Dataset directory (test/ split)");
  c_eval->add_option("--methods", ev.methods, "Comma-separated: icp,expert,agent,agent-argmax");
  c_eval->add_option("--ckpt", ev.checkpoint, "Agent checkpoint");
  c_eval->add_option("--out", ev.out_csv, "CSV output path (stdout if omitted)");
  std::uint64_t eval_seed = 0;
  auto* eval_seed_opt = c_eval->add_option("--seed", eval_seed, "Seed override");

  cli_detail::RegisterArgs reg;
  auto* c_reg = app.add_subcommand("register", "Register one source onto one target");
  c_reg->add_option("--config", reg.config_path, "JSON run configuration");
  c_reg->add_option("--source", reg.source_path, "Source .xyz file")->required();
  c_reg->add_option("--target", reg.target_path, "Target .xyz file")->required();
  c_reg->add_option("--ckpt", reg.checkpoint, "Agent checkpoint")->required();
  c_reg->add_option("--steps", reg.steps, "Registration steps");
  c_reg->add_option("--out", reg.out_path, "Output JSON path (stdout if omitted)");

  cli_detail::TraceArgs trace;
  auto* c_trace = app.add_subcommand("trace", "Emit a per-step JSONL trajectory trace");
  c_trace->add_option("--config", trace.config_path, "JSON run configuration");
  c_trace->add_option("--source", trace.source_path, "Source .xyz file")->required();
  c_trace->add_option("--target", trace.target_path, "Target .xyz file")->required();
  c_trace->add_option("--ckpt", trace.checkpoint, "Agent checkpoint")->required();
  c_trace->add_option("--truth", trace.truth_path, "Ground-truth transform JSON (enables rewards)");
  c_trace->add_option("--steps", trace.steps, "Registration steps");
  c_trace->add_option("--out", trace.out_path, "Output JSONL path (stdout if omitted)");

  std::vector<const char*> argv;
  argv.push_back("pcreg");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*c_gen) return cli_detail::run_generate(gen);
    if (*c_train) {
      if (*train_seed_opt) train.seed = train_seed;
      return cli_detail::run_train(train);
    }
    if (*c_eval) {
      if (*eval_seed_opt) ev.seed = eval_seed;
      return cli_detail::run_eval(ev);
    }
    if (*c_reg) return cli_detail::run_register(reg);
    if (*c_trace) return cli_detail::run_trace(trace);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const InvalidState& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const InvalidInput& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const DegenerateInput& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const NoCorrespondences& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}

}  // namespace pcreg
