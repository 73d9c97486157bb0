#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pcreg/data.hpp"
#include "pcreg/env.hpp"
#include "pcreg/expert.hpp"
#include "pcreg/icp.hpp"
#include "pcreg/learn.hpp"
#include "pcreg/metrics.hpp"
#include "pcreg/model.hpp"

namespace pcreg {

enum class Method { kIcp, kExpert, kAgent, kAgentArgmax };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::kIcp: return "icp";
    case Method::kExpert: return "expert";
    case Method::kAgent: return "agent";
    case Method::kAgentArgmax: return "agent-argmax";
  }
  return "unknown";
}

inline Method method_from_string(const std::string& s) {
  for (const Method m : {Method::kIcp, Method::kExpert, Method::kAgent, Method::kAgentArgmax}) {
    if (s == to_string(m)) return m;
  }
  throw InvalidInput("unknown method: " + s);
}

struct EvalOptions {
  EnvConfig env;
  IcpConfig icp;
  int n_steps = 10;
};

/// Aggregate metrics of one method over a dataset. Means over pairs except
/// adi_auc (area under the dataset-level recall curve). Timing covers the
/// registration call only and is excluded from determinism guarantees.
struct EvalRow {
  std::string method;
  double mae_r = 0.0;
  double mae_t = 0.0;
  double iso_r = 0.0;
  double iso_t = 0.0;
  double adi_auc = 0.0;
  double modified_chamfer = 0.0;
  double ms_per_registration = 0.0;
};

/// Argmax (or sampled) agent rollout on one pair; no ground truth is
/// consulted. Returns the final episode.
inline Episode run_agent_episode(const PointCloud& source, const PointCloud& target,
                                 const AgentParams& params, const EvalOptions& opts, bool stochastic,
                                 Rng* rng) {
  EnvConfig cfg = opts.env;
  cfg.n_max = opts.n_steps;
  Episode ep(source, target, {}, cfg);
  while (!ep.done()) {
    const PolicyOutput out = forward(ep.current_source(), ep.target(), params);
    const ActionVector a = stochastic ? sample_action(out, *rng) : argmax_action(out);
    ep.step(a);
  }
  return ep;
}

/// Steady or greedy oracle rollout; requires the pair's ground truth.
inline Episode run_expert_episode(const RegistrationPair& pair, ExpertKind kind,
                                  const EvalOptions& opts) {
  EnvConfig cfg = opts.env;
  cfg.n_max = opts.n_steps;
  Episode ep(pair.source, pair.target, pair.truth, cfg);
  const RigidTransform goal = pair.goal();
  while (!ep.done()) {
    const ActionVector a =
        expert_action(kind, residual_for_mode(goal, ep.accumulator(), cfg.mode), cfg.table);
    ep.step(a);
  }
  return ep;
}

/// Registers every pair with one method and aggregates the metric table row.
inline EvalRow evaluate_method(Method method, const std::vector<RegistrationPair>& pairs,
                               const AgentParams* params, const EvalOptions& opts, Rng& rng) {
  if (pairs.empty()) throw InvalidInput("evaluate_method: empty dataset");
  if ((method == Method::kAgent || method == Method::kAgentArgmax) && params == nullptr) {
    throw InvalidInput("evaluate_method: agent methods need a checkpoint");
  }
  EvalRow row;
  row.method = to_string(method);
  std::vector<double> adi_normalized;
  adi_normalized.reserve(pairs.size());
  double total_ms = 0.0;

  for (const RegistrationPair& pair : pairs) {
    const auto t0 = std::chrono::steady_clock::now();
    RigidTransform est;
    switch (method) {
      case Method::kIcp:
        est = icp(pair.source, pair.target, opts.icp).transform;
        break;
      case Method::kExpert:
        est = run_expert_episode(pair, ExpertKind::kSteady, opts).estimate();
        break;
      case Method::kAgent:
        est = run_agent_episode(pair.source, pair.target, *params, opts, true, &rng).estimate();
        break;
      case Method::kAgentArgmax:
        est = run_agent_episode(pair.source, pair.target, *params, opts, false, nullptr).estimate();
        break;
    }
    total_ms += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                    .count();

    const RigidTransform goal = pair.goal();
    const auto [mr, mt] = mae(est, goal);
    const auto [ir, it] = iso(est, goal);
    row.mae_r += mr;
    row.mae_t += mt;
    row.iso_r += ir;
    row.iso_t += it;

    const PointCloud model_est = apply_rigid(pair.source_clean, est);
    const PointCloud model_true = apply_rigid(pair.source_clean, goal);
    const double d = diameter(model_true);
    adi_normalized.push_back(add_adi(model_est, model_true).second / d);

    const PointCloud registered = apply_rigid(pair.source, est);
    row.modified_chamfer +=
        modified_chamfer(registered, pair.target, model_est, pair.target_clean);
  }

  const double n = static_cast<double>(pairs.size());
  row.mae_r /= n;
  row.mae_t /= n;
  row.iso_r /= n;
  row.iso_t /= n;
  row.modified_chamfer /= n;
  row.adi_auc = adi_auc(adi_normalized, 1.0);
  row.ms_per_registration = total_ms / n;
  return row;
}

/// Per-axis rate at which the agent's argmax action matches the steady
/// expert along the agent's own argmax rollouts.
inline double heldout_agreement(const AgentParams& params, const std::vector<RegistrationPair>& pairs,
                                const EvalOptions& opts) {
  EnvConfig cfg = opts.env;
  cfg.n_max = opts.n_steps;
  std::int64_t hits = 0, total = 0;
  for (const RegistrationPair& pair : pairs) {
    Episode ep(pair.source, pair.target, pair.truth, cfg);
    const RigidTransform goal = pair.goal();
    while (!ep.done()) {
      const PolicyOutput out = forward(ep.current_source(), ep.target(), params);
      const ActionVector agent = argmax_action(out);
      const ActionVector label =
          expert_action(ExpertKind::kSteady, residual_for_mode(goal, ep.accumulator(), cfg.mode),
                        cfg.table);
      for (int axis = 0; axis < 3; ++axis) {
        hits += agent.rot[static_cast<std::size_t>(axis)] == label.rot[static_cast<std::size_t>(axis)];
        hits += agent.trans[static_cast<std::size_t>(axis)] ==
                label.trans[static_cast<std::size_t>(axis)];
        total += 2;
      }
      ep.step(agent);
    }
  }
  return total > 0 ? static_cast<double>(hits) / static_cast<double>(total) : 0.0;
}

/// Mean total episode reward of argmax rollouts (ground truth required).
inline double mean_episode_reward(const AgentParams& params,
                                  const std::vector<RegistrationPair>& pairs,
                                  const EvalOptions& opts) {
  EnvConfig cfg = opts.env;
  cfg.n_max = opts.n_steps;
  double total = 0.0;
  for (const RegistrationPair& pair : pairs) {
    Episode ep(pair.source, pair.target, pair.truth, cfg);
    while (!ep.done()) {
      const PolicyOutput out = forward(ep.current_source(), ep.target(), params);
      const auto result = ep.step(argmax_action(out));
      total += result.reward.value_or(0.0);
    }
  }
  return total / static_cast<double>(pairs.size());
}

/// Mean final modified Chamfer distance of a rollout policy over pairs.
inline double mean_final_modified_chamfer(const std::vector<RegistrationPair>& pairs,
                                          const std::function<RigidTransform(const RegistrationPair&)>& reg) {
  double total = 0.0;
  for (const RegistrationPair& pair : pairs) {
    const RigidTransform est = reg(pair);
    total += modified_chamfer(apply_rigid(pair.source, est), pair.target,
                              apply_rigid(pair.source_clean, est), pair.target_clean);
  }
  return total / static_cast<double>(pairs.size());
}

}  // namespace pcreg
