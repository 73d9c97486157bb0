#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "pcreg/data.hpp"
#include "pcreg/env.hpp"
#include "pcreg/expert.hpp"
#include "pcreg/metrics.hpp"
#include "pcreg/model.hpp"

namespace pcreg {

/// Training hyperparameters. Defaults are the reference settings: 10-step
/// episodes, 4 trajectories per observation, gamma 0.99, GAE lambda 0.95,
/// RL loss scaled by alpha = 2, batches of 32, lr 1e-3 halved every 10
/// epochs.
struct TrainConfig {
  int n_steps = 10;
  int n_trajectories = 4;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double alpha = 2.0;
  double clip_ratio = 0.2;
  double entropy_coeff = 0.01;
  double value_coeff = 0.5;
  int batch_observations = 32;
  int batch_records = 32;
  double lr = 1e-3;
  int lr_halve_every = 10;
  int epochs = 50;
  bool augment = true;

  double lr_at(int epoch) const {
    return lr * std::pow(0.5, static_cast<double>(epoch / lr_halve_every));
  }

  void validate() const {
    if (gamma <= 0.0 || gamma > 1.0) throw InvalidInput("TrainConfig: gamma not in (0, 1]");
    if (gae_lambda <= 0.0 || gae_lambda > 1.0) throw InvalidInput("TrainConfig: lambda not in (0, 1]");
    if (alpha < 0.0) throw InvalidInput("TrainConfig: alpha must be >= 0");
    if (clip_ratio <= 0.0 || clip_ratio >= 1.0) throw InvalidInput("TrainConfig: clip_ratio not in (0, 1)");
    if (n_steps < 1 || n_trajectories < 1 || batch_observations < 1 || batch_records < 1 ||
        epochs < 0 || lr_halve_every < 1 || lr <= 0.0) {
      throw InvalidInput("TrainConfig: non-positive size or rate");
    }
  }
};

/// One registration problem handed to the gatherer. `truth` is the
/// corrupting transform, as produced by make_pair.
struct Observation {
  PointCloud source;
  PointCloud target;
  RigidTransform truth;
};

/// One step of one gathered trajectory.
struct BufferRecord {
  PointCloud source;  // observed source at decision time
  std::shared_ptr<const PointCloud> target;
  ActionVector expert_action;
  ActionVector agent_action;
  double old_logp = 0.0;
  double old_value = 0.0;
  double reward = 0.0;
  double return_ = 0.0;
  double advantage = 0.0;
};

struct ReplayBuffer {
  std::vector<BufferRecord> records;
  double gather_agreement = 0.0;  // per-axis argmax-vs-expert rate at gather time
  double mean_reward = 0.0;
};

/// Discounted returns and raw GAE advantages for one trajectory, with a
/// terminal bootstrap value of zero. Buffer-level normalization happens in
/// normalize_advantages.
inline std::pair<std::vector<double>, std::vector<double>> returns_and_gae(
    const std::vector<double>& rewards, const std::vector<double>& values,
    const TrainConfig& cfg) {
  if (rewards.size() != values.size()) throw InvalidInput("returns_and_gae: length mismatch");
  const std::size_t n = rewards.size();
  std::vector<double> returns(n, 0.0), advantages(n, 0.0);
  double next_return = 0.0, next_value = 0.0, next_adv = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    next_return = rewards[t] + cfg.gamma * next_return;
    returns[t] = next_return;
    const double delta = rewards[t] + cfg.gamma * next_value - values[t];
    next_adv = delta + cfg.gamma * cfg.gae_lambda * next_adv;
    advantages[t] = next_adv;
    next_value = values[t];
  }
  return {returns, advantages};
}

/// Rescales advantages to zero mean and unit variance across the buffer.
inline void normalize_advantages(ReplayBuffer& buffer) {
  if (buffer.records.empty()) return;
  double mean = 0.0;
  for (const auto& r : buffer.records) mean += r.advantage;
  mean /= static_cast<double>(buffer.records.size());
  double var = 0.0;
  for (const auto& r : buffer.records) var += (r.advantage - mean) * (r.advantage - mean);
  var /= static_cast<double>(buffer.records.size());
  const double denom = std::sqrt(var) + 1e-8;
  for (auto& r : buffer.records) r.advantage = (r.advantage - mean) / denom;
}

/// Behavioral-cloning loss: cross-entropy against the expert action,
/// summed over the six axes.
inline double bc_loss(const PolicyOutput& out, const ActionVector& expert) {
  return -log_prob_entropy(out, expert).first;
}

enum class LossKind { kBc, kPpo, kCombined };

/// Clipped-PPO loss for one record: policy surrogate with ratio clipping,
/// squared value regression scaled by value_coeff, minus the entropy bonus.
inline double ppo_loss(const PolicyOutput& out, const BufferRecord& rec, const TrainConfig& cfg) {
  const auto [new_logp, entropy] = log_prob_entropy(out, rec.agent_action);
  const double ratio = std::exp(new_logp - rec.old_logp);
  if (!std::isfinite(ratio)) throw NumericalError("ppo_loss: non-finite policy ratio");
  const double unclipped = ratio * rec.advantage;
  const double clipped = std::clamp(ratio, 1.0 - cfg.clip_ratio, 1.0 + cfg.clip_ratio) * rec.advantage;
  const double value_err = out.value - rec.return_;
  return -std::min(unclipped, clipped) + cfg.value_coeff * value_err * value_err -
         cfg.entropy_coeff * entropy;
}

namespace detail {

inline AxisDistribution softmax_row(const Eigen::Matrix<double, 1, StepTable::kNumSteps>& row) {
  return log_softmax_row(row).array().exp();
}

// d(cross-entropy)/d(logits) for one head: softmax - onehot per axis.
inline void add_bc_grads(const PolicyOutput& out, const ActionVector& expert, double weight,
                         OutputGrads& g) {
  for (int axis = 0; axis < 3; ++axis) {
    const AxisDistribution pr = softmax_row(out.rot_logits.row(axis));
    const AxisDistribution pt = softmax_row(out.trans_logits.row(axis));
    g.rot.row(axis) += weight * pr.transpose();
    g.trans.row(axis) += weight * pt.transpose();
    g.rot(axis, expert.rot[static_cast<std::size_t>(axis)]) -= weight;
    g.trans(axis, expert.trans[static_cast<std::size_t>(axis)]) -= weight;
  }
}

inline void add_ppo_grads(const PolicyOutput& out, const BufferRecord& rec, const TrainConfig& cfg,
                          double weight, OutputGrads& g) {
  const auto [new_logp, entropy] = log_prob_entropy(out, rec.agent_action);
  (void)entropy;
  const double ratio = std::exp(new_logp - rec.old_logp);
  if (!std::isfinite(ratio)) throw NumericalError("ppo gradient: non-finite policy ratio");
  const double unclipped = ratio * rec.advantage;
  const double clipped =
      std::clamp(ratio, 1.0 - cfg.clip_ratio, 1.0 + cfg.clip_ratio) * rec.advantage;
  // When the clipped branch is active the surrogate is locally constant.
  const double dlogp = unclipped <= clipped ? -ratio * rec.advantage : 0.0;

  for (int axis = 0; axis < 3; ++axis) {
    const AxisDistribution pr = softmax_row(out.rot_logits.row(axis));
    const AxisDistribution pt = softmax_row(out.trans_logits.row(axis));
    if (dlogp != 0.0) {
      // dlogp/dz = onehot(a) - p
      g.rot.row(axis) += weight * dlogp * (-pr.transpose());
      g.trans.row(axis) += weight * dlogp * (-pt.transpose());
      g.rot(axis, rec.agent_action.rot[static_cast<std::size_t>(axis)]) += weight * dlogp;
      g.trans(axis, rec.agent_action.trans[static_cast<std::size_t>(axis)]) += weight * dlogp;
    }
    // -entropy_coeff * H: dH/dz = -p (log p + H_axis)
    const auto ent_grad = [&](const AxisDistribution& p) {
      const AxisDistribution logp = p.array().max(1e-300).log();
      const double h = -(p.array() * logp.array()).sum();
      return (p.array() * (logp.array() + h)).matrix().eval();
    };
    g.rot.row(axis) += weight * cfg.entropy_coeff * ent_grad(pr).transpose();
    g.trans.row(axis) += weight * cfg.entropy_coeff * ent_grad(pt).transpose();
  }
  g.value += weight * 2.0 * cfg.value_coeff * (out.value - rec.return_);
}

}  // namespace detail

struct LossValues {
  double bc = 0.0;
  double ppo = 0.0;
  double combined = 0.0;
};

/// Mean loss over a batch of records plus exact analytic gradients for the
/// requested loss, averaged the same way.
inline std::pair<LossValues, AgentParams> gradients(const std::vector<const BufferRecord*>& batch,
                                                    const AgentParams& params, LossKind kind,
                                                    const TrainConfig& cfg) {
  if (batch.empty()) throw InvalidInput("gradients: empty batch");
  AgentParams grads = zeros_like(params);
  LossValues losses;
  const double w = 1.0 / static_cast<double>(batch.size());
  for (const BufferRecord* rec : batch) {
    ForwardTrace trace;
    const PolicyOutput out = forward(rec->source, *rec->target, params, &trace);
    OutputGrads out_grads;
    const double l_bc = bc_loss(out, rec->expert_action);
    const double l_ppo = ppo_loss(out, *rec, cfg);
    losses.bc += w * l_bc;
    losses.ppo += w * l_ppo;
    switch (kind) {
      case LossKind::kBc:
        detail::add_bc_grads(out, rec->expert_action, w, out_grads);
        break;
      case LossKind::kPpo:
        detail::add_ppo_grads(out, *rec, cfg, w, out_grads);
        break;
      case LossKind::kCombined:
        detail::add_bc_grads(out, rec->expert_action, w, out_grads);
        detail::add_ppo_grads(out, *rec, cfg, w * cfg.alpha, out_grads);
        break;
    }
    backward(params, trace, out_grads, grads);
  }
  losses.combined = losses.bc + cfg.alpha * losses.ppo;
  if (!std::isfinite(losses.combined)) throw NumericalError("gradients: non-finite loss");
  return {losses, grads};
}

/// Scalar loss only (shared path with `gradients`), for finite-difference
/// verification.
inline double loss_value(const std::vector<const BufferRecord*>& batch, const AgentParams& params,
                         LossKind kind, const TrainConfig& cfg) {
  if (batch.empty()) throw InvalidInput("loss_value: empty batch");
  double total = 0.0;
  const double w = 1.0 / static_cast<double>(batch.size());
  for (const BufferRecord* rec : batch) {
    const PolicyOutput out = forward(rec->source, *rec->target, params);
    switch (kind) {
      case LossKind::kBc:
        total += w * bc_loss(out, rec->expert_action);
        break;
      case LossKind::kPpo:
        total += w * ppo_loss(out, *rec, cfg);
        break;
      case LossKind::kCombined:
        total += w * (bc_loss(out, rec->expert_action) + cfg.alpha * ppo_loss(out, *rec, cfg));
        break;
    }
  }
  return total;
}

// --- optimizer ---------------------------------------------------------------

/// Adam with the AMSGrad max-of-second-moments correction.
struct AdamState {
  AgentParams m, v, vhat;
  std::int64_t t = 0;

  explicit AdamState(const AgentConfig& config)
      : m(zeros_like_structure(config)), v(zeros_like_structure(config)),
        vhat(zeros_like_structure(config)) {}
};

inline void adam_step(AgentParams& params, const AgentParams& grads, AdamState& state, double lr,
                      double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
  ++state.t;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  auto ps = params.layers();
  auto gs = grads.layers();
  auto ms = state.m.layers();
  auto vs = state.v.layers();
  auto hs = state.vhat.layers();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const auto update = [&](auto&& p, const auto& g, auto&& m, auto&& v, auto&& h) {
      m = beta1 * m + (1.0 - beta1) * g;
      v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
      h = h.cwiseMax(v);
      p -= lr * (m / bc1).cwiseQuotient(((h / bc2).cwiseSqrt().array() + eps).matrix());
    };
    update(ps[i]->weight, gs[i]->weight, ms[i]->weight, vs[i]->weight, hs[i]->weight);
    update(ps[i]->bias, gs[i]->bias, ms[i]->bias, vs[i]->bias, hs[i]->bias);
  }
}

// --- gathering and updates ---------------------------------------------------

/// Rolls out n_trajectories stochastic-policy episodes per observation and
/// records per-step supervision: expert label, sampled action, old policy
/// log-probability, value, reward, then discounted returns and normalized
/// GAE advantages. Buffer size is |observations| * n_trajectories * n_steps.
inline ReplayBuffer gather(const std::vector<Observation>& observations, const AgentParams& params,
                           const TrainConfig& cfg, const EnvConfig& env_cfg, ExpertKind expert,
                           Rng& rng) {
  ReplayBuffer buffer;
  buffer.records.reserve(observations.size() * static_cast<std::size_t>(cfg.n_trajectories) *
                         static_cast<std::size_t>(cfg.n_steps));
  Rng stream_root(rng.next_u64());
  std::int64_t agree_hits = 0, agree_total = 0;
  double reward_sum = 0.0;

  EnvConfig episode_cfg = env_cfg;
  episode_cfg.n_max = cfg.n_steps;

  std::uint64_t traj_index = 0;
  for (const Observation& obs : observations) {
    const auto target = std::make_shared<const PointCloud>(obs.target);
    const RigidTransform goal = obs.truth.inverse();
    for (int traj = 0; traj < cfg.n_trajectories; ++traj, ++traj_index) {
      Rng traj_rng = stream_root.substream(traj_index);
      Episode ep(obs.source, obs.target, obs.truth, episode_cfg);
      std::vector<double> rewards, values;
      const std::size_t first_record = buffer.records.size();
      for (int s = 0; s < cfg.n_steps; ++s) {
        const PolicyOutput out = forward(ep.current_source(), *target, params);
        BufferRecord rec;
        rec.source = ep.current_source();
        rec.target = target;
        rec.expert_action = expert_action(
            expert, residual_for_mode(goal, ep.accumulator(), episode_cfg.mode), episode_cfg.table);
        rec.agent_action = sample_action(out, traj_rng);
        rec.old_logp = log_prob_entropy(out, rec.agent_action).first;
        rec.old_value = out.value;

        const ActionVector greedy_pick = argmax_action(out);
        for (int axis = 0; axis < 3; ++axis) {
          agree_hits += greedy_pick.rot[static_cast<std::size_t>(axis)] ==
                                rec.expert_action.rot[static_cast<std::size_t>(axis)]
                            ? 1
                            : 0;
          agree_hits += greedy_pick.trans[static_cast<std::size_t>(axis)] ==
                                rec.expert_action.trans[static_cast<std::size_t>(axis)]
                            ? 1
                            : 0;
          agree_total += 2;
        }

        const auto result = ep.step(rec.agent_action);
        rec.reward = result.reward.value_or(0.0);
        reward_sum += rec.reward;
        rewards.push_back(rec.reward);
        values.push_back(rec.old_value);
        buffer.records.push_back(std::move(rec));
      }
      const auto [returns, advantages] = returns_and_gae(rewards, values, cfg);
      for (std::size_t s = 0; s < returns.size(); ++s) {
        buffer.records[first_record + s].return_ = returns[s];
        buffer.records[first_record + s].advantage = advantages[s];
      }
    }
  }
  normalize_advantages(buffer);
  buffer.gather_agreement =
      agree_total > 0 ? static_cast<double>(agree_hits) / static_cast<double>(agree_total) : 0.0;
  buffer.mean_reward =
      buffer.records.empty() ? 0.0 : reward_sum / static_cast<double>(buffer.records.size());
  return buffer;
}

struct UpdateStats {
  double bc_loss = 0.0;
  double ppo_loss = 0.0;
  double mean_reward = 0.0;
  double expert_agreement = 0.0;
  int batches = 0;
};

/// One pass over the shuffled buffer in minibatches of batch_records,
/// stepping the parameters with Adam/AMSGrad on the combined loss
/// l = l_BC + alpha * l_PPO. Clears the buffer afterwards.
inline UpdateStats update_epoch(ReplayBuffer& buffer, AgentParams& params, AdamState& opt,
                                const TrainConfig& cfg, Rng& rng, double lr) {
  UpdateStats stats;
  stats.mean_reward = buffer.mean_reward;
  stats.expert_agreement = buffer.gather_agreement;
  if (buffer.records.empty()) return stats;
  const std::vector<int> order = rng.permutation(static_cast<int>(buffer.records.size()));
  double loss_weight_total = 0.0;
  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_records)) {
    const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_records));
    std::vector<const BufferRecord*> batch;
    batch.reserve(end - start);
    for (std::size_t i = start; i < end; ++i) {
      batch.push_back(&buffer.records[static_cast<std::size_t>(order[i])]);
    }
    const auto [losses, grads] = gradients(batch, params, LossKind::kCombined, cfg);
    adam_step(params, grads, opt, lr);
    const double bw = static_cast<double>(batch.size());
    stats.bc_loss += losses.bc * bw;
    stats.ppo_loss += losses.ppo * bw;
    loss_weight_total += bw;
    ++stats.batches;
  }
  stats.bc_loss /= loss_weight_total;
  stats.ppo_loss /= loss_weight_total;
  buffer.records.clear();
  return stats;
}

// --- affine data augmentation ------------------------------------------------

/// One affine shape perturbation: scale ~ N(1, 0.1) clipped to [0.5, 1.5],
/// shear along a uniform direction by an angle ~ N(0, 5 deg) clipped to
/// +-15 deg, and mirroring about a plane with uniform normal through the
/// anchor. Applied identically to both clouds of a pair, before the pose
/// offset, so it perturbs shape but not the ground-truth pose.
struct AugmentParams {
  double scale = 1.0;
  Vec3 shear_dir = Vec3::UnitX();
  Vec3 shear_normal = Vec3::UnitY();
  double shear_angle = 0.0;  // radians
  bool mirror = false;
  Vec3 mirror_normal = Vec3::UnitZ();
  Vec3 anchor = Vec3::Zero();
};

inline AugmentParams draw_augment(Rng& rng, const Vec3& anchor) {
  AugmentParams p;
  p.anchor = anchor;
  p.scale = std::clamp(rng.normal(1.0, 0.1), 0.5, 1.5);
  p.shear_dir = rng.unit_vector();
  for (;;) {
    Vec3 v = rng.unit_vector();
    v -= v.dot(p.shear_dir) * p.shear_dir;
    const double n = v.norm();
    if (n > 1e-6) {
      p.shear_normal = v / n;
      break;
    }
  }
  p.shear_angle = std::clamp(rng.normal(0.0, deg_to_rad(5.0)), -deg_to_rad(15.0), deg_to_rad(15.0));
  p.mirror = true;
  p.mirror_normal = rng.unit_vector();
  return p;
}

inline PointCloud apply_augment(const PointCloud& cloud, const AugmentParams& p) {
  const double shear = std::tan(p.shear_angle);
  PointCloud out;
  out.reserve(cloud.size());
  for (const Vec3& q : cloud) {
    Vec3 x = p.anchor + p.scale * (q - p.anchor);
    x += shear * p.shear_normal.dot(x - p.anchor) * p.shear_dir;
    if (p.mirror) x -= 2.0 * p.mirror_normal.dot(x - p.anchor) * p.mirror_normal;
    out.push_back(x);
  }
  return out;
}

/// Draws one perturbation (anchored at the target centroid) and applies it
/// to both clouds.
inline std::pair<PointCloud, PointCloud> augment(const PointCloud& source_clean,
                                                 const PointCloud& target, Rng& rng) {
  const AugmentParams p = draw_augment(rng, centroid(target));
  return {apply_augment(source_clean, p), apply_augment(target, p)};
}

// --- training loop -----------------------------------------------------------

struct TrainSetup {
  TrainConfig train;
  CorruptionConfig corruption;
  EnvConfig env;
  AgentConfig model;
  ExpertKind expert = ExpertKind::kSteady;
  std::uint64_t seed = 0;
};

struct EpochStats {
  int epoch = 0;
  double lr = 0.0;
  double bc_loss = 0.0;
  double ppo_loss = 0.0;
  double mean_reward = 0.0;
  double expert_agreement = 0.0;
};

/// Builds one epoch's observations for a chunk of clean shapes: fresh
/// subsample/jitter, optional shared affine augmentation, fresh pose.
inline std::vector<Observation> make_observations(const std::vector<PointCloud>& clean_chunk,
                                                  const CorruptionConfig& corruption, bool augment_on,
                                                  Rng& rng) {
  std::vector<Observation> obs;
  obs.reserve(clean_chunk.size());
  for (const PointCloud& clean : clean_chunk) {
    PairParts parts = make_pair_parts(clean, corruption, rng);
    if (augment_on) {
      const AugmentParams ap = draw_augment(rng, centroid(parts.target));
      parts.source = apply_augment(parts.source, ap);
      parts.target = apply_augment(parts.target, ap);
      parts.source_clean = apply_augment(parts.source_clean, ap);
      parts.target_clean = apply_augment(parts.target_clean, ap);
    }
    const RigidTransform pose = draw_pose(corruption, rng);
    RegistrationPair pair = finish_pair(std::move(parts), pose, corruption, rng);
    obs.push_back({std::move(pair.source), std::move(pair.target), pair.truth});
  }
  return obs;
}

/// Full training run over the clean-shape dataset: per epoch, gather a
/// replay buffer per chunk of batch_observations shapes and update on it.
/// Deterministic for a fixed (setup.seed, dataset order).
inline AgentParams train_run(
    const std::vector<PointCloud>& dataset, const TrainSetup& setup,
    std::optional<AgentParams> start = {},
    const std::function<void(const EpochStats&, const AgentParams&)>& on_epoch = {}) {
  setup.train.validate();
  if (dataset.empty()) throw InvalidInput("train_run: empty dataset");
  AgentParams params = start ? std::move(*start) : init_params(setup.model, setup.seed);
  AdamState opt(params.config);
  Rng master(setup.seed);

  for (int epoch = 0; epoch < setup.train.epochs; ++epoch) {
    Rng epoch_rng = master.substream(static_cast<std::uint64_t>(epoch));
    const double lr = setup.train.lr_at(epoch);
    EpochStats stats;
    stats.epoch = epoch;
    stats.lr = lr;
    double weight_total = 0.0;
    for (std::size_t start_idx = 0; start_idx < dataset.size();
         start_idx += static_cast<std::size_t>(setup.train.batch_observations)) {
      const std::size_t end_idx = std::min(
          dataset.size(), start_idx + static_cast<std::size_t>(setup.train.batch_observations));
      const std::vector<PointCloud> chunk(dataset.begin() + static_cast<std::ptrdiff_t>(start_idx),
                                          dataset.begin() + static_cast<std::ptrdiff_t>(end_idx));
      const std::vector<Observation> observations =
          make_observations(chunk, setup.corruption, setup.train.augment, epoch_rng);
      ReplayBuffer buffer =
          gather(observations, params, setup.train, setup.env, setup.expert, epoch_rng);
      const double w = static_cast<double>(buffer.records.size());
      const UpdateStats u = update_epoch(buffer, params, opt, setup.train, epoch_rng, lr);
      stats.bc_loss += u.bc_loss * w;
      stats.ppo_loss += u.ppo_loss * w;
      stats.mean_reward += u.mean_reward * w;
      stats.expert_agreement += u.expert_agreement * w;
      weight_total += w;
    }
    if (weight_total > 0) {
      stats.bc_loss /= weight_total;
      stats.ppo_loss /= weight_total;
      stats.mean_reward /= weight_total;
      stats.expert_agreement /= weight_total;
    }
    if (on_epoch) on_epoch(stats, params);
  }
  return params;
}

}  // namespace pcreg
