#pragma once

#include <array>
#include <cmath>
#include <optional>

#include <nlohmann/json.hpp>

#include "pcreg/geometry.hpp"

namespace pcreg {

/// The 11 discrete step sizes shared by every axis: five exponentially
/// spaced magnitudes in both directions plus the zero "stop" step at
/// index 5. Rotation entries are radians, translation entries scene units.
struct StepTable {
  static constexpr int kStopIndex = 5;
  static constexpr int kNumSteps = 11;
  std::array<double, kNumSteps> steps{-0.27, -0.09, -0.03, -0.01, -0.0033, 0.0,
                                      0.0033, 0.01,  0.03,  0.09,  0.27};
};

/// Six categorical sub-actions: one step index per rotation axis and per
/// translation axis.
struct ActionVector {
  std::array<int, 3> rot{StepTable::kStopIndex, StepTable::kStopIndex, StepTable::kStopIndex};
  std::array<int, 3> trans{StepTable::kStopIndex, StepTable::kStopIndex, StepTable::kStopIndex};

  bool operator==(const ActionVector& o) const { return rot == o.rot && trans == o.trans; }

  static ActionVector all_stop() { return {}; }
};

/// Step-reward magnitudes. eps_minus > eps_plus so that alternating
/// diverging/converging steps net out negative.
struct RewardWeights {
  double eps_plus = 0.5;
  double eps_zero = 0.1;
  double eps_minus = 0.6;
};

inline void validate(const ActionVector& a) {
  for (int k = 0; k < 3; ++k) {
    if (a.rot[k] < 0 || a.rot[k] >= StepTable::kNumSteps || a.trans[k] < 0 ||
        a.trans[k] >= StepTable::kNumSteps) {
      throw InvalidInput("ActionVector: step index out of range");
    }
  }
}

/// Decodes the six step indices into one rigid step. The three rotation
/// steps compose under the fixed Euler convention.
inline RigidTransform decode_action(const ActionVector& a, const StepTable& table = {}) {
  validate(a);
  RigidTransform t;
  t.rotation = euler_to_rotation(
      {table.steps[static_cast<std::size_t>(a.rot[0])], table.steps[static_cast<std::size_t>(a.rot[1])],
       table.steps[static_cast<std::size_t>(a.rot[2])]});
  t.translation = Vec3(table.steps[static_cast<std::size_t>(a.trans[0])],
                       table.steps[static_cast<std::size_t>(a.trans[1])],
                       table.steps[static_cast<std::size_t>(a.trans[2])]);
  return t;
}

namespace detail {
constexpr double kChamferTieTolerance = 1e-12;
}

/// Step reward: +eps_plus when the Chamfer distance dropped, -eps_zero when
/// it stayed equal (stop steps), -eps_minus when it grew.
inline double reward(double cd_prev, double cd_curr, const RewardWeights& w = {}) {
  if (std::abs(cd_curr - cd_prev) <= detail::kChamferTieTolerance) return -w.eps_zero;
  return cd_curr < cd_prev ? w.eps_plus : -w.eps_minus;
}

struct EnvConfig {
  TransformMode mode = TransformMode::kGlobalDisentangled;
  RewardWeights reward_weights;
  int n_max = 10;
  StepTable table;
};

/// One line of a trajectory trace.
struct TraceRecord {
  int step = 0;
  ActionVector action;
  RigidTransform decoded;
  double chamfer_value = 0.0;      // vs. true source with ground truth, else vs. target
  std::optional<double> reward;    // absent without ground truth
  TransformAccumulator accumulator;
};

inline nlohmann::json to_json(const TraceRecord& rec) {
  nlohmann::json j;
  j["step"] = rec.step;
  j["rot_idx"] = rec.action.rot;
  j["trans_idx"] = rec.action.trans;
  const EulerAngles e = rotation_to_euler(rec.decoded.rotation);
  j["decoded"] = {{"euler_rad", {e.x, e.y, e.z}},
                  {"translation",
                   {rec.decoded.translation.x(), rec.decoded.translation.y(),
                    rec.decoded.translation.z()}}};
  j["chamfer"] = rec.chamfer_value;
  if (rec.reward) {
    j["reward"] = *rec.reward;
  } else {
    j["reward"] = nullptr;
  }
  nlohmann::json rot = nlohmann::json::array();
  for (int r = 0; r < 3; ++r) {
    rot.push_back({rec.accumulator.rotation(r, 0), rec.accumulator.rotation(r, 1),
                   rec.accumulator.rotation(r, 2)});
  }
  j["accumulator"] = {{"rotation", rot},
                      {"translation",
                       {rec.accumulator.translation.x(), rec.accumulator.translation.y(),
                        rec.accumulator.translation.z()}},
                      {"origin",
                       {rec.accumulator.origin.x(), rec.accumulator.origin.y(),
                        rec.accumulator.origin.z()}}};
  return j;
}

/// Iterative registration episode over a fixed horizon. Stop actions do not
/// terminate it; every episode runs exactly n_max steps.
class Episode {
 public:
  struct StepResult {
    const PointCloud& source;  // current observed source, owned by the episode
    const PointCloud& target;
    std::optional<double> reward;
    bool done = false;
  };

  Episode(PointCloud source, PointCloud target, std::optional<RigidTransform> truth = {},
          EnvConfig config = {})
      : config_(config),
        source0_(std::move(source)),
        target_(std::move(target)),
        truth_(std::move(truth)) {
    if (source0_.empty() || target_.empty()) throw InvalidInput("Episode: empty point cloud");
    acc_ = TransformAccumulator::identity(centroid(source0_));
    current_ = source0_;
    if (truth_) {
      true_source_ = apply_rigid(source0_, truth_->inverse());
      prev_cd_ = chamfer(source0_, true_source_);
    }
  }

  StepResult step(const ActionVector& action, TraceRecord* trace = nullptr) {
    if (step_count_ >= config_.n_max) throw InvalidState("Episode: already finished");
    const RigidTransform decoded = decode_action(action, config_.table);
    acc_ = accumulate(acc_, decoded, config_.mode);
    current_ = apply_accumulator(source0_, acc_, config_.mode);
    std::optional<double> r;
    double cd;
    if (truth_) {
      cd = chamfer(current_, true_source_);
      r = reward(prev_cd_, cd, config_.reward_weights);
      prev_cd_ = cd;
    } else {
      cd = chamfer(current_, target_);
    }
    ++step_count_;
    if (trace) {
      trace->step = step_count_;
      trace->action = action;
      trace->decoded = decoded;
      trace->chamfer_value = cd;
      trace->reward = r;
      trace->accumulator = acc_;
    }
    return {current_, target_, r, done()};
  }

  bool done() const { return step_count_ >= config_.n_max; }
  int step_count() const { return step_count_; }
  double prev_cd() const { return prev_cd_; }
  const PointCloud& source0() const { return source0_; }
  const PointCloud& current_source() const { return current_; }
  const PointCloud& target() const { return target_; }
  const PointCloud& true_source() const { return true_source_; }
  const std::optional<RigidTransform>& truth() const { return truth_; }
  const TransformAccumulator& accumulator() const { return acc_; }
  const EnvConfig& config() const { return config_; }

  /// The plain rigid transform currently estimated by the episode.
  RigidTransform estimate() const { return accumulator_to_transform(acc_, config_.mode); }

 private:
  EnvConfig config_;
  PointCloud source0_;
  PointCloud target_;
  std::optional<RigidTransform> truth_;
  PointCloud true_source_;
  PointCloud current_;
  TransformAccumulator acc_;
  int step_count_ = 0;
  double prev_cd_ = 0.0;
};

}  // namespace pcreg
