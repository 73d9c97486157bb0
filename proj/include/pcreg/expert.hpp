#pragma once

#include <cmath>

#include "pcreg/env.hpp"
#include "pcreg/geometry.hpp"

namespace pcreg {

/// Remaining per-axis transformation error between an accumulator and the
/// registration goal: Euler decomposition of the residual rotation plus the
/// residual disentangled translation.
struct ResidualError {
  EulerAngles rot;
  Vec3 trans = Vec3::Zero();
};

/// Residual toward `goal` (the plain transform that completes the
/// registration) for a global-disentangled accumulator:
///   dR = R_goal * R_acc^T,  dt = t_goal_d - t_acc,
/// with t_goal_d = t_goal - origin + R_goal * origin accounting for the
/// translation the disentangled convention absorbs into the rotation origin.
inline ResidualError residual(const RigidTransform& goal, const TransformAccumulator& acc) {
  ResidualError res;
  res.rot = rotation_to_euler(goal.rotation * acc.rotation.transpose());
  const Vec3 goal_t_d = goal.translation - acc.origin + goal.rotation * acc.origin;
  res.trans = goal_t_d - acc.translation;
  return res;
}

/// Residual under the accumulation convention actually in use. The global
/// branch is `residual` above; the local and basic branches solve the same
/// "one step to finish" equation under their own composition rule.
inline ResidualError residual_for_mode(const RigidTransform& goal, const TransformAccumulator& acc,
                                       TransformMode mode) {
  switch (mode) {
    case TransformMode::kGlobalDisentangled:
      return residual(goal, acc);
    case TransformMode::kLocalDisentangled: {
      ResidualError res;
      res.rot = rotation_to_euler(acc.rotation.transpose() * goal.rotation);
      const Vec3 goal_t_d = goal.translation - acc.origin + goal.rotation * acc.origin;
      res.trans = goal_t_d - acc.translation;
      return res;
    }
    case TransformMode::kBasic: {
      // step = goal o acc^-1 as plain transforms
      const RigidTransform step =
          goal.compose(RigidTransform{acc.rotation, acc.translation}.inverse());
      ResidualError res;
      res.rot = rotation_to_euler(step.rotation);
      res.trans = step.translation;
      return res;
    }
  }
  throw InvalidInput("residual_for_mode: unknown mode");
}

namespace detail {

/// Steady rule for one axis: the largest-magnitude step with the sign of
/// the error that does not overshoot it; stop below the smallest step.
inline int steady_axis_step(double error, const StepTable& table) {
  int best = StepTable::kStopIndex;
  for (int i = 0; i < StepTable::kNumSteps; ++i) {
    const double s = table.steps[static_cast<std::size_t>(i)];
    if (s == 0.0) continue;
    if (std::signbit(s) != std::signbit(error)) continue;
    if (std::abs(s) > std::abs(error)) continue;
    if (best == StepTable::kStopIndex ||
        std::abs(s) > std::abs(table.steps[static_cast<std::size_t>(best)])) {
      best = i;
    }
  }
  return best;
}

/// Greedy rule for one axis: the step minimizing the post-step absolute
/// error; ties break toward the smaller step magnitude.
inline int greedy_axis_step(double error, const StepTable& table) {
  int best = StepTable::kStopIndex;
  double best_cost = std::abs(error);
  double best_mag = 0.0;
  for (int i = 0; i < StepTable::kNumSteps; ++i) {
    const double s = table.steps[static_cast<std::size_t>(i)];
    const double cost = std::abs(error - s);
    const double mag = std::abs(s);
    if (cost < best_cost || (cost == best_cost && mag < best_mag)) {
      best = i;
      best_cost = cost;
      best_mag = mag;
    }
  }
  return best;
}

}  // namespace detail

/// Expert that shrinks the signed error monotonically: never overshoots.
inline ActionVector steady_action(const ResidualError& res, const StepTable& table = {}) {
  ActionVector a;
  a.rot = {detail::steady_axis_step(res.rot.x, table), detail::steady_axis_step(res.rot.y, table),
           detail::steady_axis_step(res.rot.z, table)};
  a.trans = {detail::steady_axis_step(res.trans.x(), table),
             detail::steady_axis_step(res.trans.y(), table),
             detail::steady_axis_step(res.trans.z(), table)};
  return a;
}

/// Expert that minimizes the absolute error per step; may oscillate.
inline ActionVector greedy_action(const ResidualError& res, const StepTable& table = {}) {
  ActionVector a;
  a.rot = {detail::greedy_axis_step(res.rot.x, table), detail::greedy_axis_step(res.rot.y, table),
           detail::greedy_axis_step(res.rot.z, table)};
  a.trans = {detail::greedy_axis_step(res.trans.x(), table),
             detail::greedy_axis_step(res.trans.y(), table),
             detail::greedy_axis_step(res.trans.z(), table)};
  return a;
}

enum class ExpertKind { kSteady, kGreedy };

inline ActionVector expert_action(ExpertKind kind, const ResidualError& res,
                                  const StepTable& table = {}) {
  return kind == ExpertKind::kSteady ? steady_action(res, table) : greedy_action(res, table);
}

}  // namespace pcreg
