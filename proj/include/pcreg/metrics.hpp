#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "pcreg/geometry.hpp"

namespace pcreg {

inline double rad_to_deg(double r) { return r * 180.0 / M_PI; }
inline double deg_to_rad(double d) { return d * M_PI / 180.0; }

/// Recall as a function of an ascending distance threshold.
struct RecallCurve {
  std::vector<double> thresholds;
  std::vector<double> recalls;
};

/// Per-axis mean absolute error over Euler angles (degrees) and over
/// translation components (scene units).
inline std::pair<double, double> mae(const RigidTransform& est, const RigidTransform& truth) {
  const EulerAngles ee = rotation_to_euler(est.rotation);
  const EulerAngles et = rotation_to_euler(truth.rotation);
  const double mae_rot =
      (std::abs(ee.x - et.x) + std::abs(ee.y - et.y) + std::abs(ee.z - et.z)) / 3.0;
  const double mae_trans = (est.translation - truth.translation).cwiseAbs().sum() / 3.0;
  return {rad_to_deg(mae_rot), mae_trans};
}

/// Isotropic errors: geodesic angle of the residual rotation (degrees) and
/// Euclidean distance between translations. The trace argument is clamped
/// to [-1, 1] before acos; residuals near identity round outside it.
inline std::pair<double, double> iso(const RigidTransform& est, const RigidTransform& truth) {
  const Mat3 residual = truth.rotation.transpose() * est.rotation;
  const double arg = std::clamp((residual.trace() - 1.0) / 2.0, -1.0, 1.0);
  const double iso_rot = rad_to_deg(std::acos(arg));
  const double iso_trans = (est.translation - truth.translation).norm();
  return {iso_rot, iso_trans};
}

/// Mean distance between closest point pairs (unsquared), min over x_est
/// for each point of x_true.
inline double adi(const PointCloud& x_est, const PointCloud& x_true) {
  if (x_est.empty() || x_true.empty()) throw InvalidInput("adi: empty point cloud");
  double sum = 0.0;
  for (const Vec3& y : x_true) sum += std::sqrt(detail::nearest_sq_linear(y, x_est));
  return sum / static_cast<double>(x_true.size());
}

/// ADD (mean corresponded distance, unsquared) together with ADI.
/// ADD requires index correspondence, hence equal lengths.
inline std::pair<double, double> add_adi(const PointCloud& x_est, const PointCloud& x_true) {
  if (x_est.empty() || x_true.empty()) throw InvalidInput("add_adi: empty point cloud");
  if (x_est.size() != x_true.size()) {
    throw InvalidInput("add_adi: ADD needs index-corresponded clouds of equal length");
  }
  double add_sum = 0.0;
  for (std::size_t i = 0; i < x_true.size(); ++i) add_sum += (x_true[i] - x_est[i]).norm();
  const double add = add_sum / static_cast<double>(x_true.size());
  return {add, adi(x_est, x_true)};
}

namespace detail {
constexpr int kAucThresholdCount = 100;  // th_max = 0.1 d, spacing 1e-3 d
}

/// Recall of `values <= th` at thresholds k * 1e-3 * d for k = 1..100.
inline RecallCurve adi_recall_curve(const std::vector<double>& adi_values, double d) {
  if (d <= 0) throw InvalidInput("adi_recall_curve: diameter must be positive");
  RecallCurve curve;
  curve.thresholds.reserve(detail::kAucThresholdCount);
  curve.recalls.reserve(detail::kAucThresholdCount);
  for (int k = 1; k <= detail::kAucThresholdCount; ++k) {
    const double th = d * (1e-3 * k);
    int hits = 0;
    for (const double v : adi_values) hits += v <= th ? 1 : 0;
    curve.thresholds.push_back(th);
    curve.recalls.push_back(adi_values.empty()
                                ? 0.0
                                : static_cast<double>(hits) / static_cast<double>(adi_values.size()));
  }
  return curve;
}

/// Area under the ADI recall curve up to 10% of the diameter, in [0, 1].
/// Equals (1/th_max) * sum(recall * delta) with 100 equal spacings, i.e.
/// the mean recall over the threshold grid.
inline double adi_auc(const std::vector<double>& adi_values, double d) {
  const RecallCurve curve = adi_recall_curve(adi_values, d);
  double sum = 0.0;
  for (const double r : curve.recalls) sum += r;
  return sum / static_cast<double>(detail::kAucThresholdCount);
}

}  // namespace pcreg
