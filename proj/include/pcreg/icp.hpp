#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "pcreg/geometry.hpp"

namespace pcreg {

struct IcpConfig {
  int max_iterations = 30;
  double convergence_tol = 1e-6;            // Frobenius change of the homogeneous transform
  double max_correspondence_distance = 0.5;

  void validate() const {
    if (max_iterations < 1 || convergence_tol <= 0.0 || max_correspondence_distance <= 0.0) {
      throw InvalidInput("IcpConfig: all fields must be positive");
    }
  }
};

/// Least-squares rigid transform between index-corresponded clouds via the
/// cross-covariance SVD, with the determinant correction that keeps the
/// result a proper rotation.
inline RigidTransform kabsch(const PointCloud& src, const PointCloud& dst) {
  if (src.size() != dst.size()) throw InvalidInput("kabsch: length mismatch");
  if (src.size() < 3) throw InvalidInput("kabsch: need at least 3 correspondences");
  const Vec3 mu_src = centroid(src);
  const Vec3 mu_dst = centroid(dst);
  Mat3 cov = Mat3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    cov += (dst[i] - mu_dst) * (src[i] - mu_src).transpose();
  }
  const Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sigma = svd.singularValues();
  // Rank < 2 leaves a rotation about the dominant axis undetermined.
  if (sigma[0] <= 0.0 || sigma[1] <= 1e-12 * sigma[0]) {
    throw DegenerateInput("kabsch: degenerate point configuration");
  }
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? -1.0 : 1.0;
  RigidTransform t;
  t.rotation = svd.matrixU() * d * svd.matrixV().transpose();
  t.translation = mu_dst - t.rotation * mu_src;
  return t;
}

struct IcpResult {
  RigidTransform transform;
  int iterations = 0;
  double final_rmse = 0.0;
  std::vector<double> rmse_history;  // matched-point RMSE after each iteration
};

/// Point-to-point ICP: alternates nearest-neighbor matching (pairs beyond
/// max_correspondence_distance rejected) with a Kabsch fit on the
/// survivors, until the transform stops changing or max_iterations.
inline IcpResult icp(const PointCloud& source, const PointCloud& target, const IcpConfig& cfg = {},
                     const RigidTransform& init = {}) {
  cfg.validate();
  if (source.empty() || target.empty()) throw InvalidInput("icp: empty point cloud");
  const NearestNeighborGrid index(target);
  const double max_d2 = cfg.max_correspondence_distance * cfg.max_correspondence_distance;

  IcpResult result;
  result.transform = init;
  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    PointCloud matched_src, matched_dst;
    matched_src.reserve(source.size());
    matched_dst.reserve(source.size());
    for (const Vec3& p : source) {
      const Vec3 q = result.transform.apply(p);
      const auto [j, d2] = index.nearest(q);
      if (d2 <= max_d2) {
        matched_src.push_back(p);
        matched_dst.push_back(target[static_cast<std::size_t>(j)]);
      }
    }
    if (matched_src.empty()) {
      throw NoCorrespondences("icp: no correspondences within the distance cutoff");
    }
    const RigidTransform updated = kabsch(matched_src, matched_dst);

    double sq_sum = 0.0;
    for (std::size_t i = 0; i < matched_src.size(); ++i) {
      sq_sum += (updated.apply(matched_src[i]) - matched_dst[i]).squaredNorm();
    }
    result.final_rmse = std::sqrt(sq_sum / static_cast<double>(matched_src.size()));
    result.rmse_history.push_back(result.final_rmse);
    ++result.iterations;

    Eigen::Matrix4d delta = Eigen::Matrix4d::Zero();
    delta.block<3, 3>(0, 0) = updated.rotation - result.transform.rotation;
    delta.block<3, 1>(0, 3) = updated.translation - result.transform.translation;
    result.transform = updated;
    if (delta.norm() < cfg.convergence_tol) break;
  }
  return result;
}

}  // namespace pcreg
