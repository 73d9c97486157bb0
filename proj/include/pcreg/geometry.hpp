#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Dense>

#include "pcreg/errors.hpp"

namespace pcreg {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Ordered list of 3D points in scene units.
using PointCloud = std::vector<Vec3>;

/// Euler angles (radians) under the fixed convention R = Rx(x)*Ry(y)*Rz(z).
struct EulerAngles {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  RigidTransform inverse() const {
    return {rotation.transpose(), -(rotation.transpose() * translation)};
  }

  /// Composition: (a.compose(b)).apply(p) == a.apply(b.apply(p)).
  RigidTransform compose(const RigidTransform& b) const {
    return {rotation * b.rotation, rotation * b.translation + translation};
  }
};

/// Accumulation convention for iterated transform steps.
enum class TransformMode {
  kGlobalDisentangled,  // R <- R_step * R, rotations about the fixed origin
  kLocalDisentangled,   // R <- R * R_step, rotations about the fixed origin
  kBasic,               // homogeneous matrix product, origin ignored
};

/// Running (rotation, translation) over an episode. In the disentangled
/// modes, rotations act about `origin` (the centroid of the initial
/// observed source), which stays fixed for the accumulator's lifetime.
struct TransformAccumulator {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  Vec3 origin = Vec3::Zero();

  static TransformAccumulator identity(const Vec3& origin) {
    TransformAccumulator acc;
    acc.origin = origin;
    return acc;
  }
};

inline bool is_rotation_matrix(const Mat3& r, double tol = 1e-9) {
  if (!r.allFinite()) return false;
  const Mat3 rtr = r.transpose() * r;
  if ((rtr - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(r.determinant() - 1.0) <= tol;
}

inline Mat3 rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << 1, 0, 0, 0, c, -s, 0, s, c;
  return r;
}

inline Mat3 rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << c, 0, s, 0, 1, 0, -s, 0, c;
  return r;
}

inline Mat3 rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << c, -s, 0, s, c, 0, 0, 0, 1;
  return r;
}

inline Mat3 euler_to_rotation(const EulerAngles& e) {
  return rot_x(e.x) * rot_y(e.y) * rot_z(e.z);
}

namespace detail {
// Maps atan2's -pi to +pi so angles live in (-pi, pi].
inline double canonical_angle(double a) { return a == -M_PI ? M_PI : a; }
}  // namespace detail

/// Inverse of euler_to_rotation. Angles come out in (-pi, pi]; the gimbal
/// case |y| = pi/2 is resolved by fixing z = 0.
inline EulerAngles rotation_to_euler(const Mat3& r) {
  if (!is_rotation_matrix(r)) {
    throw InvalidInput("rotation_to_euler: input is not orthonormal with det +1");
  }
  EulerAngles e;
  const double sy = std::clamp(r(0, 2), -1.0, 1.0);
  if (std::abs(sy) >= 1.0 - 1e-12) {
    e.y = sy > 0 ? M_PI / 2 : -M_PI / 2;
    e.z = 0.0;
    e.x = detail::canonical_angle(sy > 0 ? std::atan2(r(1, 0), r(1, 1))
                                         : std::atan2(-r(1, 0), r(1, 1)));
  } else {
    e.y = std::asin(sy);
    e.x = detail::canonical_angle(std::atan2(-r(1, 2), r(2, 2)));
    e.z = detail::canonical_angle(std::atan2(-r(0, 1), r(0, 0)));
  }
  return e;
}

inline Vec3 centroid(const PointCloud& cloud) {
  if (cloud.empty()) throw InvalidInput("centroid: empty point cloud");
  Vec3 sum = Vec3::Zero();
  for (const Vec3& p : cloud) sum += p;
  return sum / static_cast<double>(cloud.size());
}

/// Maximal distance between any two points.
inline double diameter(const PointCloud& cloud) {
  if (cloud.empty()) throw InvalidInput("diameter: empty point cloud");
  double best = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (std::size_t j = i + 1; j < cloud.size(); ++j) {
      best = std::max(best, (cloud[i] - cloud[j]).squaredNorm());
    }
  }
  return std::sqrt(best);
}

inline PointCloud apply_rigid(const PointCloud& cloud, const RigidTransform& t) {
  PointCloud out;
  out.reserve(cloud.size());
  for (const Vec3& p : cloud) out.push_back(t.apply(p));
  return out;
}

inline TransformAccumulator accumulate(const TransformAccumulator& acc,
                                       const RigidTransform& step, TransformMode mode) {
  TransformAccumulator next = acc;
  switch (mode) {
    case TransformMode::kGlobalDisentangled:
      next.rotation = step.rotation * acc.rotation;
      next.translation = step.translation + acc.translation;
      break;
    case TransformMode::kLocalDisentangled:
      next.rotation = acc.rotation * step.rotation;
      next.translation = step.translation + acc.translation;
      break;
    case TransformMode::kBasic:
      next.rotation = step.rotation * acc.rotation;
      next.translation = step.rotation * acc.translation + step.translation;
      break;
  }
  return next;
}

/// Applies the accumulated transform to the initial observed source.
/// Disentangled modes rotate about acc.origin; basic mode is plain R*p + t.
inline PointCloud apply_accumulator(const PointCloud& source0, const TransformAccumulator& acc,
                                    TransformMode mode) {
  PointCloud out;
  out.reserve(source0.size());
  if (mode == TransformMode::kBasic) {
    for (const Vec3& p : source0) out.push_back(acc.rotation * p + acc.translation);
  } else {
    for (const Vec3& p : source0) {
      out.push_back(acc.rotation * (p - acc.origin) + acc.origin + acc.translation);
    }
  }
  return out;
}

/// Plain rigid transform equivalent to applying the accumulator.
inline RigidTransform accumulator_to_transform(const TransformAccumulator& acc,
                                               TransformMode mode) {
  if (mode == TransformMode::kBasic) return {acc.rotation, acc.translation};
  return {acc.rotation, acc.origin + acc.translation - acc.rotation * acc.origin};
}

/// Accumulator whose application equals the plain transform `t`.
inline TransformAccumulator transform_to_accumulator(const RigidTransform& t, const Vec3& origin,
                                                     TransformMode mode) {
  TransformAccumulator acc;
  acc.origin = origin;
  acc.rotation = t.rotation;
  if (mode == TransformMode::kBasic) {
    acc.translation = t.translation;
  } else {
    acc.translation = t.translation - origin + t.rotation * origin;
  }
  return acc;
}

/// Exact nearest-neighbor search over a fixed cloud via a uniform grid.
/// Query cost is output-sensitive; results match a linear scan exactly.
class NearestNeighborGrid {
 public:
  explicit NearestNeighborGrid(const PointCloud& points) : points_(points) {
    if (points.empty()) throw InvalidInput("NearestNeighborGrid: empty point cloud");
    lo_ = hi_ = points[0];
    for (const Vec3& p : points) {
      lo_ = lo_.cwiseMin(p);
      hi_ = hi_.cwiseMax(p);
    }
    const double extent = (hi_ - lo_).maxCoeff();
    const double cells_per_axis = std::cbrt(static_cast<double>(points.size()));
    cell_ = extent > 0 ? extent / cells_per_axis : 1.0;
    for (int k = 0; k < 3; ++k) {
      dims_[k] = std::max(1, static_cast<int>(std::floor((hi_[k] - lo_[k]) / cell_)) + 1);
    }
    cells_.resize(static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2]);
    for (int i = 0; i < static_cast<int>(points.size()); ++i) {
      cells_[cell_index(coords(points[static_cast<std::size_t>(i)]))].push_back(i);
    }
  }

  /// Index of the nearest point and its squared distance.
  std::pair<int, double> nearest(const Vec3& q) const {
    const std::array<int, 3> c = coords(q);
    int best = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    const int max_ring = dims_[0] + dims_[1] + dims_[2];
    for (int ring = 0; ring <= max_ring; ++ring) {
      // Cells at Chebyshev distance `ring` from c are at least (ring-1)*cell_ away.
      if (ring > 1) {
        const double lb = (ring - 1) * cell_;
        if (lb * lb > best_d2) break;
      }
      scan_ring(q, c, ring, best, best_d2);
    }
    return {best, best_d2};
  }

  const PointCloud& points() const { return points_; }

 private:
  std::array<int, 3> coords(const Vec3& p) const {
    std::array<int, 3> c;
    for (int k = 0; k < 3; ++k) {
      const int i = static_cast<int>(std::floor((p[k] - lo_[k]) / cell_));
      c[k] = std::clamp(i, 0, dims_[k] - 1);
    }
    return c;
  }

  std::size_t cell_index(const std::array<int, 3>& c) const {
    return (static_cast<std::size_t>(c[0]) * dims_[1] + c[1]) * dims_[2] + c[2];
  }

  void scan_cell(const Vec3& q, const std::array<int, 3>& c, int& best, double& best_d2) const {
    for (const int i : cells_[cell_index(c)]) {
      const double d2 = (points_[static_cast<std::size_t>(i)] - q).squaredNorm();
      if (d2 < best_d2 || (d2 == best_d2 && i < best)) {
        best = i;
        best_d2 = d2;
      }
    }
  }

  void scan_ring(const Vec3& q, const std::array<int, 3>& c, int ring, int& best,
                 double& best_d2) const {
    const int x0 = c[0] - ring, x1 = c[0] + ring;
    const int y0 = c[1] - ring, y1 = c[1] + ring;
    const int z0 = c[2] - ring, z1 = c[2] + ring;
    for (int x = std::max(0, x0); x <= std::min(dims_[0] - 1, x1); ++x) {
      for (int y = std::max(0, y0); y <= std::min(dims_[1] - 1, y1); ++y) {
        for (int z = std::max(0, z0); z <= std::min(dims_[2] - 1, z1); ++z) {
          const int cheb = std::max({std::abs(x - c[0]), std::abs(y - c[1]), std::abs(z - c[2])});
          if (cheb != ring) continue;
          scan_cell(q, {x, y, z}, best, best_d2);
        }
      }
    }
  }

  PointCloud points_;
  Vec3 lo_, hi_;
  double cell_ = 1.0;
  std::array<int, 3> dims_{1, 1, 1};
  std::vector<std::vector<int>> cells_;
};

namespace detail {

inline double nearest_sq_linear(const Vec3& q, const PointCloud& cloud) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vec3& p : cloud) best = std::min(best, (p - q).squaredNorm());
  return best;
}

// Linear scan stays faster than the grid for desk-scale clouds.
constexpr std::size_t kChamferGridThreshold = 4096;

}  // namespace detail

/// Mean over X of the squared distance to the nearest point of Y
/// (asymmetric). Exact for both the linear and the grid-backed path.
inline double chamfer(const PointCloud& x, const PointCloud& y) {
  if (x.empty() || y.empty()) throw InvalidInput("chamfer: empty point cloud");
  double sum = 0.0;
  if (y.size() < detail::kChamferGridThreshold) {
    for (const Vec3& q : x) sum += detail::nearest_sq_linear(q, y);
  } else {
    const NearestNeighborGrid grid(y);
    for (const Vec3& q : x) sum += grid.nearest(q).second;
  }
  return sum / static_cast<double>(x.size());
}

inline double chamfer(const PointCloud& x, const NearestNeighborGrid& y_index) {
  if (x.empty()) throw InvalidInput("chamfer: empty point cloud");
  double sum = 0.0;
  for (const Vec3& q : x) sum += y_index.nearest(q).second;
  return sum / static_cast<double>(x.size());
}

/// Symmetric Chamfer sum against the noise-free counterpart clouds:
/// CD(x, y_clean) + CD(y, x_clean).
inline double modified_chamfer(const PointCloud& x, const PointCloud& y,
                               const PointCloud& x_clean, const PointCloud& y_clean) {
  return chamfer(x, y_clean) + chamfer(y, x_clean);
}

inline void check_finite(const PointCloud& cloud, const char* what) {
  for (const Vec3& p : cloud) {
    if (!p.allFinite()) throw InvalidInput(std::string(what) + ": non-finite coordinate");
  }
}

}  // namespace pcreg
