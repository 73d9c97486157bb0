#pragma once

// Shared test utilities: independent brute-force oracles and random input
// generators. Everything here is deliberately written against the math, not
// against the library internals it checks.

#include <cmath>
#include <limits>
#include <vector>

#include "pcreg/geometry.hpp"
#include "pcreg/rng.hpp"

namespace test_helpers {

using pcreg::Mat3;
using pcreg::PointCloud;
using pcreg::Rng;
using pcreg::Vec3;

inline PointCloud random_cloud(Rng& rng, int n, double extent = 1.0) {
  PointCloud cloud;
  cloud.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    cloud.push_back(Vec3(rng.uniform(-extent, extent), rng.uniform(-extent, extent),
                         rng.uniform(-extent, extent)));
  }
  return cloud;
}

inline Mat3 random_rotation(Rng& rng) {
  return pcreg::euler_to_rotation({rng.uniform(-M_PI / 2, M_PI / 2),
                                   rng.uniform(-M_PI / 2, M_PI / 2),
                                   rng.uniform(-M_PI / 2, M_PI / 2)});
}

inline pcreg::RigidTransform random_transform(Rng& rng, double trans_extent = 1.0) {
  return {random_rotation(rng), Vec3(rng.uniform(-trans_extent, trans_extent),
                                     rng.uniform(-trans_extent, trans_extent),
                                     rng.uniform(-trans_extent, trans_extent))};
}

// O(|x| * |y|) Chamfer oracle.
inline double chamfer_bruteforce(const PointCloud& x, const PointCloud& y) {
  double total = 0.0;
  for (const Vec3& p : x) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec3& q : y) best = std::min(best, (p - q).squaredNorm());
    total += best;
  }
  return total / static_cast<double>(x.size());
}

// O(n^2) diameter oracle.
inline double diameter_bruteforce(const PointCloud& cloud) {
  double best = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (std::size_t j = 0; j < cloud.size(); ++j) {
      best = std::max(best, (cloud[i] - cloud[j]).norm());
    }
  }
  return best;
}

inline double max_abs_diff(const Mat3& a, const Mat3& b) { return (a - b).cwiseAbs().maxCoeff(); }

inline double max_cloud_diff(const PointCloud& a, const PointCloud& b) {
  double worst = std::numeric_limits<double>::infinity();
  if (a.size() != b.size()) return worst;
  worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, (a[i] - b[i]).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace test_helpers
