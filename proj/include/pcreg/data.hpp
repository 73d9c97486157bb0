#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pcreg/geometry.hpp"
#include "pcreg/metrics.hpp"
#include "pcreg/rng.hpp"

namespace pcreg {

enum class ShapeKind { kSphere, kCube, kCylinder, kCone, kTorus, kTwoBox };

constexpr std::array<ShapeKind, 6> kAllShapeKinds{ShapeKind::kSphere,   ShapeKind::kCube,
                                                  ShapeKind::kCylinder, ShapeKind::kCone,
                                                  ShapeKind::kTorus,    ShapeKind::kTwoBox};

inline const char* to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::kSphere: return "sphere";
    case ShapeKind::kCube: return "cube";
    case ShapeKind::kCylinder: return "cylinder";
    case ShapeKind::kCone: return "cone";
    case ShapeKind::kTorus: return "torus";
    case ShapeKind::kTwoBox: return "two-box";
  }
  return "unknown";
}

inline ShapeKind shape_kind_from_string(const std::string& s) {
  for (const ShapeKind k : kAllShapeKinds) {
    if (s == to_string(k)) return k;
  }
  throw InvalidInput("unknown shape kind: " + s);
}

/// Initial misalignment and noise configuration mirroring the synthetic
/// evaluation protocol: independent 1024-of-2048 subsampling, per-axis
/// rotations up to 45 degrees, translations in [-0.5, 0.5], clipped
/// Gaussian jitter, and point shuffling.
struct CorruptionConfig {
  int n_sample = 1024;
  int n_total = 2048;
  double rot_range_deg = 45.0;   // per-axis magnitude upper bound
  double trans_range = 0.5;      // per-axis, symmetric
  double jitter_sigma = 0.01;
  double jitter_clip = 0.05;
  bool shuffle = true;
};

/// One registration problem: the corrupted observation, its noise-free
/// counterparts (same subsamples without jitter, same pose), and the
/// corrupting transform. source_clean[i] corresponds to source[i].
struct RegistrationPair {
  PointCloud source;
  PointCloud target;
  PointCloud source_clean;
  PointCloud target_clean;
  RigidTransform truth;  // source = truth (x) jittered clean subsample

  /// The transform a perfect registration should produce.
  RigidTransform goal() const { return truth.inverse(); }
};

namespace detail {

inline Vec3 sample_box_surface(Rng& rng, const Vec3& half) {
  // Face picked by area, point uniform within the face.
  const double ax = half.y() * half.z(), ay = half.x() * half.z(), az = half.x() * half.y();
  const double u = rng.uniform() * (ax + ay + az);
  const double sign = rng.coin() ? 1.0 : -1.0;
  Vec3 p(rng.uniform(-half.x(), half.x()), rng.uniform(-half.y(), half.y()),
         rng.uniform(-half.z(), half.z()));
  if (u < ax) {
    p.x() = sign * half.x();
  } else if (u < ax + ay) {
    p.y() = sign * half.y();
  } else {
    p.z() = sign * half.z();
  }
  return p;
}

inline Vec3 sample_shape_point(ShapeKind kind, Rng& rng) {
  switch (kind) {
    case ShapeKind::kSphere:
      return rng.unit_vector();
    case ShapeKind::kCube:
      return sample_box_surface(rng, Vec3(1.0, 1.0, 1.0));
    case ShapeKind::kCylinder: {
      const double r = 0.7, h = 2.0;
      const double side = 2.0 * M_PI * r * h, caps = 2.0 * M_PI * r * r;
      if (rng.uniform() * (side + caps) < side) {
        const double theta = rng.uniform(0, 2.0 * M_PI);
        return {r * std::cos(theta), r * std::sin(theta), rng.uniform(-h / 2, h / 2)};
      }
      const double theta = rng.uniform(0, 2.0 * M_PI);
      const double rad = r * std::sqrt(rng.uniform());
      const double z = rng.coin() ? h / 2 : -h / 2;
      return {rad * std::cos(theta), rad * std::sin(theta), z};
    }
    case ShapeKind::kCone: {
      const double r = 0.9, h = 1.6;
      const double slant = std::sqrt(r * r + h * h);
      const double lateral = M_PI * r * slant, base = M_PI * r * r;
      const double theta = rng.uniform(0, 2.0 * M_PI);
      if (rng.uniform() * (lateral + base) < lateral) {
        const double s = std::sqrt(rng.uniform());  // area density grows with radius
        return {s * r * std::cos(theta), s * r * std::sin(theta), h * (1.0 - s)};
      }
      const double rad = r * std::sqrt(rng.uniform());
      return {rad * std::cos(theta), rad * std::sin(theta), 0.0};
    }
    case ShapeKind::kTorus: {
      const double R = 0.8, r = 0.35;
      const double u = rng.uniform(0, 2.0 * M_PI);
      for (;;) {
        const double v = rng.uniform(0, 2.0 * M_PI);
        if (rng.uniform() * (R + r) <= R + r * std::cos(v)) {
          return {(R + r * std::cos(v)) * std::cos(u), (R + r * std::cos(v)) * std::sin(u),
                  r * std::sin(v)};
        }
      }
    }
    case ShapeKind::kTwoBox: {
      const Vec3 half_a(0.55, 0.35, 0.3), half_b(0.3, 0.55, 0.22);
      const Vec3 center_a(-0.45, 0.0, 0.0), center_b(0.5, 0.15, 0.1);
      const auto area = [](const Vec3& h) {
        return 8.0 * (h.x() * h.y() + h.y() * h.z() + h.x() * h.z());
      };
      if (rng.uniform() * (area(half_a) + area(half_b)) < area(half_a)) {
        return center_a + sample_box_surface(rng, half_a);
      }
      return center_b + sample_box_surface(rng, half_b);
    }
  }
  throw InvalidInput("sample_shape_point: unknown shape kind");
}

}  // namespace detail

/// Normalizes in place to zero centroid with the farthest point at
/// distance 1.
inline void normalize_cloud(PointCloud& cloud) {
  const Vec3 mu = centroid(cloud);
  double max_norm = 0.0;
  for (Vec3& p : cloud) {
    p -= mu;
    max_norm = std::max(max_norm, p.norm());
  }
  if (max_norm <= 0.0) throw InvalidInput("normalize_cloud: degenerate cloud");
  for (Vec3& p : cloud) p /= max_norm;
}

/// n surface samples of a procedural primitive, normalized to zero centroid
/// and unit max radius.
inline PointCloud generate_shape(ShapeKind kind, int n, std::uint64_t seed) {
  if (n < 1) throw InvalidInput("generate_shape: n must be >= 1");
  Rng rng(seed);
  PointCloud cloud;
  cloud.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) cloud.push_back(detail::sample_shape_point(kind, rng));
  normalize_cloud(cloud);
  return cloud;
}

/// Random pose from the corruption ranges: per-axis rotation magnitude
/// uniform in [0, rot_range] with a uniform sign, translation uniform in
/// +-trans_range per axis.
inline RigidTransform draw_pose(const CorruptionConfig& cfg, Rng& rng) {
  EulerAngles e;
  e.x = deg_to_rad(rng.uniform(0, cfg.rot_range_deg)) * (rng.coin() ? 1.0 : -1.0);
  e.y = deg_to_rad(rng.uniform(0, cfg.rot_range_deg)) * (rng.coin() ? 1.0 : -1.0);
  e.z = deg_to_rad(rng.uniform(0, cfg.rot_range_deg)) * (rng.coin() ? 1.0 : -1.0);
  RigidTransform t;
  t.rotation = euler_to_rotation(e);
  t.translation = Vec3(rng.uniform(-cfg.trans_range, cfg.trans_range),
                       rng.uniform(-cfg.trans_range, cfg.trans_range),
                       rng.uniform(-cfg.trans_range, cfg.trans_range));
  return t;
}

namespace detail {

inline PointCloud jitter_cloud(const PointCloud& cloud, const CorruptionConfig& cfg, Rng& rng) {
  PointCloud out;
  out.reserve(cloud.size());
  for (const Vec3& p : cloud) {
    Vec3 noise;
    for (int k = 0; k < 3; ++k) {
      noise[k] = std::clamp(rng.normal(0.0, cfg.jitter_sigma), -cfg.jitter_clip, cfg.jitter_clip);
    }
    out.push_back(p + noise);
  }
  return out;
}

inline PointCloud select(const PointCloud& cloud, const std::vector<int>& idx) {
  PointCloud out;
  out.reserve(idx.size());
  for (const int i : idx) out.push_back(cloud[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace detail

/// Pre-pose halves of make_pair: independent subsamples with independent
/// jitter, no transform or shuffle yet. Exposed so affine augmentation can
/// run between subsampling and the pose offset.
struct PairParts {
  PointCloud source;        // jittered source subsample, untransformed
  PointCloud target;        // jittered target subsample
  PointCloud source_clean;  // same subsample without jitter
  PointCloud target_clean;
};

inline PairParts make_pair_parts(const PointCloud& clean, const CorruptionConfig& cfg, Rng& rng) {
  if (static_cast<int>(clean.size()) != cfg.n_total) {
    throw InvalidInput("make_pair: clean cloud size does not match n_total");
  }
  if (cfg.n_total < cfg.n_sample) throw InvalidInput("make_pair: n_total < n_sample");
  PairParts parts;
  parts.source_clean = detail::select(clean, rng.sample_indices(cfg.n_total, cfg.n_sample));
  parts.target_clean = detail::select(clean, rng.sample_indices(cfg.n_total, cfg.n_sample));
  parts.source = detail::jitter_cloud(parts.source_clean, cfg, rng);
  parts.target = detail::jitter_cloud(parts.target_clean, cfg, rng);
  return parts;
}

/// Applies the pose to the source side and shuffles both clouds (clean
/// counterparts keep the same permutation as their noisy partner).
inline RegistrationPair finish_pair(PairParts parts, const RigidTransform& pose,
                                    const CorruptionConfig& cfg, Rng& rng) {
  RegistrationPair pair;
  pair.truth = pose;
  pair.source = apply_rigid(parts.source, pose);
  pair.source_clean = apply_rigid(parts.source_clean, pose);
  pair.target = std::move(parts.target);
  pair.target_clean = std::move(parts.target_clean);
  if (cfg.shuffle) {
    const std::vector<int> ps = rng.permutation(static_cast<int>(pair.source.size()));
    pair.source = detail::select(pair.source, ps);
    pair.source_clean = detail::select(pair.source_clean, ps);
    const std::vector<int> pt = rng.permutation(static_cast<int>(pair.target.size()));
    pair.target = detail::select(pair.target, pt);
    pair.target_clean = detail::select(pair.target_clean, pt);
  }
  return pair;
}

/// Full corruption pipeline: subsample, jitter, pose the source, shuffle.
inline RegistrationPair make_pair(const PointCloud& clean, const CorruptionConfig& cfg, Rng& rng) {
  PairParts parts = make_pair_parts(clean, cfg, rng);
  const RigidTransform pose = draw_pose(cfg, rng);
  return finish_pair(std::move(parts), pose, cfg, rng);
}

// --- XYZ text format ---------------------------------------------------------

/// Reads "x y z" triples, one per line. Round-trips save_cloud exactly.
inline PointCloud load_cloud(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("load_cloud: cannot open " + path);
  PointCloud cloud;
  std::string line;
  int line_number = 0;
  while (std::getline(is, line)) {
    ++line_number;
    if (line.empty()) continue;
    std::istringstream ss(line);
    Vec3 p;
    if (!(ss >> p.x() >> p.y() >> p.z())) {
      throw ParseError("load_cloud: expected three coordinates", line_number);
    }
    std::string rest;
    if (ss >> rest) throw ParseError("load_cloud: trailing content", line_number);
    if (!p.allFinite()) throw ParseError("load_cloud: non-finite coordinate", line_number);
    cloud.push_back(p);
  }
  if (cloud.empty()) throw InvalidInput("load_cloud: no points in " + path);
  return cloud;
}

/// Writes one "x y z" line per point with 17 significant digits, LF endings.
inline void save_cloud(const PointCloud& cloud, const std::string& path) {
  std::ofstream os(path, std::ios::binary);  // binary keeps LF endings everywhere
  if (!os) throw IoError("save_cloud: cannot open " + path);
  char buf[128];
  for (const Vec3& p : cloud) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
    os << buf;
  }
  if (!os) throw IoError("save_cloud: write failed for " + path);
}

}  // namespace pcreg
