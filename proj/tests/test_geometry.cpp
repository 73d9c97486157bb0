#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "pcreg/geometry.hpp"

using namespace pcreg;
using test_helpers::chamfer_bruteforce;
using test_helpers::random_cloud;
using test_helpers::random_transform;

TEST_CASE("centroid basics") {
  CHECK((centroid({{0, 0, 0}, {2, 0, 0}}) - Vec3(1, 0, 0)).norm() == 0.0);
  const Vec3 p(0.3, -1.2, 5.0);
  CHECK((centroid({p}) - p).norm() == 0.0);
  CHECK_THROWS_AS(centroid({}), InvalidInput);
}

TEST_CASE("centroid matches summation oracle on random clouds") {
  Rng rng(11);
  const PointCloud cloud = random_cloud(rng, 100);
  Vec3 sum = Vec3::Zero();
  for (const Vec3& p : cloud) sum += p;
  const Vec3 mean = sum / 100.0;
  CHECK((centroid(cloud) - mean).norm() < 1e-12);
}

TEST_CASE("diameter") {
  CHECK(diameter({{0, 0, 0}, {1, 0, 0}}) == 1.0);
  CHECK(diameter({{1, 2, 3}}) == 0.0);
  Rng rng(12);
  const PointCloud cloud = random_cloud(rng, 50);
  CHECK(diameter(cloud) == Catch::Approx(test_helpers::diameter_bruteforce(cloud)).margin(1e-15));
}

TEST_CASE("apply_rigid") {
  const PointCloud cloud{{1, 2, 3}, {-0.5, 0.25, 4}};
  SECTION("identity") {
    CHECK(test_helpers::max_cloud_diff(apply_rigid(cloud, RigidTransform{}), cloud) == 0.0);
  }
  SECTION("pure translation") {
    RigidTransform t;
    t.translation = Vec3(1, 2, 3);
    const PointCloud out = apply_rigid({{0, 0, 0}}, t);
    CHECK((out[0] - Vec3(1, 2, 3)).norm() == 0.0);
  }
  SECTION("z-rotation by 90 degrees") {
    RigidTransform t;
    t.rotation = rot_z(M_PI / 2);
    const PointCloud out = apply_rigid({{1, 0, 0}}, t);
    CHECK((out[0] - Vec3(0, 1, 0)).norm() < 1e-12);
  }
}

TEST_CASE("euler round trip") {
  CHECK(test_helpers::max_abs_diff(euler_to_rotation({0, 0, 0}), Mat3::Identity()) == 0.0);
  CHECK(test_helpers::max_abs_diff(euler_to_rotation({0.27, 0, 0}), rot_x(0.27)) == 0.0);

  Rng rng(13);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const EulerAngles e{rng.uniform(-M_PI / 2, M_PI / 2), rng.uniform(-M_PI / 2, M_PI / 2),
                        rng.uniform(-M_PI / 2, M_PI / 2)};
    const EulerAngles back = rotation_to_euler(euler_to_rotation(e));
    worst = std::max({worst, std::abs(back.x - e.x), std::abs(back.y - e.y), std::abs(back.z - e.z)});
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("rotation_to_euler rejects non-orthonormal input") {
  Mat3 bad = Mat3::Identity();
  bad(0, 0) = 1.5;
  CHECK_THROWS_AS(rotation_to_euler(bad), InvalidInput);
  Mat3 reflected = Mat3::Identity();
  reflected(2, 2) = -1.0;  // det -1
  CHECK_THROWS_AS(rotation_to_euler(reflected), InvalidInput);
}

TEST_CASE("rotation_to_euler gimbal case sets z to zero") {
  const Mat3 r = euler_to_rotation({0.4, M_PI / 2, 0.0});
  const EulerAngles e = rotation_to_euler(r);
  CHECK(e.z == 0.0);
  CHECK(test_helpers::max_abs_diff(euler_to_rotation(e), r) < 1e-9);
}

TEST_CASE("accumulate identity and pure translations") {
  Rng rng(14);
  for (const TransformMode mode : {TransformMode::kGlobalDisentangled,
                                   TransformMode::kLocalDisentangled, TransformMode::kBasic}) {
    TransformAccumulator acc = TransformAccumulator::identity(Vec3(0.1, 0.2, 0.3));
    acc = accumulate(acc, random_transform(rng), mode);
    const TransformAccumulator same = accumulate(acc, RigidTransform{}, mode);
    CHECK(test_helpers::max_abs_diff(same.rotation, acc.rotation) == 0.0);
    CHECK((same.translation - acc.translation).norm() == 0.0);

    TransformAccumulator from_zero = TransformAccumulator::identity(Vec3::Zero());
    RigidTransform t1, t2;
    t1.translation = Vec3(0.1, -0.2, 0.3);
    t2.translation = Vec3(0.4, 0.5, -0.6);
    from_zero = accumulate(accumulate(from_zero, t1, mode), t2, mode);
    CHECK((from_zero.translation - (t1.translation + t2.translation)).norm() < 1e-15);
    CHECK(test_helpers::max_abs_diff(from_zero.rotation, Mat3::Identity()) == 0.0);
  }
}

TEST_CASE("global accumulation is a left matrix product") {
  RigidTransform rx, ry;
  rx.rotation = rot_x(deg_to_rad(10));
  ry.rotation = rot_y(deg_to_rad(20));
  TransformAccumulator acc = TransformAccumulator::identity(Vec3::Zero());
  acc = accumulate(acc, rx, TransformMode::kGlobalDisentangled);
  acc = accumulate(acc, ry, TransformMode::kGlobalDisentangled);
  // direct product oracle
  const Mat3 expected = rot_y(deg_to_rad(20)) * rot_x(deg_to_rad(10));
  CHECK(test_helpers::max_abs_diff(acc.rotation, expected) == 0.0);
}

TEST_CASE("apply_accumulator keeps the centroid fixed under pure rotation") {
  Rng rng(15);
  const PointCloud cloud = random_cloud(rng, 64);
  TransformAccumulator acc = TransformAccumulator::identity(centroid(cloud));
  RigidTransform step;
  step.rotation = test_helpers::random_rotation(rng);
  acc = accumulate(acc, step, TransformMode::kGlobalDisentangled);
  const PointCloud moved = apply_accumulator(cloud, acc, TransformMode::kGlobalDisentangled);
  CHECK((centroid(moved) - centroid(cloud)).norm() < 1e-9);
}

TEST_CASE("apply_accumulator matches stepwise centroid-anchored application") {
  // Oracle: apply each step by rotating about the current cloud centroid and
  // translating, which is what the disentangled accumulator must reproduce.
  Rng rng(16);
  for (int trial = 0; trial < 20; ++trial) {
    const PointCloud cloud = random_cloud(rng, 32);
    TransformAccumulator acc = TransformAccumulator::identity(centroid(cloud));
    PointCloud stepwise = cloud;
    for (int s = 0; s < 5; ++s) {
      const RigidTransform step = random_transform(rng, 0.3);
      acc = accumulate(acc, step, TransformMode::kGlobalDisentangled);
      const Vec3 mu = centroid(stepwise);
      for (Vec3& p : stepwise) p = step.rotation * (p - mu) + mu + step.translation;
    }
    const PointCloud direct = apply_accumulator(cloud, acc, TransformMode::kGlobalDisentangled);
    CHECK(test_helpers::max_cloud_diff(direct, stepwise) < 1e-9);
  }
}

TEST_CASE("disentanglement: centroid displacement equals accumulated translation") {
  Rng rng(17);
  for (const TransformMode mode :
       {TransformMode::kGlobalDisentangled, TransformMode::kLocalDisentangled}) {
    const PointCloud cloud = random_cloud(rng, 48);
    TransformAccumulator acc = TransformAccumulator::identity(centroid(cloud));
    for (int s = 0; s < 6; ++s) acc = accumulate(acc, random_transform(rng, 0.4), mode);
    const PointCloud moved = apply_accumulator(cloud, acc, mode);
    CHECK((centroid(moved) - (centroid(cloud) + acc.translation)).norm() < 1e-9);
  }
}

TEST_CASE("global-mode axis alignment: appended x-step acts as a world-frame x rotation") {
  Rng rng(18);
  const PointCloud cloud = random_cloud(rng, 40);
  TransformAccumulator acc = TransformAccumulator::identity(centroid(cloud));
  for (int s = 0; s < 4; ++s) {
    acc = accumulate(acc, random_transform(rng, 0.3), TransformMode::kGlobalDisentangled);
  }
  const double theta = 0.21;
  RigidTransform xstep;
  xstep.rotation = rot_x(theta);
  const TransformAccumulator after =
      accumulate(acc, xstep, TransformMode::kGlobalDisentangled);

  const PointCloud before_cloud = apply_accumulator(cloud, acc, TransformMode::kGlobalDisentangled);
  const PointCloud after_cloud = apply_accumulator(cloud, after, TransformMode::kGlobalDisentangled);
  // Oracle: rotate the intermediate cloud about its own (translated) centroid
  // with a world-frame x rotation.
  const Vec3 mu = centroid(before_cloud);
  double worst = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3 expected = rot_x(theta) * (before_cloud[i] - mu) + mu;
    worst = std::max(worst, (after_cloud[i] - expected).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("basic mode equals iterated plain application") {
  Rng rng(19);
  const PointCloud cloud = random_cloud(rng, 16);
  TransformAccumulator acc = TransformAccumulator::identity(Vec3::Zero());
  PointCloud iterated = cloud;
  for (int s = 0; s < 5; ++s) {
    const RigidTransform step = random_transform(rng, 0.5);
    acc = accumulate(acc, step, TransformMode::kBasic);
    for (Vec3& p : iterated) p = step.apply(p);
  }
  CHECK(test_helpers::max_cloud_diff(apply_accumulator(cloud, acc, TransformMode::kBasic),
                                     iterated) < 1e-9);
}

TEST_CASE("accumulator/transform conversions invert each other") {
  Rng rng(20);
  for (const TransformMode mode : {TransformMode::kGlobalDisentangled, TransformMode::kBasic}) {
    const RigidTransform t = random_transform(rng);
    const Vec3 origin(0.2, -0.4, 0.6);
    const TransformAccumulator acc = transform_to_accumulator(t, origin, mode);
    const RigidTransform back = accumulator_to_transform(acc, mode);
    CHECK(test_helpers::max_abs_diff(back.rotation, t.rotation) < 1e-12);
    CHECK((back.translation - t.translation).norm() < 1e-12);

    const PointCloud cloud = random_cloud(rng, 8);
    CHECK(test_helpers::max_cloud_diff(apply_accumulator(cloud, acc, mode),
                                       apply_rigid(cloud, t)) < 1e-12);
  }
}

TEST_CASE("chamfer basics") {
  const PointCloud x{{0, 0, 0}};
  const PointCloud y{{1, 0, 0}};
  CHECK(chamfer(x, x) == 0.0);
  CHECK(chamfer(x, y) == 1.0);
  CHECK_THROWS_AS(chamfer({}, y), InvalidInput);
  CHECK_THROWS_AS(chamfer(x, {}), InvalidInput);
}

TEST_CASE("chamfer matches brute force on random clouds") {
  Rng rng(21);
  const PointCloud x = random_cloud(rng, 64);
  const PointCloud y = random_cloud(rng, 64);
  CHECK(chamfer(x, y) == Catch::Approx(chamfer_bruteforce(x, y)).margin(1e-12));
}

TEST_CASE("chamfer grid path agrees with the linear path") {
  Rng rng(22);
  const PointCloud big = random_cloud(rng, 5000);  // above the grid threshold
  const PointCloud query = random_cloud(rng, 200, 1.4);
  const double fast = chamfer(query, big);
  CHECK(fast == Catch::Approx(chamfer_bruteforce(query, big)).margin(1e-12));

  // grid index agrees point-by-point with a linear scan
  const NearestNeighborGrid grid(big);
  for (const Vec3& q : query) {
    CHECK(grid.nearest(q).second ==
          Catch::Approx(test_helpers::chamfer_bruteforce({q}, big)).margin(1e-15));
  }
}

TEST_CASE("chamfer rigid and permutation invariance") {
  Rng rng(23);
  const PointCloud x = random_cloud(rng, 40);
  const PointCloud y = random_cloud(rng, 52);
  const double base = chamfer(x, y);

  const RigidTransform t = random_transform(rng);
  CHECK(chamfer(apply_rigid(x, t), apply_rigid(y, t)) == Catch::Approx(base).margin(1e-9));

  PointCloud xs = x, ys = y;
  rng.shuffle(xs);
  rng.shuffle(ys);
  CHECK(chamfer(xs, ys) == Catch::Approx(base).margin(1e-15));
}

TEST_CASE("modified chamfer") {
  Rng rng(24);
  const PointCloud x = random_cloud(rng, 24);
  CHECK(modified_chamfer(x, x, x, x) == 0.0);

  const PointCloud a{{0, 0, 0}};
  const PointCloud b{{1, 0, 0}};
  CHECK(modified_chamfer(a, b, a, b) == 2.0);

  const PointCloud y = random_cloud(rng, 30);
  const PointCloud xc = random_cloud(rng, 24);
  const PointCloud yc = random_cloud(rng, 30);
  CHECK(modified_chamfer(x, y, xc, yc) ==
        Catch::Approx(chamfer_bruteforce(x, yc) + chamfer_bruteforce(y, xc)).margin(1e-12));
}

TEST_CASE("rigid transform inverse and compose") {
  Rng rng(25);
  const RigidTransform t = random_transform(rng);
  const RigidTransform id = t.compose(t.inverse());
  CHECK(test_helpers::max_abs_diff(id.rotation, Mat3::Identity()) < 1e-12);
  CHECK(id.translation.norm() < 1e-12);

  const RigidTransform a = random_transform(rng), b = random_transform(rng);
  const Vec3 p(0.3, 0.7, -0.2);
  CHECK((a.compose(b).apply(p) - a.apply(b.apply(p))).norm() < 1e-12);
}
