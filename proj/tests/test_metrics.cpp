#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "pcreg/metrics.hpp"

using namespace pcreg;
using test_helpers::random_cloud;
using test_helpers::random_transform;

TEST_CASE("mae basics") {
  Rng rng(31);
  const RigidTransform t = random_transform(rng);
  const auto [mr, mt] = mae(t, t);
  CHECK(mr == 0.0);
  CHECK(mt == 0.0);

  RigidTransform est, truth;
  est.rotation = euler_to_rotation({deg_to_rad(10), deg_to_rad(20), deg_to_rad(30)});
  est.translation = Vec3(0.3, 0, 0);
  const auto [mr2, mt2] = mae(est, truth);
  CHECK(mr2 == Catch::Approx(20.0).margin(1e-9));
  CHECK(mt2 == Catch::Approx(0.1).margin(1e-12));
}

TEST_CASE("mae matches an independent euler recomputation") {
  Rng rng(32);
  for (int i = 0; i < 20; ++i) {
    const RigidTransform est = random_transform(rng);
    const RigidTransform truth = random_transform(rng);
    const EulerAngles ee = rotation_to_euler(est.rotation);
    const EulerAngles et = rotation_to_euler(truth.rotation);
    const double expect_rot =
        rad_to_deg((std::abs(ee.x - et.x) + std::abs(ee.y - et.y) + std::abs(ee.z - et.z)) / 3.0);
    double expect_trans = 0.0;
    for (int k = 0; k < 3; ++k) expect_trans += std::abs(est.translation[k] - truth.translation[k]);
    expect_trans /= 3.0;
    const auto [mr, mt] = mae(est, truth);
    CHECK(mr == Catch::Approx(expect_rot).margin(1e-12));
    CHECK(mt == Catch::Approx(expect_trans).margin(1e-12));
  }
}

TEST_CASE("iso basics") {
  const auto [ir0, it0] = iso(RigidTransform{}, RigidTransform{});
  CHECK(ir0 == 0.0);
  CHECK(it0 == 0.0);

  RigidTransform est;
  est.rotation = rot_z(deg_to_rad(30));
  est.translation = Vec3(3, 4, 0);
  const auto [ir, it] = iso(est, RigidTransform{});
  CHECK(ir == Catch::Approx(30.0).margin(1e-9));
  CHECK(it == Catch::Approx(5.0).margin(1e-12));
}

TEST_CASE("iso equals the constructed axis-angle rotation angle") {
  Rng rng(33);
  for (int i = 0; i < 50; ++i) {
    const double angle = rng.uniform(0, M_PI - 1e-6);
    const Vec3 axis = rng.unit_vector();
    RigidTransform est;
    est.rotation = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
    const auto [ir, it] = iso(est, RigidTransform{});
    CHECK(ir == Catch::Approx(rad_to_deg(angle)).margin(1e-9 * 180.0 / M_PI));
    CHECK(it == 0.0);
  }
}

TEST_CASE("iso is symmetric in its arguments") {
  Rng rng(34);
  const RigidTransform a = random_transform(rng), b = random_transform(rng);
  CHECK(iso(a, b).first == Catch::Approx(iso(b, a).first).margin(1e-9));
}

TEST_CASE("add and adi") {
  Rng rng(35);
  const PointCloud x = random_cloud(rng, 32);
  const auto [add0, adi0] = add_adi(x, x);
  CHECK(add0 == 0.0);
  CHECK(adi0 == 0.0);

  PointCloud offset = x;
  for (Vec3& p : offset) p.x() += 0.1;
  const auto [add1, adi1] = add_adi(offset, x);
  CHECK(add1 == Catch::Approx(0.1).margin(1e-12));
  CHECK(adi1 <= add1 + 1e-15);

  PointCloud shorter = x;
  shorter.pop_back();
  CHECK_THROWS_AS(add_adi(shorter, x), InvalidInput);
}

TEST_CASE("add/adi match brute-force oracles") {
  Rng rng(36);
  const PointCloud est = random_cloud(rng, 64);
  const PointCloud truth = random_cloud(rng, 64);
  double add_expect = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) add_expect += (truth[i] - est[i]).norm();
  add_expect /= static_cast<double>(truth.size());
  double adi_expect = 0.0;
  for (const Vec3& y : truth) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec3& p : est) best = std::min(best, (y - p).norm());
    adi_expect += best;
  }
  adi_expect /= static_cast<double>(truth.size());

  const auto [add_v, adi_v] = add_adi(est, truth);
  CHECK(add_v == Catch::Approx(add_expect).margin(1e-12));
  CHECK(adi_v == Catch::Approx(adi_expect).margin(1e-12));
  CHECK(adi_v <= add_v);
}

TEST_CASE("adi_auc canonical values") {
  const double d = 2.0;
  const std::vector<double> zeros(10, 0.0);
  CHECK(adi_auc(zeros, d) == 1.0);

  const std::vector<double> far(10, 0.5);  // all beyond 0.1 * d = 0.2
  CHECK(adi_auc(far, d) == 0.0);

  std::vector<double> half = zeros;
  half.insert(half.end(), far.begin(), far.end());
  CHECK(adi_auc(half, d) == 0.5);

  CHECK_THROWS_AS(adi_auc(zeros, 0.0), InvalidInput);
}

TEST_CASE("adi_auc equals the direct threshold-grid evaluation") {
  Rng rng(37);
  std::vector<double> values;
  for (int i = 0; i < 37; ++i) values.push_back(rng.uniform(0, 0.3));
  const double d = 1.7;
  double acc = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double th = 1e-3 * k * d;
    int hits = 0;
    for (const double v : values) hits += v <= th;
    acc += static_cast<double>(hits) / static_cast<double>(values.size());
  }
  CHECK(adi_auc(values, d) == Catch::Approx(acc / 100.0).margin(1e-12));
}

TEST_CASE("adi_auc monotonicity and recall curve shape") {
  Rng rng(38);
  std::vector<double> values;
  for (int i = 0; i < 25; ++i) values.push_back(rng.uniform(0, 0.2));
  const double d = 1.0;

  const RecallCurve curve = adi_recall_curve(values, d);
  REQUIRE(curve.recalls.size() == 100);
  for (std::size_t i = 1; i < curve.recalls.size(); ++i) {
    CHECK(curve.recalls[i] >= curve.recalls[i - 1]);
    CHECK(curve.thresholds[i] > curve.thresholds[i - 1]);
  }

  std::vector<double> smaller = values;
  for (double& v : smaller) v *= 0.5;
  CHECK(adi_auc(smaller, d) >= adi_auc(values, d));
}
