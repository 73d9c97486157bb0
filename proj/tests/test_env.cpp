#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "pcreg/env.hpp"

using namespace pcreg;
using test_helpers::random_cloud;
using test_helpers::random_transform;

TEST_CASE("step table matches the published list exactly") {
  const StepTable table;
  const std::array<double, 11> expected{-0.27, -0.09, -0.03, -0.01, -0.0033, 0.0,
                                        0.0033, 0.01,  0.03,  0.09,  0.27};
  for (int i = 0; i < 11; ++i) CHECK(table.steps[static_cast<std::size_t>(i)] == expected[static_cast<std::size_t>(i)]);
  CHECK(table.steps[StepTable::kStopIndex] == 0.0);
  // antisymmetric around the stop index, strictly increasing
  for (int i = 0; i < 11; ++i) CHECK(table.steps[static_cast<std::size_t>(i)] == -table.steps[static_cast<std::size_t>(10 - i)]);
  for (int i = 1; i < 11; ++i) CHECK(table.steps[static_cast<std::size_t>(i)] > table.steps[static_cast<std::size_t>(i - 1)]);
}

TEST_CASE("decode_action") {
  SECTION("all stop is the identity") {
    const RigidTransform t = decode_action(ActionVector::all_stop());
    CHECK(test_helpers::max_abs_diff(t.rotation, Mat3::Identity()) == 0.0);
    CHECK(t.translation.norm() == 0.0);
  }
  SECTION("single rotation step") {
    ActionVector a;
    a.rot = {10, 5, 5};
    const RigidTransform t = decode_action(a);
    CHECK(test_helpers::max_abs_diff(t.rotation, rot_x(0.27)) == 0.0);
    CHECK(t.translation.norm() == 0.0);
  }
  SECTION("single translation step") {
    ActionVector a;
    a.trans = {5, 5, 0};
    const RigidTransform t = decode_action(a);
    CHECK(test_helpers::max_abs_diff(t.rotation, Mat3::Identity()) == 0.0);
    CHECK((t.translation - Vec3(0, 0, -0.27)).norm() == 0.0);
  }
  SECTION("out of range index throws") {
    ActionVector a;
    a.rot = {11, 5, 5};
    CHECK_THROWS_AS(decode_action(a), InvalidInput);
  }
}

TEST_CASE("reward cases use the published constants") {
  CHECK(reward(1.0, 0.5) == 0.5);
  CHECK(reward(1.0, 1.0) == -0.1);
  CHECK(reward(0.5, 1.0) == -0.6);
  // ties within tolerance count as equal
  CHECK(reward(1.0, 1.0 + 5e-13) == -0.1);
}

TEST_CASE("reward image is exactly the three values") {
  Rng rng(41);
  for (int i = 0; i < 200; ++i) {
    const double a = rng.uniform(0, 2), b = rng.uniform(0, 2);
    const double r = reward(a, b);
    CHECK((r == 0.5 || r == -0.1 || r == -0.6));
  }
}

TEST_CASE("reset invariants") {
  Rng rng(42);
  const PointCloud source = random_cloud(rng, 32);
  const PointCloud target = random_cloud(rng, 32);

  SECTION("identity truth gives zero initial chamfer") {
    Episode ep(source, target, RigidTransform{});
    CHECK(ep.prev_cd() == 0.0);
    CHECK(ep.step_count() == 0);
    CHECK(test_helpers::max_abs_diff(ep.accumulator().rotation, Mat3::Identity()) == 0.0);
    CHECK((ep.accumulator().origin - centroid(source)).norm() == 0.0);
  }
  SECTION("prev_cd equals chamfer against the inverse-transformed source") {
    const RigidTransform truth = random_transform(rng, 0.3);
    Episode ep(source, target, truth);
    const PointCloud true_source = apply_rigid(source, truth.inverse());
    CHECK(ep.prev_cd() ==
          Catch::Approx(test_helpers::chamfer_bruteforce(source, true_source)).margin(1e-12));
  }
  SECTION("empty cloud rejected") {
    CHECK_THROWS_AS(Episode({}, target), InvalidInput);
  }
}

TEST_CASE("stepping") {
  Rng rng(43);
  const PointCloud source = random_cloud(rng, 24);
  const PointCloud target = random_cloud(rng, 24);

  SECTION("all-stop leaves the cloud unchanged and pays the pause penalty") {
    Episode ep(source, target, RigidTransform{});
    const auto res = ep.step(ActionVector::all_stop());
    CHECK(test_helpers::max_cloud_diff(res.source, source) == 0.0);
    REQUIRE(res.reward.has_value());
    CHECK(*res.reward == -0.1);
  }

  SECTION("an exact inverse step earns the positive reward") {
    // offset the source by one +x translation step; truth = that offset
    RigidTransform truth;
    truth.translation = Vec3(0.27, 0, 0);
    const PointCloud offset_source = apply_rigid(source, truth);
    Episode ep(offset_source, target, truth);
    ActionVector a;
    a.trans = {0, 5, 5};  // -0.27 along x
    const auto res = ep.step(a);
    REQUIRE(res.reward.has_value());
    CHECK(*res.reward == 0.5);
    CHECK(ep.prev_cd() < 1e-22);
  }

  SECTION("fixed horizon and InvalidState afterwards") {
    EnvConfig cfg;
    cfg.n_max = 3;
    Episode ep(source, target, {}, cfg);
    for (int i = 0; i < 3; ++i) {
      CHECK_FALSE(ep.done());
      ep.step(ActionVector::all_stop());
    }
    CHECK(ep.done());
    CHECK_THROWS_AS(ep.step(ActionVector::all_stop()), InvalidState);
  }

  SECTION("without truth there is no reward") {
    Episode ep(source, target);
    const auto res = ep.step(ActionVector::all_stop());
    CHECK_FALSE(res.reward.has_value());
  }
}

TEST_CASE("random rollout matches the accumulator oracle") {
  Rng rng(44);
  const PointCloud source = random_cloud(rng, 20);
  const PointCloud target = random_cloud(rng, 20);
  Episode ep(source, target);
  TransformAccumulator oracle = TransformAccumulator::identity(centroid(source));
  for (int s = 0; s < 10; ++s) {
    ActionVector a;
    for (int k = 0; k < 3; ++k) {
      a.rot[static_cast<std::size_t>(k)] = static_cast<int>(rng.uniform_int(0, 10));
      a.trans[static_cast<std::size_t>(k)] = static_cast<int>(rng.uniform_int(0, 10));
    }
    oracle = accumulate(oracle, decode_action(a), TransformMode::kGlobalDisentangled);
    ep.step(a);
  }
  const PointCloud expected =
      apply_accumulator(source, oracle, TransformMode::kGlobalDisentangled);
  CHECK(test_helpers::max_cloud_diff(ep.current_source(), expected) < 1e-9);
}

TEST_CASE("episodes are bitwise reproducible") {
  Rng rng(45);
  const PointCloud source = random_cloud(rng, 16);
  const PointCloud target = random_cloud(rng, 16);
  const RigidTransform truth = random_transform(rng, 0.2);

  std::vector<ActionVector> actions;
  for (int s = 0; s < 10; ++s) {
    ActionVector a;
    for (int k = 0; k < 3; ++k) {
      a.rot[static_cast<std::size_t>(k)] = static_cast<int>(rng.uniform_int(0, 10));
      a.trans[static_cast<std::size_t>(k)] = static_cast<int>(rng.uniform_int(0, 10));
    }
    actions.push_back(a);
  }

  const auto run = [&]() {
    Episode ep(source, target, truth);
    for (const auto& a : actions) ep.step(a);
    return ep.accumulator();
  };
  const TransformAccumulator a1 = run(), a2 = run();
  CHECK(test_helpers::max_abs_diff(a1.rotation, a2.rotation) == 0.0);
  CHECK((a1.translation - a2.translation).norm() == 0.0);
}

TEST_CASE("trace records serialize") {
  Rng rng(46);
  const PointCloud source = random_cloud(rng, 8);
  const PointCloud target = random_cloud(rng, 8);
  Episode ep(source, target, RigidTransform{});
  TraceRecord rec;
  ActionVector a;
  a.rot = {10, 5, 5};
  ep.step(a, &rec);
  const nlohmann::json j = to_json(rec);
  CHECK(j["step"] == 1);
  CHECK(j["rot_idx"][0] == 10);
  CHECK(j["reward"].is_number());
  CHECK(j["decoded"]["euler_rad"][0] == Catch::Approx(0.27).margin(1e-15));
  CHECK(j["accumulator"]["rotation"].size() == 3);
}
