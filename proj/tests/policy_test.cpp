#include <cmath>
#include <random>

#include <Eigen/Geometry>

#include "doctest.h"
#include "btw/error.hpp"
#include "btw/policy.hpp"

using namespace btw;
using namespace btw::policy;
using layout::Distance;
using layout::Zone;

namespace {

Eigen::Vector3d e(const Vec3& v) { return {v.x, v.y, v.z}; }

Eigen::Vector3d face_normal(const Quat& q) {
  return Eigen::Quaterniond(q.w, q.x, q.y, q.z) * Eigen::Vector3d::UnitZ();
}

PanelPose pose_at(Vec3 p) {
  PanelPose pose;
  pose.position = p;
  return pose;
}

}  // namespace

TEST_CASE("input_mode thresholds with defaults") {
  PolicyConfig cfg;
  CHECK(input_mode(0.4, InputMode::kRay, cfg) == InputMode::kTouch);
  CHECK(input_mode(0.7, InputMode::kTouch, cfg) == InputMode::kTouch);
  CHECK(input_mode(0.7, InputMode::kRay, cfg) == InputMode::kRay);
  CHECK(input_mode(0.9, InputMode::kTouch, cfg) == InputMode::kRay);
  CHECK(input_mode(0.6, InputMode::kRay, cfg) == InputMode::kTouch);
  CHECK(input_mode(0.75, InputMode::kTouch, cfg) == InputMode::kRay);
}

TEST_CASE("a sweep up and back changes mode exactly twice") {
  PolicyConfig cfg;
  InputMode mode = InputMode::kTouch;
  int transitions = 0;
  auto step = [&](int cm) {
    InputMode next = input_mode(cm / 100.0, mode, cfg);
    if (next != mode) ++transitions;
    mode = next;
  };
  for (int cm = 0; cm <= 120; ++cm) step(cm);
  CHECK(mode == InputMode::kRay);
  for (int cm = 120; cm >= 0; --cm) step(cm);
  CHECK(mode == InputMode::kTouch);
  CHECK(transitions == 2);
}

TEST_CASE("jitter inside the band never flips the mode") {
  PolicyConfig cfg;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> band(0.6001, 0.7499);
  for (InputMode start : {InputMode::kTouch, InputMode::kRay}) {
    InputMode m = start;
    for (int i = 0; i < 1000; ++i) m = input_mode(band(rng), m, cfg);
    CHECK(m == start);
  }
}

TEST_CASE("reach distance is measured from the user reference") {
  PolicyConfig cfg;
  CHECK(reach_distance(pose_at({0, 0.45, -0.8}), cfg) == doctest::Approx(0.8));
}

TEST_CASE("a pose just above the desk snaps onto it") {
  PolicyConfig cfg;
  PanelPose p = pose_at({0.2, 0.03, -0.3});
  auto r = snap_pose(p, cfg.surfaces, cfg);
  CHECK(r.anchored);
  CHECK(r.surface == std::optional<std::size_t>(0));
  // Point-plane projection: drop the normal component of (p - origin).
  const auto& s = cfg.surfaces[0];
  Eigen::Vector3d n = e(s.normal);
  Eigen::Vector3d c = e(p.position);
  Eigen::Vector3d want = c - n * (c - e(s.origin)).dot(n);
  CHECK((e(r.pose.position) - want).norm() < 1e-12);
  CHECK((face_normal(r.pose.orientation) - n).norm() < 1e-9);
  CHECK(r.pose.size == p.size);
}

TEST_CASE("poses far from the plane or outside its extent are unchanged") {
  PolicyConfig cfg;
  auto far = snap_pose(pose_at({0, 0.5, -0.4}), cfg.surfaces, cfg);
  CHECK_FALSE(far.anchored);
  CHECK(far.pose == pose_at({0, 0.5, -0.4}));

  // Desk spans x in [-0.8, 0.8] and z in [-0.8, 0].
  for (Vec3 p : {Vec3{0.81, 0.02, -0.4}, Vec3{0, 0.02, 0.01},
                 Vec3{0, -0.02, -0.81}}) {
    const Eigen::Vector3d off = e(p) - e(cfg.surfaces[0].origin);
    const bool inside = std::abs(off.x()) <= 0.8 && std::abs(off.z()) <= 0.4;
    CHECK_FALSE(inside);
    auto r = snap_pose(pose_at(p), cfg.surfaces, cfg);
    CHECK_FALSE(r.anchored);
    CHECK(r.pose == pose_at(p));
  }
}

TEST_CASE("snapping picks the nearest plane, ties to the lowest index") {
  PolicyConfig cfg;
  std::vector<SurfacePlane> planes{
      {{0, 0, -0.4}, {0, 1, 0}, 1.6, 0.8},
      {{0, 0.04, -0.4}, {0, 1, 0}, 1.6, 0.8},
  };
  auto r = snap_pose(pose_at({0, 0.03, -0.4}), planes, cfg);
  CHECK(r.surface == std::optional<std::size_t>(1));
  planes[1].origin.y = 0.06;
  r = snap_pose(pose_at({0, 0.03, -0.4}), planes, cfg);
  CHECK(r.surface == std::optional<std::size_t>(0));
}

TEST_CASE("snap is idempotent") {
  PolicyConfig cfg;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> x(-0.7, 0.7), y(-0.04, 0.04),
      z(-0.75, -0.05), angle(-3, 3);
  for (int i = 0; i < 200; ++i) {
    PanelPose p = pose_at({x(rng), y(rng), z(rng)});
    Eigen::Quaterniond q(Eigen::AngleAxisd(angle(rng),
                                           Eigen::Vector3d(x(rng), 1, z(rng)).normalized()));
    p.orientation = {q.w(), q.x(), q.y(), q.z()};
    auto once = snap_pose(p, cfg.surfaces, cfg);
    REQUIRE(once.anchored);
    auto twice = snap_pose(once.pose, cfg.surfaces, cfg);
    CHECK(twice.anchored);
    CHECK((e(twice.pose.position) - e(once.pose.position)).norm() < 1e-12);
    CHECK(std::abs(twice.pose.orientation.w - once.pose.orientation.w) < 1e-9);
    CHECK(std::abs(twice.pose.orientation.y - once.pose.orientation.y) < 1e-9);
  }
}

TEST_CASE("placement reads the default anchor table") {
  PolicyConfig cfg;
  auto pose = placement_from_hint({Zone::kMidairCenter, Distance::kMid, 1}, cfg);
  CHECK(pose.position.x == doctest::Approx(0));
  CHECK(pose.position.y == doctest::Approx(0.45));
  CHECK(pose.position.z == doctest::Approx(-0.8));
  // Facing the user: face normal points toward +z.
  CHECK((face_normal(pose.orientation) - Eigen::Vector3d::UnitZ()).norm() < 1e-12);
  CHECK(pose.valid());

  auto scaled = placement_from_hint({Zone::kMidairCenter, Distance::kMid, 2}, cfg);
  CHECK(scaled.size.w == doctest::Approx(2 * pose.size.w));
}

TEST_CASE("side panels turn toward the user") {
  PolicyConfig cfg;
  auto pose = placement_from_hint({Zone::kMidairSide, Distance::kMid, 1}, cfg);
  Eigen::Vector3d to_user = e(cfg.user_reference) - e(pose.position);
  to_user.y() = 0;
  CHECK((face_normal(pose.orientation) - to_user.normalized()).norm() < 1e-9);
}

TEST_CASE("surface placement lies flat on the desk") {
  PolicyConfig cfg;
  auto pose = placement_from_hint({Zone::kSurface, Distance::kNear, 1}, cfg);
  CHECK(pose.position.y == doctest::Approx(0));
  CHECK((face_normal(pose.orientation) - Eigen::Vector3d::UnitY()).norm() < 1e-12);
  CHECK(snap_pose(pose, cfg.surfaces, cfg).anchored);
}

TEST_CASE("initial mode follows the interaction hint") {
  PolicyConfig cfg;
  CHECK(initial_mode(layout::InteractionHint::kAuto, 0.3, cfg) == InputMode::kTouch);
  CHECK(initial_mode(layout::InteractionHint::kAuto, 1.0, cfg) == InputMode::kRay);
  CHECK(initial_mode(layout::InteractionHint::kTouch, 0.7, cfg) == InputMode::kTouch);
  CHECK(initial_mode(layout::InteractionHint::kRay, 0.7, cfg) == InputMode::kRay);
  // A hint cannot override a distance outside the band.
  CHECK(initial_mode(layout::InteractionHint::kTouch, 1.0, cfg) == InputMode::kRay);
}

TEST_CASE("panels sharing a slot are spread side by side") {
  PolicyConfig cfg;
  std::vector<PanelPlacementRequest> reqs{
      {{Zone::kSurface, Distance::kNear, 1}, 0},
      {{Zone::kSurface, Distance::kNear, 1}, 0},
      {{Zone::kMidairCenter, Distance::kMid, 1}, 0.5},
  };
  auto poses = initial_poses(reqs, cfg);
  REQUIRE(poses.size() == 3);
  CHECK(poses[0].position.x < poses[1].position.x);
  CHECK(poses[0].position.x == doctest::Approx(-poses[1].position.x));
  const double gap = poses[1].position.x - poses[0].position.x -
                     (poses[0].size.w + poses[1].size.w) / 2;
  CHECK(gap == doctest::Approx(0.05));
  CHECK(poses[2].size.h == doctest::Approx(poses[2].size.w * 0.5));
}

TEST_CASE("config validation") {
  PolicyConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.d_touch = 0.8;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = PolicyConfig{};
  cfg.surfaces[0].normal = {0, 2, 0};
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = PolicyConfig{};
  cfg.anchors.erase({Zone::kPeripheral, Distance::kFar});
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("pose validity") {
  PanelPose p;
  CHECK(p.valid());
  p.orientation = {2, 0, 0, 0};
  CHECK_FALSE(p.valid());
  p = PanelPose{};
  p.size.w = 0;
  CHECK_FALSE(p.valid());
  p = PanelPose{};
  p.position.x = std::nan("");
  CHECK_FALSE(p.valid());
}
