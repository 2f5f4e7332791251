#include "btw/policy.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Geometry>

#include "btw/error.hpp"

namespace btw::policy {

namespace {

using layout::Distance;
using layout::Zone;

Eigen::Vector3d to_eigen(const Vec3& v) { return {v.x, v.y, v.z}; }
Vec3 from_eigen(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

Eigen::Quaterniond to_eigen(const Quat& q) { return {q.w, q.x, q.y, q.z}; }
Quat from_eigen(const Eigen::Quaterniond& q) {
  return {q.w(), q.x(), q.y(), q.z()};
}

bool finite(const Vec3& v) {
  return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

// In-plane axes for bounding a surface: world x projected onto the plane,
// falling back to world z when the normal is (nearly) parallel to x.
std::pair<Eigen::Vector3d, Eigen::Vector3d> surface_axes(
    const Eigen::Vector3d& n) {
  Eigen::Vector3d u = Eigen::Vector3d::UnitX() - n * n.x();
  if (u.norm() < 1e-6) u = Eigen::Vector3d::UnitZ() - n * n.z();
  u.normalize();
  return {u, n.cross(u)};
}

// Rotation about +y turning the panel face toward the user reference point.
Eigen::Quaterniond face_user(const Vec3& at, const PolicyConfig& cfg) {
  const double dx = cfg.user_reference.x - at.x;
  const double dz = cfg.user_reference.z - at.z;
  if (std::hypot(dx, dz) < 1e-12) return Eigen::Quaterniond::Identity();
  return Eigen::Quaterniond(
      Eigen::AngleAxisd(std::atan2(dx, dz), Eigen::Vector3d::UnitY()));
}

Eigen::Quaterniond lie_flat(const Eigen::Vector3d& normal) {
  return Eigen::Quaterniond::FromTwoVectors(Eigen::Vector3d::UnitZ(), normal);
}

}  // namespace

bool PanelPose::valid() const {
  const double norm2 = orientation.w * orientation.w +
                       orientation.x * orientation.x +
                       orientation.y * orientation.y +
                       orientation.z * orientation.z;
  return finite(position) && std::isfinite(norm2) &&
         std::abs(std::sqrt(norm2) - 1) <= 1e-6 && std::isfinite(size.w) &&
         std::isfinite(size.h) && size.w > 0 && size.h > 0;
}

std::string_view to_string(InputMode m) {
  return m == InputMode::kTouch ? "touch" : "ray";
}

std::optional<InputMode> input_mode_from_string(std::string_view s) {
  if (s == "touch") return InputMode::kTouch;
  if (s == "ray") return InputMode::kRay;
  return std::nullopt;
}

SurfacePlane PolicyConfig::default_desk() {
  return {{0, 0, -0.4}, {0, 1, 0}, 1.6, 0.8};
}

std::map<AnchorKey, ZoneAnchor> PolicyConfig::default_anchors() {
  return {
      {{Zone::kSurface, Distance::kNear}, {{0, 0, -0.25}, {0.5, 0.3}}},
      {{Zone::kSurface, Distance::kMid}, {{0, 0, -0.45}, {0.5, 0.3}}},
      {{Zone::kSurface, Distance::kFar}, {{0, 0, -0.65}, {0.5, 0.3}}},
      {{Zone::kMidairCenter, Distance::kNear}, {{0, 0.45, -0.55}, {0.7, 0.4}}},
      {{Zone::kMidairCenter, Distance::kMid}, {{0, 0.45, -0.8}, {0.9, 0.5}}},
      {{Zone::kMidairCenter, Distance::kFar}, {{0, 0.5, -1.2}, {1.2, 0.7}}},
      {{Zone::kMidairSide, Distance::kNear}, {{0.45, 0.45, -0.5}, {0.4, 0.3}}},
      {{Zone::kMidairSide, Distance::kMid}, {{0.6, 0.45, -0.7}, {0.45, 0.35}}},
      {{Zone::kMidairSide, Distance::kFar}, {{0.85, 0.5, -1.0}, {0.6, 0.45}}},
      {{Zone::kPeripheral, Distance::kNear}, {{-0.6, 0.5, -0.55}, {0.4, 0.3}}},
      {{Zone::kPeripheral, Distance::kMid}, {{-0.8, 0.55, -0.8}, {0.45, 0.35}}},
      {{Zone::kPeripheral, Distance::kFar}, {{-1.0, 0.6, -1.3}, {0.6, 0.45}}},
  };
}

void PolicyConfig::validate() const {
  if (!(d_touch > 0 && d_touch < d_ray && std::isfinite(d_ray))) {
    throw Error(ErrorCode::kValidation,
                "policy: require 0 < d_touch < d_ray");
  }
  if (!(snap_threshold > 0 && std::isfinite(snap_threshold))) {
    throw Error(ErrorCode::kValidation, "policy: snap_threshold must be > 0");
  }
  if (!finite(user_reference)) {
    throw Error(ErrorCode::kValidation, "policy: user_reference not finite");
  }
  for (std::size_t i = 0; i < surfaces.size(); ++i) {
    const auto& s = surfaces[i];
    const double n = to_eigen(s.normal).norm();
    if (!finite(s.origin) || !(std::abs(n - 1) <= 1e-6) ||
        !(s.extent_w > 0 && s.extent_d > 0)) {
      throw Error(ErrorCode::kValidation,
                  "policy: surfaces[" + std::to_string(i) +
                      "] needs a unit normal and positive extent");
    }
  }
  for (Zone z : {Zone::kSurface, Zone::kMidairCenter, Zone::kMidairSide,
                 Zone::kPeripheral}) {
    for (Distance d : {Distance::kNear, Distance::kMid, Distance::kFar}) {
      auto it = anchors.find({z, d});
      if (it == anchors.end()) {
        throw Error(ErrorCode::kValidation,
                    "policy: no anchor for " + std::string(layout::to_string(z)) +
                        "/" + std::string(layout::to_string(d)));
      }
      const auto& a = it->second;
      if (!finite(a.position) || !(a.size.w > 0 && a.size.h > 0)) {
        throw Error(ErrorCode::kValidation, "policy: bad anchor for " +
                                                std::string(layout::to_string(z)));
      }
    }
  }
}

InputMode input_mode(double distance, InputMode prev,
                     const PolicyConfig& cfg) {
  if (distance <= cfg.d_touch) return InputMode::kTouch;
  if (distance >= cfg.d_ray) return InputMode::kRay;
  return prev;
}

double reach_distance(const PanelPose& pose, const PolicyConfig& cfg) {
  return (to_eigen(pose.position) - to_eigen(cfg.user_reference)).norm();
}

SnapResult snap_pose(const PanelPose& pose,
                     std::span<const SurfacePlane> surfaces,
                     const PolicyConfig& cfg) {
  const Eigen::Vector3d c = to_eigen(pose.position);
  std::optional<std::size_t> best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < surfaces.size(); ++i) {
    const SurfacePlane& s = surfaces[i];
    const Eigen::Vector3d n = to_eigen(s.normal).normalized();
    const Eigen::Vector3d offset = c - to_eigen(s.origin);
    const double dist = std::abs(offset.dot(n));
    if (!(dist <= cfg.snap_threshold) || !(dist < best_dist)) continue;
    auto [u, v] = surface_axes(n);
    if (std::abs(offset.dot(u)) > s.extent_w / 2 ||
        std::abs(offset.dot(v)) > s.extent_d / 2) {
      continue;
    }
    best = i;
    best_dist = dist;
  }
  if (!best) return {pose, false, std::nullopt};

  const SurfacePlane& s = surfaces[*best];
  const Eigen::Vector3d n = to_eigen(s.normal).normalized();
  const Eigen::Vector3d projected = c - n * (c - to_eigen(s.origin)).dot(n);
  const Eigen::Quaterniond q = to_eigen(pose.orientation).normalized();
  const Eigen::Vector3d face = q * Eigen::Vector3d::UnitZ();
  const Eigen::Quaterniond aligned =
      (Eigen::Quaterniond::FromTwoVectors(face, n) * q).normalized();

  PanelPose out = pose;
  out.position = from_eigen(projected);
  out.orientation = from_eigen(aligned);
  return {out, true, best};
}

PanelPose placement_from_hint(const layout::PlacementHint& hint,
                              const PolicyConfig& cfg) {
  auto it = cfg.anchors.find({hint.zone, hint.distance});
  if (it == cfg.anchors.end()) {
    throw Error(ErrorCode::kValidation, "policy: missing zone anchor");
  }
  const ZoneAnchor& anchor = it->second;
  PanelPose pose;
  pose.size = {anchor.size.w * hint.scale, anchor.size.h * hint.scale};
  pose.position = anchor.position;
  if (hint.zone == Zone::kSurface) {
    Eigen::Vector3d n = Eigen::Vector3d::UnitY();
    if (!cfg.surfaces.empty()) {
      const SurfacePlane& desk = cfg.surfaces.front();
      n = to_eigen(desk.normal).normalized();
      const Eigen::Vector3d c = to_eigen(anchor.position);
      pose.position =
          from_eigen(c - n * (c - to_eigen(desk.origin)).dot(n));
    }
    pose.orientation = from_eigen(lie_flat(n));
  } else {
    pose.orientation = from_eigen(face_user(pose.position, cfg));
  }
  return pose;
}

InputMode initial_mode(layout::InteractionHint hint, double distance,
                       const PolicyConfig& cfg) {
  InputMode prev;
  switch (hint) {
    case layout::InteractionHint::kTouch: prev = InputMode::kTouch; break;
    case layout::InteractionHint::kRay: prev = InputMode::kRay; break;
    case layout::InteractionHint::kAuto:
    default:
      prev = distance < (cfg.d_touch + cfg.d_ray) / 2 ? InputMode::kTouch
                                                      : InputMode::kRay;
      break;
  }
  return input_mode(distance, prev, cfg);
}

std::vector<PanelPose> initial_poses(
    std::span<const PanelPlacementRequest> requests,
    const PolicyConfig& cfg) {
  constexpr double kGap = 0.05;
  std::vector<PanelPose> poses;
  poses.reserve(requests.size());
  for (const auto& r : requests) {
    PanelPose p = placement_from_hint(r.hint, cfg);
    if (r.aspect > 0 && std::isfinite(r.aspect)) p.size.h = p.size.w * r.aspect;
    poses.push_back(p);
  }

  std::map<AnchorKey, std::vector<std::size_t>> slots;
  for (std::size_t i = 0; i < requests.size(); ++i) {
    slots[{requests[i].hint.zone, requests[i].hint.distance}].push_back(i);
  }
  for (const auto& [key, members] : slots) {
    if (members.size() < 2) continue;
    double total = kGap * static_cast<double>(members.size() - 1);
    for (std::size_t i : members) total += poses[i].size.w;
    double cursor = -total / 2;
    for (std::size_t i : members) {
      PanelPose& p = poses[i];
      const double offset = cursor + p.size.w / 2;
      cursor += p.size.w + kGap;
      const Eigen::Vector3d right =
          to_eigen(p.orientation) * Eigen::Vector3d::UnitX();
      p.position = from_eigen(to_eigen(p.position) + right * offset);
    }
  }
  return poses;
}

}  // namespace btw::policy
