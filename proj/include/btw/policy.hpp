#pragma once

// Placement and interaction policy for panels in the desk workspace.
//
// Workspace frame, meters: x right, y up, z toward the user, origin at the
// front-center of the desk surface. A panel's visible face points along its
// local +z; local +y is the panel's top edge.

#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "btw/layout.hpp"

namespace btw::policy {

struct Vec3 {
  double x = 0;
  double y = 0;
  double z = 0;

  bool operator==(const Vec3&) const = default;
};

// Unit quaternion, scalar first.
struct Quat {
  double w = 1;
  double x = 0;
  double y = 0;
  double z = 0;

  bool operator==(const Quat&) const = default;
};

struct PanelSize {
  double w = 0.5;
  double h = 0.3;

  bool operator==(const PanelSize&) const = default;
};

struct PanelPose {
  Vec3 position;
  Quat orientation;
  PanelSize size;

  bool operator==(const PanelPose&) const = default;

  // Quaternion normalized within 1e-6, size positive, all finite.
  bool valid() const;
};

struct SurfacePlane {
  Vec3 origin;            // centre of the bounded surface
  Vec3 normal{0, 1, 0};   // unit
  double extent_w = 1.6;  // along the plane's first tangent axis
  double extent_d = 0.8;  // along the second

  bool operator==(const SurfacePlane&) const = default;
};

enum class InputMode { kTouch, kRay };

std::string_view to_string(InputMode m);
std::optional<InputMode> input_mode_from_string(std::string_view s);

struct ZoneAnchor {
  Vec3 position;
  PanelSize size;

  bool operator==(const ZoneAnchor&) const = default;
};

using AnchorKey = std::pair<layout::Zone, layout::Distance>;

struct PolicyConfig {
  double d_touch = 0.6;
  double d_ray = 0.75;
  double snap_threshold = 0.05;
  Vec3 user_reference{0, 0.45, 0};
  std::vector<SurfacePlane> surfaces{default_desk()};
  std::map<AnchorKey, ZoneAnchor> anchors = default_anchors();

  bool operator==(const PolicyConfig&) const = default;

  // Throws Error{kValidation} unless 0 < d_touch < d_ray, snap_threshold > 0,
  // surface normals are unit, extents positive and every zone/distance pair
  // has an anchor.
  void validate() const;

  static SurfacePlane default_desk();
  static std::map<AnchorKey, ZoneAnchor> default_anchors();
};

// touch at or below d_touch, ray at or above d_ray, previous mode in between.
InputMode input_mode(double distance, InputMode prev, const PolicyConfig& cfg);

double reach_distance(const PanelPose& pose, const PolicyConfig& cfg);

struct SnapResult {
  PanelPose pose;
  bool anchored = false;
  std::optional<std::size_t> surface;
};

// Projects the panel onto the nearest surface whose bounded extent contains
// the projected centre and whose plane lies within snap_threshold; the panel
// is rotated minimally so its face normal matches the surface normal. Ties go
// to the lowest index.
SnapResult snap_pose(const PanelPose& pose,
                     std::span<const SurfacePlane> surfaces,
                     const PolicyConfig& cfg);

PanelPose placement_from_hint(const layout::PlacementHint& hint,
                              const PolicyConfig& cfg);

// Mode a panel starts in before any reachability history exists.
InputMode initial_mode(layout::InteractionHint hint, double distance,
                       const PolicyConfig& cfg);

struct PanelPlacementRequest {
  layout::PlacementHint hint;
  double aspect = 0;  // region h / w; 0 keeps the anchor's aspect
};

// placement_from_hint for a whole layout. Panels sharing a zone/distance slot
// are laid out side by side along their local x axis, centred on the anchor.
std::vector<PanelPose> initial_poses(
    std::span<const PanelPlacementRequest> requests, const PolicyConfig& cfg);

}  // namespace btw::policy
