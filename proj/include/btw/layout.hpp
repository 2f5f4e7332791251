#pragma once

// Declarative decomposition of a site into named panels. Documents are UTF-8
// JSON, file extension .btwlayout. A minimal one:
//
//   {
//     "name": "example",
//     "site_pattern": "https://example.com/*",
//     "panels": [{
//       "id": "main",
//       "display_name": "Main",
//       "role": "primary-content",
//       "region": {"selector": "#main",
//                  "fallback": {"x": 0, "y": 0, "w": 800, "h": 600}},
//       "anchoring": "document",
//       "placement": {"zone": "midair-center", "distance": "mid", "scale": 1},
//       "interaction": "auto"
//     }]
//   }
//
// A region is either {"selector": ..., optional "fallback": rect} or
// {"rect": rect}.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "btw/geometry.hpp"

namespace btw::layout {

enum class Role { kPrimaryContent, kControl, kContext, kPeripheral };
enum class Zone { kSurface, kMidairCenter, kMidairSide, kPeripheral };
enum class Distance { kNear, kMid, kFar };
enum class Anchoring { kDocument, kViewport };
enum class InteractionHint { kTouch, kRay, kAuto };

struct PlacementHint {
  Zone zone = Zone::kMidairCenter;
  Distance distance = Distance::kMid;
  double scale = 1;

  bool operator==(const PlacementHint&) const = default;
};

struct Region {
  std::optional<std::string> selector;
  std::optional<core::RegionRect> rect;
  // Only with a selector: used when the selector matches nothing.
  std::optional<core::RegionRect> fallback;

  bool operator==(const Region&) const = default;
};

struct PanelSpec {
  std::string id;
  std::string display_name;
  Role role = Role::kPrimaryContent;
  Region region;
  Anchoring anchoring = Anchoring::kDocument;
  PlacementHint placement;
  InteractionHint interaction = InteractionHint::kAuto;

  bool operator==(const PanelSpec&) const = default;
};

struct LayoutDocument {
  std::string name;
  std::string site_pattern;
  std::vector<PanelSpec> panels;

  bool operator==(const LayoutDocument&) const = default;
};

std::string_view to_string(Role r);
std::string_view to_string(Zone z);
std::string_view to_string(Distance d);
std::string_view to_string(Anchoring a);
std::string_view to_string(InteractionHint h);

std::optional<Role> role_from_string(std::string_view s);
std::optional<Zone> zone_from_string(std::string_view s);
std::optional<Distance> distance_from_string(std::string_view s);
std::optional<Anchoring> anchoring_from_string(std::string_view s);
std::optional<InteractionHint> interaction_from_string(std::string_view s);

// Throws ValidationError naming the offending path, e.g. "panels[1].id".
void validate(const LayoutDocument& doc);

LayoutDocument parse_layout(std::string_view text);
std::string serialize_layout(const LayoutDocument& doc);

// Maps, Slides and YouTube, in that order.
const std::vector<LayoutDocument>& builtin_presets();

// One viewport-anchored panel covering the whole viewport: the classic
// single-window presentation for sites without a layout.
LayoutDocument fallback_layout(const core::ViewportMetrics& m);

// Shell-style glob ('*', '?', '[...]') over the whole URL.
bool site_matches(std::string_view pattern, std::string_view url);
std::size_t literal_length(std::string_view pattern);

}  // namespace btw::layout
