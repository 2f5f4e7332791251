#include "btw/layout.hpp"

#include <fnmatch.h>

#include <array>
#include <cmath>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>

#include "json.hpp"

#include "btw/error.hpp"
#include "btw/hash.hpp"

namespace btw::layout {

using nlohmann::json;

namespace {

template <typename E, std::size_t N>
using NameTable = std::array<std::pair<E, std::string_view>, N>;

constexpr NameTable<Role, 4> kRoles{{
    {Role::kPrimaryContent, "primary-content"},
    {Role::kControl, "control"},
    {Role::kContext, "context"},
    {Role::kPeripheral, "peripheral"},
}};
constexpr NameTable<Zone, 4> kZones{{
    {Zone::kSurface, "surface"},
    {Zone::kMidairCenter, "midair-center"},
    {Zone::kMidairSide, "midair-side"},
    {Zone::kPeripheral, "peripheral"},
}};
constexpr NameTable<Distance, 3> kDistances{{
    {Distance::kNear, "near"},
    {Distance::kMid, "mid"},
    {Distance::kFar, "far"},
}};
constexpr NameTable<Anchoring, 2> kAnchorings{{
    {Anchoring::kDocument, "document"},
    {Anchoring::kViewport, "viewport"},
}};
constexpr NameTable<InteractionHint, 3> kInteractions{{
    {InteractionHint::kTouch, "touch"},
    {InteractionHint::kRay, "ray"},
    {InteractionHint::kAuto, "auto"},
}};

template <typename E, std::size_t N>
std::string_view name_of(const NameTable<E, N>& table, E value) {
  for (const auto& [e, name] : table) {
    if (e == value) return name;
  }
  return "?";
}

template <typename E, std::size_t N>
std::optional<E> parse_name(const NameTable<E, N>& table, std::string_view s) {
  for (const auto& [e, name] : table) {
    if (name == s) return e;
  }
  return std::nullopt;
}

template <typename E, std::size_t N>
std::string allowed(const NameTable<E, N>& table) {
  std::string out;
  for (const auto& [e, name] : table) {
    if (!out.empty()) out += "|";
    out += name;
  }
  return out;
}

// Strict JSON object reader: every key must be consumed, unknown keys are
// validation errors.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path)
      : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError(path_, "expected an object");
  }

  const std::string& path() const { return path_; }
  std::string child(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  bool has(std::string_view key) const { return j_.contains(key); }

  const json& get(std::string_view key) {
    auto it = j_.find(key);
    if (it == j_.end()) throw ValidationError(child(key), "missing field");
    seen_.insert(std::string(key));
    return *it;
  }

  std::string string(std::string_view key) {
    const json& v = get(key);
    if (!v.is_string()) throw ValidationError(child(key), "expected a string");
    return v.get<std::string>();
  }

  double number(std::string_view key) {
    const json& v = get(key);
    if (!v.is_number()) throw ValidationError(child(key), "expected a number");
    return v.get<double>();
  }

  template <typename E, std::size_t N>
  E enumeration(std::string_view key, const NameTable<E, N>& table) {
    std::string s = string(key);
    auto e = parse_name(table, s);
    if (!e) {
      throw ValidationError(child(key), "unknown value '" + s +
                                            "', expected " + allowed(table));
    }
    return *e;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ValidationError(child(key), "unknown field");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

core::RegionRect read_rect(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  core::RegionRect rect{r.number("x"), r.number("y"), r.number("w"),
                        r.number("h")};
  r.finish();
  return rect;
}

json write_rect(const core::RegionRect& r) {
  return json{{"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}};
}

PanelSpec read_panel(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  PanelSpec p;
  p.id = r.string("id");
  p.display_name = r.string("display_name");
  p.role = r.enumeration("role", kRoles);
  {
    ObjectReader region(r.get("region"), r.child("region"));
    if (region.has("selector")) p.region.selector = region.string("selector");
    if (region.has("rect")) {
      p.region.rect = read_rect(region.get("rect"), region.child("rect"));
    }
    if (region.has("fallback")) {
      p.region.fallback =
          read_rect(region.get("fallback"), region.child("fallback"));
    }
    region.finish();
  }
  p.anchoring = r.enumeration("anchoring", kAnchorings);
  {
    ObjectReader placement(r.get("placement"), r.child("placement"));
    p.placement.zone = placement.enumeration("zone", kZones);
    p.placement.distance = placement.enumeration("distance", kDistances);
    p.placement.scale = placement.number("scale");
    placement.finish();
  }
  p.interaction = r.enumeration("interaction", kInteractions);
  r.finish();
  return p;
}

std::string panel_path(std::size_t i) {
  return "panels[" + std::to_string(i) + "]";
}

void validate_rect(const core::RegionRect& r, const std::string& path) {
  if (!r.valid()) {
    throw ValidationError(path, "region must be finite with w > 0 and h > 0");
  }
}

}  // namespace

std::string_view to_string(Role r) { return name_of(kRoles, r); }
std::string_view to_string(Zone z) { return name_of(kZones, z); }
std::string_view to_string(Distance d) { return name_of(kDistances, d); }
std::string_view to_string(Anchoring a) { return name_of(kAnchorings, a); }
std::string_view to_string(InteractionHint h) {
  return name_of(kInteractions, h);
}

std::optional<Role> role_from_string(std::string_view s) {
  return parse_name(kRoles, s);
}
std::optional<Zone> zone_from_string(std::string_view s) {
  return parse_name(kZones, s);
}
std::optional<Distance> distance_from_string(std::string_view s) {
  return parse_name(kDistances, s);
}
std::optional<Anchoring> anchoring_from_string(std::string_view s) {
  return parse_name(kAnchorings, s);
}
std::optional<InteractionHint> interaction_from_string(std::string_view s) {
  return parse_name(kInteractions, s);
}

void validate(const LayoutDocument& doc) {
  if (doc.name.empty()) throw ValidationError("name", "must not be empty");
  if (doc.site_pattern.empty()) {
    throw ValidationError("site_pattern", "must not be empty");
  }
  if (doc.panels.empty()) {
    throw ValidationError("panels", "at least one panel is required");
  }
  std::set<std::string> ids;
  std::unordered_map<std::uint32_t, std::string> hashes;
  for (std::size_t i = 0; i < doc.panels.size(); ++i) {
    const PanelSpec& p = doc.panels[i];
    const std::string path = panel_path(i);
    if (p.id.empty()) throw ValidationError(path + ".id", "must not be empty");
    if (!ids.insert(p.id).second) {
      throw ValidationError(path + ".id", "duplicate panel id '" + p.id + "'");
    }
    // Frame headers carry the id hash, so hashes must be unique too.
    auto [it, fresh] = hashes.emplace(fnv1a32(p.id), p.id);
    if (!fresh) {
      throw ValidationError(path + ".id", "panel id '" + p.id +
                                              "' collides with '" +
                                              it->second + "' on the wire");
    }
    const std::string region = path + ".region";
    if (p.region.selector.has_value() == p.region.rect.has_value()) {
      throw ValidationError(region,
                            "exactly one of selector or rect is required");
    }
    if (p.region.selector && p.region.selector->empty()) {
      throw ValidationError(region + ".selector", "must not be empty");
    }
    if (p.region.rect) validate_rect(*p.region.rect, region + ".rect");
    if (p.region.fallback) {
      if (!p.region.selector) {
        throw ValidationError(region + ".fallback",
                              "fallback only applies to selector regions");
      }
      validate_rect(*p.region.fallback, region + ".fallback");
    }
    const double s = p.placement.scale;
    if (!std::isfinite(s) || s <= 0) {
      throw ValidationError(path + ".placement.scale", "must be positive");
    }
  }
}

LayoutDocument parse_layout(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("$", "malformed JSON at byte " +
                                   std::to_string(e.byte) + ": " + e.what());
  } catch (const json::exception& e) {
    throw ValidationError("$", e.what());
  }
  ObjectReader r(j, "");
  LayoutDocument doc;
  doc.name = r.string("name");
  doc.site_pattern = r.string("site_pattern");
  const json& panels = r.get("panels");
  if (!panels.is_array()) throw ValidationError("panels", "expected an array");
  for (std::size_t i = 0; i < panels.size(); ++i) {
    doc.panels.push_back(read_panel(panels[i], panel_path(i)));
  }
  r.finish();
  validate(doc);
  return doc;
}

std::string serialize_layout(const LayoutDocument& doc) {
  json panels = json::array();
  for (const PanelSpec& p : doc.panels) {
    json region = json::object();
    if (p.region.selector) region["selector"] = *p.region.selector;
    if (p.region.rect) region["rect"] = write_rect(*p.region.rect);
    if (p.region.fallback) region["fallback"] = write_rect(*p.region.fallback);
    panels.push_back({
        {"id", p.id},
        {"display_name", p.display_name},
        {"role", to_string(p.role)},
        {"region", region},
        {"anchoring", to_string(p.anchoring)},
        {"placement",
         {{"zone", to_string(p.placement.zone)},
          {"distance", to_string(p.placement.distance)},
          {"scale", p.placement.scale}}},
        {"interaction", to_string(p.interaction)},
    });
  }
  json j{{"name", doc.name},
         {"site_pattern", doc.site_pattern},
         {"panels", panels}};
  return j.dump(2) + "\n";
}

namespace {

constexpr std::string_view kMapsPreset = R"({
  "name": "maps",
  "site_pattern": "https://www.google.com/maps*",
  "panels": [
    {"id": "map-canvas", "display_name": "Map", "role": "primary-content",
     "region": {"selector": "#scene",
                "fallback": {"x": 408, "y": 0, "w": 872, "h": 800}},
     "anchoring": "document",
     "placement": {"zone": "surface", "distance": "near", "scale": 1.4},
     "interaction": "touch"},
    {"id": "info-panel", "display_name": "Place details", "role": "context",
     "region": {"selector": "#QA0Szd",
                "fallback": {"x": 0, "y": 0, "w": 408, "h": 800}},
     "anchoring": "document",
     "placement": {"zone": "midair-side", "distance": "mid", "scale": 1},
     "interaction": "ray"},
    {"id": "controls", "display_name": "Search", "role": "control",
     "region": {"selector": "#omnibox-container",
                "fallback": {"x": 8, "y": 8, "w": 392, "h": 48}},
     "anchoring": "document",
     "placement": {"zone": "surface", "distance": "near", "scale": 0.6},
     "interaction": "touch"}
  ]
})";

constexpr std::string_view kSlidesPreset = R"({
  "name": "slides",
  "site_pattern": "https://docs.google.com/presentation/*",
  "panels": [
    {"id": "slide-canvas", "display_name": "Slide", "role": "primary-content",
     "region": {"selector": "#workspace-container",
                "fallback": {"x": 180, "y": 140, "w": 1100, "h": 660}},
     "anchoring": "document",
     "placement": {"zone": "midair-center", "distance": "near", "scale": 1},
     "interaction": "ray"},
    {"id": "thumbnails", "display_name": "Thumbnails", "role": "context",
     "region": {"selector": ".punch-filmstrip-scroll",
                "fallback": {"x": 0, "y": 140, "w": 180, "h": 660}},
     "anchoring": "document",
     "placement": {"zone": "midair-side", "distance": "mid", "scale": 1},
     "interaction": "ray"},
    {"id": "toolbar", "display_name": "Toolbar", "role": "control",
     "region": {"selector": "#docs-toolbar-wrapper",
                "fallback": {"x": 0, "y": 100, "w": 1280, "h": 40}},
     "anchoring": "document",
     "placement": {"zone": "surface", "distance": "near", "scale": 1},
     "interaction": "touch"}
  ]
})";

constexpr std::string_view kYoutubePreset = R"({
  "name": "youtube",
  "site_pattern": "https://www.youtube.com/watch*",
  "panels": [
    {"id": "player", "display_name": "Video", "role": "primary-content",
     "region": {"selector": "#movie_player",
                "fallback": {"x": 24, "y": 80, "w": 854, "h": 480}},
     "anchoring": "document",
     "placement": {"zone": "midair-center", "distance": "mid", "scale": 1.2},
     "interaction": "ray"},
    {"id": "controls", "display_name": "Playback controls", "role": "control",
     "region": {"selector": ".ytp-chrome-bottom",
                "fallback": {"x": 24, "y": 512, "w": 854, "h": 48}},
     "anchoring": "document",
     "placement": {"zone": "surface", "distance": "near", "scale": 1},
     "interaction": "touch"},
    {"id": "comments", "display_name": "Comments", "role": "context",
     "region": {"selector": "#comments",
                "fallback": {"x": 24, "y": 700, "w": 854, "h": 1500}},
     "anchoring": "document",
     "placement": {"zone": "midair-side", "distance": "mid", "scale": 1},
     "interaction": "ray"},
    {"id": "recommendations", "display_name": "Up next", "role": "peripheral",
     "region": {"selector": "#secondary",
                "fallback": {"x": 902, "y": 80, "w": 354, "h": 2000}},
     "anchoring": "document",
     "placement": {"zone": "peripheral", "distance": "far", "scale": 1},
     "interaction": "ray"}
  ]
})";

}  // namespace

const std::vector<LayoutDocument>& builtin_presets() {
  static const std::vector<LayoutDocument> presets{
      parse_layout(kMapsPreset),
      parse_layout(kSlidesPreset),
      parse_layout(kYoutubePreset),
  };
  return presets;
}

LayoutDocument fallback_layout(const core::ViewportMetrics& m) {
  PanelSpec page;
  page.id = "page";
  page.display_name = "Page";
  page.role = Role::kPrimaryContent;
  page.region.rect = core::RegionRect{0, 0, m.viewport_w, m.viewport_h};
  page.anchoring = Anchoring::kViewport;
  page.placement = {Zone::kMidairCenter, Distance::kMid, 1};
  page.interaction = InteractionHint::kAuto;
  return {"single-window", "*", {page}};
}

bool site_matches(std::string_view pattern, std::string_view url) {
  return ::fnmatch(std::string(pattern).c_str(), std::string(url).c_str(),
                   0) == 0;
}

std::size_t literal_length(std::string_view pattern) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    char c = pattern[i];
    if (c == '*' || c == '?') continue;
    if (c == '[') {
      auto close = pattern.find(']', i + 2);
      if (close != std::string_view::npos) {
        i = close;
        continue;
      }
    }
    if (c == '\\' && i + 1 < pattern.size()) ++i;
    ++n;
  }
  return n;
}

}  // namespace btw::layout
