#include "btw/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <type_traits>
#include <limits>
#include <string>

#include "json.hpp"

#include "btw/error.hpp"
#include "btw/hash.hpp"

namespace btw::protocol {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------- encoding

json encode_vec3(const policy::Vec3& v) { return json::array({v.x, v.y, v.z}); }

json encode_pose(const policy::PanelPose& p) {
  return {
      {"position", encode_vec3(p.position)},
      {"orientation", json::array({p.orientation.w, p.orientation.x,
                                   p.orientation.y, p.orientation.z})},
      {"size", json::array({p.size.w, p.size.h})},
  };
}

json encode_rect(const core::RegionRect& r) {
  return {{"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}};
}

json encode_metrics(const core::ViewportMetrics& m) {
  return {{"scroll_x", m.scroll_x},         {"scroll_y", m.scroll_y},
          {"viewport_w", m.viewport_w},     {"viewport_h", m.viewport_h},
          {"device_scale", m.device_scale}, {"document_w", m.document_w},
          {"document_h", m.document_h}};
}

std::string_view key_action_name(bridge::KeyAction a) {
  return a == bridge::KeyAction::kDown ? "down" : "up";
}

json encode_body(const Hello& m) {
  return {{"type", "hello"},
          {"client_name", m.client_name},
          {"protocol_version", m.protocol_version}};
}

json encode_body(const LayoutAnnounce& m) {
  json surfaces = json::array();
  for (const auto& s : m.surfaces) {
    surfaces.push_back({{"origin", encode_vec3(s.origin)},
                        {"normal", encode_vec3(s.normal)},
                        {"extent", json::array({s.extent_w, s.extent_d})}});
  }
  json panels = json::array();
  for (const auto& p : m.panels) {
    panels.push_back({
        {"id", p.id},
        {"hash", p.hash},
        {"display_name", p.display_name},
        {"role", layout::to_string(p.role)},
        {"anchoring", layout::to_string(p.anchoring)},
        {"rect", encode_rect(p.rect)},
        {"placement",
         {{"zone", layout::to_string(p.placement.zone)},
          {"distance", layout::to_string(p.placement.distance)},
          {"scale", p.placement.scale}}},
        {"interaction", layout::to_string(p.interaction)},
        {"pose", encode_pose(p.pose)},
        {"anchored", p.anchored},
        {"input_mode", policy::to_string(p.input_mode)},
    });
  }
  return {{"type", "layout_announce"},
          {"layout", m.layout_name},
          {"url", m.url},
          {"metrics", encode_metrics(m.metrics)},
          {"policy",
           {{"d_touch", m.d_touch},
            {"d_ray", m.d_ray},
            {"snap_threshold", m.snap_threshold}}},
          {"surfaces", surfaces},
          {"panels", panels}};
}

json encode_body(const InputEvent& m) {
  json j{{"type", "input"},
         {"panel_id", m.panel_id},
         {"kind", to_string(m.kind)},
         {"client_seq", m.client_seq}};
  if (m.kind == InputKind::kKey) {
    j["key"] = {{"action", key_action_name(m.key.action)},
                {"key", m.key.key},
                {"code", m.key.code},
                {"text", m.key.text},
                {"modifiers", m.key.modifiers}};
    return j;
  }
  j["u"] = m.location.u;
  j["v"] = m.location.v;
  if (m.kind == InputKind::kWheel) {
    j["delta_x"] = m.delta_x;
    j["delta_y"] = m.delta_y;
  } else {
    j["button"] = bridge::pointer_button_name(m.button);
    j["modifiers"] = m.modifiers;
  }
  return j;
}

json encode_body(const PanelTransformMsg& m) {
  return {{"type", "panel_transform"},
          {"panel_id", m.panel_id},
          {"pose", encode_pose(m.pose)},
          {"client_seq", m.client_seq}};
}

json encode_body(const PanelStateMsg& m) {
  return {{"type", "panel_state"},
          {"panel_id", m.panel_id},
          {"pose", encode_pose(m.pose)},
          {"anchored", m.anchored},
          {"input_mode", policy::to_string(m.input_mode)}};
}

json encode_body(const ErrorMsg& m) {
  return {{"type", "error"}, {"code", m.code}, {"detail", m.detail}};
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}

WireFrame encode_frame(const PanelFrameMsg& m) {
  WireFrame f{FrameKind::kBinary, {}};
  f.bytes.reserve(kFrameHeaderSize + m.payload.size());
  put_u32(f.bytes, m.panel_hash);
  put_u32(f.bytes, m.source_seq);
  put_u16(f.bytes, m.x);
  put_u16(f.bytes, m.y);
  put_u16(f.bytes, m.w);
  put_u16(f.bytes, m.h);
  f.bytes.push_back(static_cast<char>(m.format));
  f.bytes.append(7, '\0');
  f.bytes.append(reinterpret_cast<const char*>(m.payload.data()),
                 m.payload.size());
  return f;
}

// ---------------------------------------------------------------- decoding

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw DecodeError(0, path + ": " + what);
}

const json& field(const json& j, const std::string& path,
                  std::string_view key) {
  if (!j.is_object()) fail(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) fail(path + "." + std::string(key), "missing field");
  return *it;
}

std::string get_string(const json& j, const std::string& path,
                       std::string_view key) {
  const json& v = field(j, path, key);
  if (!v.is_string()) fail(path + "." + std::string(key), "expected string");
  return v.get<std::string>();
}

double as_double(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected number");
  double d = v.get<double>();
  if (!std::isfinite(d)) fail(path, "not finite");
  return d;
}

double get_double(const json& j, const std::string& path,
                  std::string_view key) {
  return as_double(field(j, path, key), path + "." + std::string(key));
}

std::uint64_t get_u64(const json& j, const std::string& path,
                      std::string_view key) {
  const json& v = field(j, path, key);
  if (!v.is_number_unsigned()) {
    // Non-negative integers parse as unsigned; anything else is invalid.
    fail(path + "." + std::string(key), "expected unsigned integer");
  }
  return v.get<std::uint64_t>();
}

std::uint32_t get_u32(const json& j, const std::string& path,
                      std::string_view key) {
  std::uint64_t v = get_u64(j, path, key);
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    fail(path + "." + std::string(key), "out of range");
  }
  return static_cast<std::uint32_t>(v);
}

bool get_bool(const json& j, const std::string& path, std::string_view key) {
  const json& v = field(j, path, key);
  if (!v.is_boolean()) fail(path + "." + std::string(key), "expected bool");
  return v.get<bool>();
}

template <typename Parse>
auto get_enum(const json& j, const std::string& path, std::string_view key,
              Parse parse) {
  std::string s = get_string(j, path, key);
  auto e = parse(s);
  if (!e) fail(path + "." + std::string(key), "unknown value '" + s + "'");
  return *e;
}

std::vector<double> get_array(const json& j, const std::string& path,
                              std::string_view key, std::size_t n) {
  const json& v = field(j, path, key);
  const std::string p = path + "." + std::string(key);
  if (!v.is_array() || v.size() != n) {
    fail(p, "expected array of " + std::to_string(n) + " numbers");
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(as_double(v[i], p + "[" + std::to_string(i) + "]"));
  }
  return out;
}

policy::Vec3 get_vec3(const json& j, const std::string& path,
                      std::string_view key) {
  auto a = get_array(j, path, key, 3);
  return {a[0], a[1], a[2]};
}

policy::PanelPose decode_pose(const json& j, const std::string& path) {
  policy::PanelPose p;
  p.position = get_vec3(j, path, "position");
  auto q = get_array(j, path, "orientation", 4);
  p.orientation = {q[0], q[1], q[2], q[3]};
  auto s = get_array(j, path, "size", 2);
  p.size = {s[0], s[1]};
  if (!p.valid()) fail(path, "pose needs a unit quaternion and positive size");
  return p;
}

core::RegionRect decode_rect(const json& j, const std::string& path) {
  return {get_double(j, path, "x"), get_double(j, path, "y"),
          get_double(j, path, "w"), get_double(j, path, "h")};
}

core::ViewportMetrics decode_metrics(const json& j, const std::string& path) {
  core::ViewportMetrics m;
  m.scroll_x = get_double(j, path, "scroll_x");
  m.scroll_y = get_double(j, path, "scroll_y");
  m.viewport_w = get_double(j, path, "viewport_w");
  m.viewport_h = get_double(j, path, "viewport_h");
  m.device_scale = get_double(j, path, "device_scale");
  m.document_w = get_double(j, path, "document_w");
  m.document_h = get_double(j, path, "document_h");
  return m;
}

Hello decode_hello(const json& j) {
  Hello m;
  m.client_name = get_string(j, "$", "client_name");
  const json& v = field(j, "$", "protocol_version");
  if (!v.is_number_integer()) fail("$.protocol_version", "expected integer");
  if (v.is_number_unsigned()
          ? v.get<std::uint64_t>() >
                std::uint64_t(std::numeric_limits<int>::max())
          : v.get<std::int64_t>() < std::numeric_limits<int>::min()) {
    fail("$.protocol_version", "out of range");
  }
  m.protocol_version = v.get<int>();
  return m;
}

LayoutAnnounce decode_announce(const json& j) {
  LayoutAnnounce m;
  m.layout_name = get_string(j, "$", "layout");
  m.url = get_string(j, "$", "url");
  m.metrics = decode_metrics(field(j, "$", "metrics"), "$.metrics");
  const json& pol = field(j, "$", "policy");
  m.d_touch = get_double(pol, "$.policy", "d_touch");
  m.d_ray = get_double(pol, "$.policy", "d_ray");
  m.snap_threshold = get_double(pol, "$.policy", "snap_threshold");

  const json& surfaces = field(j, "$", "surfaces");
  if (!surfaces.is_array()) fail("$.surfaces", "expected array");
  for (std::size_t i = 0; i < surfaces.size(); ++i) {
    const std::string p = "$.surfaces[" + std::to_string(i) + "]";
    policy::SurfacePlane s;
    s.origin = get_vec3(surfaces[i], p, "origin");
    s.normal = get_vec3(surfaces[i], p, "normal");
    auto e = get_array(surfaces[i], p, "extent", 2);
    s.extent_w = e[0];
    s.extent_d = e[1];
    m.surfaces.push_back(s);
  }

  const json& panels = field(j, "$", "panels");
  if (!panels.is_array()) fail("$.panels", "expected array");
  for (std::size_t i = 0; i < panels.size(); ++i) {
    const std::string p = "$.panels[" + std::to_string(i) + "]";
    const json& pj = panels[i];
    AnnouncedPanel a;
    a.id = get_string(pj, p, "id");
    a.hash = get_u32(pj, p, "hash");
    if (a.hash != panel_hash(a.id)) fail(p + ".hash", "does not match id");
    a.display_name = get_string(pj, p, "display_name");
    a.role = get_enum(pj, p, "role", layout::role_from_string);
    a.anchoring = get_enum(pj, p, "anchoring", layout::anchoring_from_string);
    a.rect = decode_rect(field(pj, p, "rect"), p + ".rect");
    const json& pl = field(pj, p, "placement");
    a.placement.zone =
        get_enum(pl, p + ".placement", "zone", layout::zone_from_string);
    a.placement.distance = get_enum(pl, p + ".placement", "distance",
                                    layout::distance_from_string);
    a.placement.scale = get_double(pl, p + ".placement", "scale");
    a.interaction =
        get_enum(pj, p, "interaction", layout::interaction_from_string);
    a.pose = decode_pose(field(pj, p, "pose"), p + ".pose");
    a.anchored = get_bool(pj, p, "anchored");
    a.input_mode =
        get_enum(pj, p, "input_mode", policy::input_mode_from_string);
    m.panels.push_back(std::move(a));
  }
  return m;
}

std::optional<InputKind> input_kind_from_string(std::string_view s) {
  for (InputKind k : {InputKind::kPointerDown, InputKind::kPointerMove,
                      InputKind::kPointerUp, InputKind::kWheel,
                      InputKind::kKey}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::optional<bridge::PointerButton> button_from_string(std::string_view s) {
  for (auto b : {bridge::PointerButton::kNone, bridge::PointerButton::kLeft,
                 bridge::PointerButton::kMiddle,
                 bridge::PointerButton::kRight}) {
    if (bridge::pointer_button_name(b) == s) return b;
  }
  return std::nullopt;
}

std::optional<bridge::KeyAction> key_action_from_string(std::string_view s) {
  if (s == "down") return bridge::KeyAction::kDown;
  if (s == "up") return bridge::KeyAction::kUp;
  return std::nullopt;
}

InputEvent decode_input(const json& j) {
  InputEvent m;
  m.panel_id = get_string(j, "$", "panel_id");
  m.kind = get_enum(j, "$", "kind", input_kind_from_string);
  m.client_seq = get_u64(j, "$", "client_seq");
  if (m.kind == InputKind::kKey) {
    const json& k = field(j, "$", "key");
    m.key.action = get_enum(k, "$.key", "action", key_action_from_string);
    m.key.key = get_string(k, "$.key", "key");
    m.key.code = get_string(k, "$.key", "code");
    m.key.text = get_string(k, "$.key", "text");
    m.key.modifiers = get_u32(k, "$.key", "modifiers");
    return m;
  }
  m.location = {get_double(j, "$", "u"), get_double(j, "$", "v")};
  if (!m.location.valid()) fail("$", "u, v must lie in [0, 1]");
  if (m.kind == InputKind::kWheel) {
    m.delta_x = get_double(j, "$", "delta_x");
    m.delta_y = get_double(j, "$", "delta_y");
  } else {
    m.button = get_enum(j, "$", "button", button_from_string);
    m.modifiers = get_u32(j, "$", "modifiers");
  }
  return m;
}

PanelTransformMsg decode_transform(const json& j) {
  PanelTransformMsg m;
  m.panel_id = get_string(j, "$", "panel_id");
  m.pose = decode_pose(field(j, "$", "pose"), "$.pose");
  m.client_seq = get_u64(j, "$", "client_seq");
  return m;
}

PanelStateMsg decode_state(const json& j) {
  PanelStateMsg m;
  m.panel_id = get_string(j, "$", "panel_id");
  m.pose = decode_pose(field(j, "$", "pose"), "$.pose");
  m.anchored = get_bool(j, "$", "anchored");
  m.input_mode = get_enum(j, "$", "input_mode", policy::input_mode_from_string);
  return m;
}

ErrorMsg decode_error(const json& j) {
  return {get_string(j, "$", "code"), get_string(j, "$", "detail")};
}

Message decode_text(std::span<const std::uint8_t> bytes) {
  json j;
  try {
    j = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    // The parser counts bytes from 1.
    throw DecodeError(e.byte > 0 ? e.byte - 1 : 0, "malformed JSON");
  } catch (const json::exception& e) {
    throw DecodeError(0, e.what());
  }
  if (!j.is_object()) fail("$", "expected an object");
  const std::string type = get_string(j, "$", "type");
  if (type == "hello") return decode_hello(j);
  if (type == "layout_announce") return decode_announce(j);
  if (type == "input") return decode_input(j);
  if (type == "panel_transform") return decode_transform(j);
  if (type == "panel_state") return decode_state(j);
  if (type == "error") return decode_error(j);
  fail("$.type", "unknown message type '" + type + "'");
}

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return std::uint32_t(b[at]) | (std::uint32_t(b[at + 1]) << 8) |
         (std::uint32_t(b[at + 2]) << 16) | (std::uint32_t(b[at + 3]) << 24);
}

PanelFrameMsg decode_frame(std::span<const std::uint8_t> b) {
  if (b.size() < kFrameHeaderSize) {
    throw DecodeError(b.size(), "truncated panel frame header");
  }
  PanelFrameMsg m;
  m.panel_hash = read_u32(b, 0);
  m.source_seq = read_u32(b, 4);
  m.x = read_u16(b, 8);
  m.y = read_u16(b, 10);
  m.w = read_u16(b, 12);
  m.h = read_u16(b, 14);
  const std::uint8_t format = b[16];
  if (format > 1) throw DecodeError(16, "unknown frame format");
  m.format = static_cast<FrameFormat>(format);
  for (std::size_t i = 17; i < kFrameHeaderSize; ++i) {
    if (b[i] != 0) throw DecodeError(i, "reserved header byte not zero");
  }
  auto payload = b.subspan(kFrameHeaderSize);
  if ((m.w == 0) != (m.h == 0)) {
    throw DecodeError(12, "crop must have both or neither dimension zero");
  }
  if (m.off_viewport()) {
    if (!payload.empty()) {
      throw DecodeError(kFrameHeaderSize, "off-viewport frame with payload");
    }
  } else if (m.format == FrameFormat::kRawRgba) {
    const std::size_t expected = std::size_t(m.w) * m.h * 4;
    if (payload.size() != expected) {
      throw DecodeError(kFrameHeaderSize + std::min(payload.size(), expected),
                        "raw payload is " + std::to_string(payload.size()) +
                            " bytes, expected " + std::to_string(expected));
    }
  } else if (payload.empty()) {
    throw DecodeError(kFrameHeaderSize, "empty PNG payload");
  }
  m.payload.assign(payload.begin(), payload.end());
  return m;
}

}  // namespace

std::string_view to_string(InputKind k) {
  switch (k) {
    case InputKind::kPointerDown: return "pointer-down";
    case InputKind::kPointerMove: return "pointer-move";
    case InputKind::kPointerUp: return "pointer-up";
    case InputKind::kWheel: return "wheel";
    case InputKind::kKey: return "key";
  }
  return "?";
}

std::uint32_t panel_hash(std::string_view panel_id) {
  return fnv1a32(panel_id);
}

WireFrame encode_message(const Message& m) {
  if (const auto* frame = std::get_if<PanelFrameMsg>(&m)) {
    return encode_frame(*frame);
  }
  json j = std::visit(
      [](const auto& msg) -> json {
        if constexpr (std::is_same_v<std::decay_t<decltype(msg)>,
                                     PanelFrameMsg>) {
          return json();
        } else {
          return encode_body(msg);
        }
      },
      m);
  try {
    return {FrameKind::kText, j.dump()};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidInput,
                std::string("message not encodable: ") + e.what());
  }
}

Message decode_message(FrameKind kind, std::span<const std::uint8_t> bytes) {
  if (kind == FrameKind::kBinary) return decode_frame(bytes);
  return decode_text(bytes);
}

Message decode_message(const WireFrame& frame) {
  return decode_message(
      frame.kind,
      {reinterpret_cast<const std::uint8_t*>(frame.bytes.data()),
       frame.bytes.size()});
}

}  // namespace btw::protocol
