#pragma once

// Wire protocol between the server and workspace clients, version 1.
//
// Control messages travel as text frames holding canonical JSON (compact,
// keys sorted) with a "type" discriminator:
//
//   hello            client -> server  {client_name, protocol_version}
//   layout_announce  server -> client  resolved panels, initial poses, surfaces
//   input            client -> server  {panel_id, kind, u, v, ..., client_seq}
//   panel_transform  client -> server  {panel_id, pose, client_seq}
//   panel_state      server -> client  {panel_id, pose, anchored, input_mode}
//   error            server -> client  {code, detail}
//
// Panel frames travel as binary frames: a 24-byte little-endian header
//
//   u32 panel_hash   FNV-1a 32 of the panel id
//   u32 source_seq
//   u16 x, y, w, h   crop inside the source frame, device px
//   u8  format       0 raw RGBA, 1 PNG
//   u8  reserved[7]  zero
//
// followed by the payload. w = h = 0 with an empty payload marks a panel
// whose region is outside the viewport.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "btw/bridge.hpp"
#include "btw/geometry.hpp"
#include "btw/layout.hpp"
#include "btw/policy.hpp"

namespace btw::protocol {

inline constexpr int kProtocolVersion = 1;
inline constexpr std::size_t kFrameHeaderSize = 24;

enum class FrameKind { kText, kBinary };

struct WireFrame {
  FrameKind kind = FrameKind::kText;
  std::string bytes;

  bool operator==(const WireFrame&) const = default;
};

struct Hello {
  std::string client_name;
  int protocol_version = kProtocolVersion;

  bool operator==(const Hello&) const = default;
};

struct AnnouncedPanel {
  std::string id;
  std::uint32_t hash = 0;
  std::string display_name;
  layout::Role role = layout::Role::kPrimaryContent;
  layout::Anchoring anchoring = layout::Anchoring::kDocument;
  core::RegionRect rect;
  layout::PlacementHint placement;
  layout::InteractionHint interaction = layout::InteractionHint::kAuto;
  policy::PanelPose pose;
  bool anchored = false;
  policy::InputMode input_mode = policy::InputMode::kRay;

  bool operator==(const AnnouncedPanel&) const = default;
};

struct LayoutAnnounce {
  std::string layout_name;
  std::string url;
  core::ViewportMetrics metrics;
  double d_touch = 0.6;
  double d_ray = 0.75;
  double snap_threshold = 0.05;
  std::vector<policy::SurfacePlane> surfaces;
  std::vector<AnnouncedPanel> panels;

  bool operator==(const LayoutAnnounce&) const = default;
};

enum class FrameFormat : std::uint8_t { kRawRgba = 0, kPng = 1 };

struct PanelFrameMsg {
  std::uint32_t panel_hash = 0;
  std::uint32_t source_seq = 0;
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  std::uint16_t w = 0;
  std::uint16_t h = 0;
  FrameFormat format = FrameFormat::kRawRgba;
  std::vector<std::uint8_t> payload;

  bool operator==(const PanelFrameMsg&) const = default;

  bool off_viewport() const { return w == 0 && h == 0; }
};

enum class InputKind { kPointerDown, kPointerMove, kPointerUp, kWheel, kKey };

std::string_view to_string(InputKind k);

// Pointer and wheel events carry a location; key events carry only `key`.
// Fields that do not apply to a kind keep their defaults.
struct InputEvent {
  std::string panel_id;
  InputKind kind = InputKind::kPointerDown;
  core::UnitPoint location;
  bridge::PointerButton button = bridge::PointerButton::kNone;
  std::uint32_t modifiers = 0;
  double delta_x = 0;
  double delta_y = 0;
  bridge::KeyDescriptor key;
  std::uint64_t client_seq = 0;

  bool operator==(const InputEvent&) const = default;

  bool is_pointer() const {
    return kind == InputKind::kPointerDown || kind == InputKind::kPointerMove ||
           kind == InputKind::kPointerUp;
  }
};

using InputEventMsg = InputEvent;

struct PanelTransformMsg {
  std::string panel_id;
  policy::PanelPose pose;
  std::uint64_t client_seq = 0;

  bool operator==(const PanelTransformMsg&) const = default;
};

struct PanelStateMsg {
  std::string panel_id;
  policy::PanelPose pose;
  bool anchored = false;
  policy::InputMode input_mode = policy::InputMode::kRay;

  bool operator==(const PanelStateMsg&) const = default;
};

// Wire error codes.
namespace error_code {
inline constexpr std::string_view kUnknownPanel = "unknown-panel";
inline constexpr std::string_view kOutOfViewport = "out-of-viewport";
inline constexpr std::string_view kBadVersion = "bad-version";
inline constexpr std::string_view kHelloRequired = "hello-required";
inline constexpr std::string_view kStaleSeq = "stale-seq";
inline constexpr std::string_view kDecode = "decode";
inline constexpr std::string_view kInvalidInput = "invalid-input";
inline constexpr std::string_view kUnsupported = "unsupported";
inline constexpr std::string_view kInjectionFailed = "injection-failed";
}  // namespace error_code

struct ErrorMsg {
  std::string code;
  std::string detail;

  bool operator==(const ErrorMsg&) const = default;
};

using Message = std::variant<Hello, LayoutAnnounce, PanelFrameMsg,
                             InputEventMsg, PanelTransformMsg, PanelStateMsg,
                             ErrorMsg>;

// PanelFrameMsg encodes to a binary frame, everything else to text.
WireFrame encode_message(const Message& m);

// Throws DecodeError (with byte offset) on malformed input; never crashes on
// arbitrary bytes.
Message decode_message(FrameKind kind, std::span<const std::uint8_t> bytes);
Message decode_message(const WireFrame& frame);

std::uint32_t panel_hash(std::string_view panel_id);

}  // namespace btw::protocol
