#pragma once

// Port over a live browser page. Two implementations exist: MockBridge
// (in-process, deterministic) and DevtoolsBridge (remote-debugging protocol).

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "btw/bitmap.hpp"
#include "btw/geometry.hpp"

namespace btw::bridge {

struct PageHandle {
  std::string id;
  std::string url;

  bool operator==(const PageHandle&) const = default;
};

struct SourceFrame {
  std::uint32_t seq = 0;
  Bitmap bitmap;
  core::ViewportMetrics metrics;
  std::int64_t timestamp_ms = 0;
};

enum class PointerKind { kDown, kMove, kUp };

enum class PointerButton { kNone, kLeft, kMiddle, kRight };

enum class KeyAction { kDown, kUp };

// Modifier bit mask, same bit layout as the remote-debugging protocol.
namespace modifiers {
inline constexpr std::uint32_t kAlt = 1;
inline constexpr std::uint32_t kCtrl = 2;
inline constexpr std::uint32_t kMeta = 4;
inline constexpr std::uint32_t kShift = 8;
}  // namespace modifiers

struct KeyDescriptor {
  KeyAction action = KeyAction::kDown;
  std::string key;   // DOM key value, e.g. "a", "Enter"
  std::string code;  // physical code, e.g. "KeyA"
  std::string text;  // inserted text, empty for non-printing keys
  std::uint32_t modifiers = 0;

  bool operator==(const KeyDescriptor&) const = default;
};

// Delivers captured frames in strictly increasing seq order. Stopping (or
// destroying) the stream ends capture on its page.
class FrameStream {
 public:
  virtual ~FrameStream() = default;

  // Non-blocking. Returns the next due frame, if any.
  virtual std::optional<SourceFrame> poll() = 0;
  virtual void stop() = 0;
};

inline constexpr int kDefaultMaxFps = 15;

class BrowserBridge {
 public:
  virtual ~BrowserBridge() = default;

  virtual PageHandle navigate(std::string_view url) = 0;
  // Re-navigates an existing page; the handle and its frame counter persist.
  virtual PageHandle navigate(const PageHandle& h, std::string_view url) = 0;
  virtual void close(const PageHandle& h) = 0;

  // Throws Error{kConflict} while another stream on h is active.
  virtual std::unique_ptr<FrameStream> start_capture(const PageHandle& h,
                                                     int max_fps) = 0;

  // Tight document-space bounds of the first match. Zero-area matches count
  // as not found.
  virtual core::RegionRect resolve_selector(const PageHandle& h,
                                            std::string_view selector) = 0;

  // Viewport points must lie inside the viewport; Error{kOutOfViewport}
  // otherwise.
  virtual void inject_pointer(const PageHandle& h, PointerKind kind,
                              core::ViewportPoint vp, PointerButton button,
                              std::uint32_t modifiers) = 0;
  virtual void inject_key(const PageHandle& h, const KeyDescriptor& key) = 0;
  virtual void inject_wheel(const PageHandle& h, core::ViewportPoint vp,
                            double delta_x, double delta_y) = 0;

  virtual core::ViewportMetrics scroll_to(const PageHandle& h, double scroll_x,
                                          double scroll_y) = 0;
  virtual core::ViewportMetrics query_metrics(const PageHandle& h) = 0;
};

// Well-formed absolute URL: scheme ":" followed by at least one character,
// scheme per RFC 3986 (ALPHA *( ALPHA / DIGIT / "+" / "-" / "." )).
bool is_well_formed_url(std::string_view url);

std::string_view pointer_kind_name(PointerKind k);
std::string_view pointer_button_name(PointerButton b);

}  // namespace btw::bridge
