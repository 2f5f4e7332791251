#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "btw/bridge.hpp"
#include "btw/clock.hpp"

namespace btw::bridge {

struct MockElement {
  std::string selector;
  core::RegionRect rect;  // document space; zero-area means hidden
};

// Synthetic page served at mock://grid. The document is 2000x3000 CSS px and
// declares anchors for every built-in layout preset. Pixel content:
//
//   static pattern   R = x & 255, G = y & 255,
//                    B = (x >> 8 & 15) | (y >> 8 & 15) << 4
//   animated region  R ^= seq & 255          (the video player)
//   counter region   G ^= count * 37 & 255   (injected-event badge)
//   outside document (32, 32, 32)
//
// so crops, scrolls and injections all have pixel-verifiable consequences.
struct MockPageModel {
  double document_w = 2000;
  double document_h = 3000;
  core::RegionRect animated;
  core::RegionRect counter;
  std::vector<MockElement> elements;

  static const MockPageModel& grid();

  std::array<std::uint8_t, 4> pixel(double doc_x, double doc_y,
                                    std::uint32_t seq,
                                    std::size_t injected_count) const;

  Bitmap render(const core::ViewportMetrics& m, std::uint32_t seq,
                std::size_t injected_count) const;
};

enum class InjectedKind { kPointerDown, kPointerMove, kPointerUp, kWheel, kKey };

struct InjectedEvent {
  InjectedKind kind = InjectedKind::kPointerDown;
  core::ViewportPoint point;
  PointerButton button = PointerButton::kNone;
  std::uint32_t modifiers = 0;
  double delta_x = 0;
  double delta_y = 0;
  KeyDescriptor key;
  std::size_t order = 0;

  bool operator==(const InjectedEvent&) const = default;
};

std::string_view injected_kind_name(InjectedKind k);

// Interleaved record of scrolls and injections, for ordering checks.
struct MockOp {
  enum class Kind { kScroll, kInject };
  Kind kind = Kind::kScroll;
  double scroll_x = 0;
  double scroll_y = 0;
  std::size_t injection_order = 0;

  bool operator==(const MockOp&) const = default;
};

class MockBridge : public BrowserBridge {
 public:
  explicit MockBridge(const Clock& clock);
  ~MockBridge() override;

  PageHandle navigate(std::string_view url) override;
  PageHandle navigate(const PageHandle& h, std::string_view url) override;
  void close(const PageHandle& h) override;

  std::unique_ptr<FrameStream> start_capture(const PageHandle& h,
                                             int max_fps) override;

  core::RegionRect resolve_selector(const PageHandle& h,
                                    std::string_view selector) override;

  void inject_pointer(const PageHandle& h, PointerKind kind,
                      core::ViewportPoint vp, PointerButton button,
                      std::uint32_t modifiers) override;
  void inject_key(const PageHandle& h, const KeyDescriptor& key) override;
  void inject_wheel(const PageHandle& h, core::ViewportPoint vp,
                    double delta_x, double delta_y) override;

  core::ViewportMetrics scroll_to(const PageHandle& h, double scroll_x,
                                  double scroll_y) override;
  core::ViewportMetrics query_metrics(const PageHandle& h) override;

  std::vector<InjectedEvent> injections(const PageHandle& h) const;
  std::vector<MockOp> operations(const PageHandle& h) const;
  std::size_t resolve_calls() const;

 private:
  friend class MockFrameStream;

  struct Page {
    std::string url;
    core::ViewportMetrics metrics;
    std::uint32_t seq = 0;
    bool capturing = false;
    std::vector<InjectedEvent> injections;
    std::vector<MockOp> ops;
  };

  Page& page_locked(const PageHandle& h);
  const Page& page_locked(const PageHandle& h) const;
  void load_locked(Page& page, std::string_view url);
  void record_locked(Page& page, InjectedEvent e);
  void check_in_viewport(const Page& page, core::ViewportPoint vp) const;

  const Clock& clock_;
  const MockPageModel& model_;
  mutable std::mutex mu_;
  std::map<std::string, Page> pages_;
  std::uint64_t next_id_ = 1;
  std::size_t resolve_calls_ = 0;
};

}  // namespace btw::bridge
