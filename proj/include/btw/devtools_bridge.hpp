#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

#include "btw/bridge.hpp"
#include "btw/clock.hpp"
#include "json.hpp"

namespace btw::bridge {

struct DevtoolsOptions {
  // Either the browser's HTTP debugging endpoint ("http://127.0.0.1:9222"),
  // used to open a new tab per navigate(), or one page target's WebSocket URL
  // ("ws://127.0.0.1:9222/devtools/page/<id>"), which is driven directly.
  std::string endpoint;
  std::chrono::milliseconds call_timeout{10000};
  std::chrono::milliseconds load_timeout{15000};
};

class CdpConnection;

// Adapter for a real browser over its remote-debugging protocol. Frames come
// from the screencast (PNG, decoded to RGBA); selectors, metrics and scrolling
// go through Runtime.evaluate; input through Input.dispatch*Event.
class DevtoolsBridge : public BrowserBridge {
 public:
  DevtoolsBridge(DevtoolsOptions options, const Clock& clock);
  ~DevtoolsBridge() override;

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

 private:
  struct Page;
  friend class DevtoolsFrameStream;

  std::shared_ptr<Page> page(const PageHandle& h) const;
  nlohmann::json evaluate(Page& p, const std::string& expression);
  core::ViewportMetrics fetch_metrics(Page& p);
  void load(Page& p, std::string_view url);
  void check_in_viewport(Page& p, core::ViewportPoint vp);

  DevtoolsOptions options_;
  const Clock& clock_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Page>> pages_;
};

}  // namespace btw::bridge
