#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "btw/bridge.hpp"
#include "btw/decomposer.hpp"
#include "btw/policy.hpp"
#include "btw/protocol.hpp"

namespace btw::session {

// Outbound half of one client connection. Implementations must not call back
// into the Session.
class ClientSink {
 public:
  virtual ~ClientSink() = default;
  virtual void send(const protocol::Message& m) = 0;
  virtual void close() {}
};

struct SessionOptions {
  policy::PolicyConfig policy;
  bool auto_scroll = true;
  protocol::FrameFormat frame_format = protocol::FrameFormat::kRawRgba;
};

struct InjectionOutcome {
  bool injected = false;
  bool scrolled = false;  // auto-scroll ran before injecting
  core::ViewportPoint point;
  std::optional<protocol::ErrorMsg> error;
};

struct PanelState {
  policy::PanelPose pose;
  bool anchored = false;
  policy::InputMode mode = policy::InputMode::kRay;
};

struct LatencyStats {
  std::size_t count = 0;
  double min_ms = 0;
  double median_ms = 0;
  double max_ms = 0;
};

LatencyStats summarize_latency(std::vector<double> samples_ms);

// Called once per decomposed source frame with the panels actually emitted.
using BatchObserver = std::function<void(
    std::uint32_t source_seq, std::span<const decomposer::PanelFrame>)>;

// One mirrored page shared by any number of workspace clients.
//
// Injections for the page run through one ordered pipeline; each client's
// messages keep their client_seq order. Frame processing is serialized in
// seq order and may run concurrently with input handling.
class Session {
 public:
  using ClientId = std::uint64_t;

  Session(bridge::BrowserBridge& bridge, bridge::PageHandle page,
          decomposer::ResolvedLayout layout, SessionOptions options);
  ~Session();

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  ClientId attach(std::shared_ptr<ClientSink> sink);
  void detach(ClientId id);
  std::size_t client_count() const;

  // Entry point for decoded client messages. Replies (layout announce,
  // errors) go to the sending client; state changes are broadcast.
  void on_message(ClientId id, const protocol::Message& m);
  void on_wire(ClientId id, const protocol::WireFrame& frame);

  InjectionOutcome handle_input(const protocol::InputEvent& e);
  std::optional<protocol::PanelStateMsg> handle_panel_transform(
      const protocol::PanelTransformMsg& t);
  void broadcast_panel_frames(std::span<const decomposer::PanelFrame> frames);

  // Decomposes one source frame and broadcasts the changed panels.
  std::vector<decomposer::PanelFrame> process_frame(
      const bridge::SourceFrame& f);

  void start_capture(int max_fps);
  void stop_capture();
  // Polls the capture stream once; true when a frame was processed.
  bool pump();

  // Re-resolves selectors (navigation or explicit refresh) and re-announces
  // the layout to every client.
  void refresh_layout(const layout::LayoutDocument& doc);

  protocol::LayoutAnnounce announce() const;
  std::optional<PanelState> panel_state(const std::string& panel_id) const;
  decomposer::ResolvedLayout layout() const;
  const bridge::PageHandle& page() const { return page_; }

  void set_batch_observer(BatchObserver observer);

  std::vector<double> latency_samples() const;
  LatencyStats latency() const;

 private:
  struct Client {
    std::shared_ptr<ClientSink> sink;
    bool greeted = false;
    std::optional<std::uint64_t> last_seq;
  };

  void init_panel_states();
  void reply(ClientId id, protocol::Message m);
  void broadcast(const protocol::Message& m);
  protocol::PanelFrameMsg to_wire(const decomposer::PanelFrame& f) const;
  InjectionOutcome inject_locked(const protocol::InputEvent& e,
                                 const decomposer::ResolvedPanel& panel);
  bool accept_seq(ClientId id, std::uint64_t seq);

  bridge::BrowserBridge& bridge_;
  bridge::PageHandle page_;
  decomposer::ResolvedLayout layout_;
  SessionOptions options_;

  // Guards layout_, clients_, states_, last_frames_ and observer_.
  mutable std::mutex state_mu_;
  std::map<ClientId, Client> clients_;
  ClientId next_client_ = 1;
  std::map<std::string, PanelState> states_;
  std::map<std::string, protocol::PanelFrameMsg> last_frames_;
  BatchObserver observer_;

  std::mutex inject_mu_;
  mutable std::mutex latency_mu_;
  std::vector<double> latency_ms_;

  std::mutex frame_mu_;  // cache_, stream_
  decomposer::DeltaCache cache_;
  std::unique_ptr<bridge::FrameStream> stream_;
};

}  // namespace btw::session
