#include "btw/session.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "btw/error.hpp"
#include "btw/png_codec.hpp"

namespace btw::session {

namespace {

using protocol::ErrorMsg;
namespace ec = protocol::error_code;

ErrorMsg make_error(std::string_view code, std::string detail) {
  return {std::string(code), std::move(detail)};
}

std::string_view wire_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownPanel: return ec::kUnknownPanel;
    case ErrorCode::kOutOfViewport: return ec::kOutOfViewport;
    case ErrorCode::kInvalidInput: return ec::kInvalidInput;
    case ErrorCode::kDecode: return ec::kDecode;
    default: return ec::kInjectionFailed;
  }
}

// Integer injection coordinates, half away from zero, kept on the viewport.
core::ViewportPoint round_to_viewport(core::ViewportPoint p,
                                      const core::ViewportMetrics& m) {
  return {std::clamp(std::round(p.x), 0.0, std::floor(m.viewport_w)),
          std::clamp(std::round(p.y), 0.0, std::floor(m.viewport_h))};
}

bridge::PointerKind pointer_kind(protocol::InputKind k) {
  switch (k) {
    case protocol::InputKind::kPointerDown: return bridge::PointerKind::kDown;
    case protocol::InputKind::kPointerUp: return bridge::PointerKind::kUp;
    default: return bridge::PointerKind::kMove;
  }
}

}  // namespace

LatencyStats summarize_latency(std::vector<double> samples_ms) {
  LatencyStats s;
  s.count = samples_ms.size();
  if (samples_ms.empty()) return s;
  std::sort(samples_ms.begin(), samples_ms.end());
  s.min_ms = samples_ms.front();
  s.max_ms = samples_ms.back();
  const std::size_t n = samples_ms.size();
  s.median_ms = n % 2 ? samples_ms[n / 2]
                      : (samples_ms[n / 2 - 1] + samples_ms[n / 2]) / 2;
  return s;
}

Session::Session(bridge::BrowserBridge& bridge, bridge::PageHandle page,
                 decomposer::ResolvedLayout layout, SessionOptions options)
    : bridge_(bridge),
      page_(std::move(page)),
      layout_(std::move(layout)),
      options_(std::move(options)) {
  options_.policy.validate();
  init_panel_states();
}

Session::~Session() { stop_capture(); }

void Session::init_panel_states() {
  std::vector<policy::PanelPlacementRequest> requests;
  for (const auto& p : layout_.panels) {
    requests.push_back({p.placement, p.rect.h / p.rect.w});
  }
  const auto& cfg = options_.policy;
  auto poses = policy::initial_poses(requests, cfg);
  states_.clear();
  for (std::size_t i = 0; i < layout_.panels.size(); ++i) {
    const auto& panel = layout_.panels[i];
    auto snapped = policy::snap_pose(poses[i], cfg.surfaces, cfg);
    PanelState st;
    st.pose = snapped.pose;
    st.anchored = snapped.anchored;
    st.mode = policy::initial_mode(
        panel.interaction, policy::reach_distance(st.pose, cfg), cfg);
    states_[panel.id] = st;
  }
}

Session::ClientId Session::attach(std::shared_ptr<ClientSink> sink) {
  std::lock_guard lock(state_mu_);
  ClientId id = next_client_++;
  clients_[id] = Client{std::move(sink), false, std::nullopt};
  return id;
}

void Session::detach(ClientId id) {
  std::lock_guard lock(state_mu_);
  clients_.erase(id);
}

std::size_t Session::client_count() const {
  std::lock_guard lock(state_mu_);
  return clients_.size();
}

void Session::reply(ClientId id, protocol::Message m) {
  std::shared_ptr<ClientSink> sink;
  {
    std::lock_guard lock(state_mu_);
    auto it = clients_.find(id);
    if (it == clients_.end()) return;
    sink = it->second.sink;
  }
  sink->send(m);
}

void Session::broadcast(const protocol::Message& m) {
  std::lock_guard lock(state_mu_);
  for (auto& [id, client] : clients_) {
    if (client.greeted) client.sink->send(m);
  }
}

bool Session::accept_seq(ClientId id, std::uint64_t seq) {
  std::lock_guard lock(state_mu_);
  auto it = clients_.find(id);
  if (it == clients_.end()) return false;
  auto& last = it->second.last_seq;
  if (last && seq <= *last) return false;
  last = seq;
  return true;
}

void Session::on_wire(ClientId id, const protocol::WireFrame& frame) {
  protocol::Message m;
  try {
    m = protocol::decode_message(frame);
  } catch (const DecodeError& e) {
    reply(id, make_error(ec::kDecode, e.what()));
    return;
  }
  on_message(id, m);
}

void Session::on_message(ClientId id, const protocol::Message& m) {
  if (const auto* hello = std::get_if<protocol::Hello>(&m)) {
    if (hello->protocol_version != protocol::kProtocolVersion) {
      std::shared_ptr<ClientSink> sink;
      {
        std::lock_guard lock(state_mu_);
        auto it = clients_.find(id);
        if (it == clients_.end()) return;
        sink = it->second.sink;
      }
      sink->send(make_error(
          ec::kBadVersion,
          "server speaks protocol " +
              std::to_string(protocol::kProtocolVersion) + ", client sent " +
              std::to_string(hello->protocol_version)));
      sink->close();
      return;
    }
    protocol::LayoutAnnounce a = announce();
    std::lock_guard lock(state_mu_);
    auto it = clients_.find(id);
    if (it == clients_.end()) return;
    it->second.greeted = true;
    it->second.sink->send(a);
    // Unchanged panels are delta-suppressed, so late joiners get the latest
    // frame of every panel up front.
    for (const auto& panel : layout_.panels) {
      auto f = last_frames_.find(panel.id);
      if (f != last_frames_.end()) it->second.sink->send(f->second);
    }
    return;
  }

  {
    std::lock_guard lock(state_mu_);
    auto it = clients_.find(id);
    if (it == clients_.end()) return;
    if (!it->second.greeted) {
      it->second.sink->send(
          make_error(ec::kHelloRequired, "send hello before other messages"));
      return;
    }
  }

  if (const auto* input = std::get_if<protocol::InputEventMsg>(&m)) {
    if (!accept_seq(id, input->client_seq)) {
      reply(id, make_error(ec::kStaleSeq,
                           "client_seq " + std::to_string(input->client_seq) +
                               " is not increasing"));
      return;
    }
    InjectionOutcome out = handle_input(*input);
    if (out.error) reply(id, *out.error);
    return;
  }
  if (const auto* t = std::get_if<protocol::PanelTransformMsg>(&m)) {
    if (!accept_seq(id, t->client_seq)) {
      reply(id, make_error(ec::kStaleSeq,
                           "client_seq " + std::to_string(t->client_seq) +
                               " is not increasing"));
      return;
    }
    if (!handle_panel_transform(*t)) {
      reply(id, make_error(ec::kUnknownPanel,
                           "no panel '" + t->panel_id + "'"));
    }
    return;
  }
  reply(id, make_error(ec::kUnsupported,
                       "message type is not accepted from clients"));
}

InjectionOutcome Session::handle_input(const protocol::InputEvent& e) {
  const auto received = std::chrono::steady_clock::now();
  std::optional<decomposer::ResolvedPanel> panel;
  {
    std::lock_guard lock(state_mu_);
    if (const auto* p = layout_.find(e.panel_id)) panel = *p;
  }
  if (!panel) {
    InjectionOutcome out;
    out.error = make_error(ec::kUnknownPanel, "no panel '" + e.panel_id + "'");
    return out;
  }

  InjectionOutcome out;
  {
    std::lock_guard lock(inject_mu_);
    try {
      out = inject_locked(e, *panel);
    } catch (const Error& err) {
      out.injected = false;
      out.error = make_error(wire_code(err.code()), err.what());
    }
  }
  if (out.injected) {
    const double ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - received)
                          .count();
    std::lock_guard lock(latency_mu_);
    latency_ms_.push_back(ms);
  }
  return out;
}

InjectionOutcome Session::inject_locked(
    const protocol::InputEvent& e, const decomposer::ResolvedPanel& panel) {
  InjectionOutcome out;
  if (e.kind == protocol::InputKind::kKey) {
    // Keys go to whatever the page has focused, which follows the last
    // pointer press.
    bridge_.inject_key(page_, e.key);
    out.injected = true;
    return out;
  }

  const core::PagePoint target = core::panel_local_to_doc(e.location,
                                                          panel.rect);
  core::ViewportMetrics m = bridge_.query_metrics(page_);
  core::ViewportHit hit;
  if (panel.anchoring == layout::Anchoring::kViewport) {
    hit.point = {target.x, target.y};
    hit.visible = target.x >= 0 && target.x <= m.viewport_w && target.y >= 0 &&
                  target.y <= m.viewport_h;
  } else {
    hit = core::doc_to_viewport(target, m);
    if (!hit.visible && options_.auto_scroll) {
      m = bridge_.scroll_to(page_, target.x - m.viewport_w / 2,
                            target.y - m.viewport_h / 2);
      out.scrolled = true;
      hit = core::doc_to_viewport(target, m);
    }
  }
  if (!hit.visible) {
    out.error = make_error(
        ec::kOutOfViewport,
        "panel '" + panel.id + "' point maps outside the viewport" +
            (out.scrolled ? " even after scrolling" : ""));
    return out;
  }

  out.point = round_to_viewport(hit.point, m);
  if (e.kind == protocol::InputKind::kWheel) {
    bridge_.inject_wheel(page_, out.point, e.delta_x, e.delta_y);
  } else {
    bridge_.inject_pointer(page_, pointer_kind(e.kind), out.point, e.button,
                           e.modifiers);
  }
  out.injected = true;
  return out;
}

std::optional<protocol::PanelStateMsg> Session::handle_panel_transform(
    const protocol::PanelTransformMsg& t) {
  if (!t.pose.valid()) return std::nullopt;
  const auto& cfg = options_.policy;
  protocol::PanelStateMsg msg;
  {
    std::lock_guard lock(state_mu_);
    auto it = states_.find(t.panel_id);
    if (it == states_.end()) return std::nullopt;
    auto snapped = policy::snap_pose(t.pose, cfg.surfaces, cfg);
    PanelState& st = it->second;
    st.pose = snapped.pose;
    st.anchored = snapped.anchored;
    st.mode = policy::input_mode(policy::reach_distance(st.pose, cfg),
                                 st.mode, cfg);
    msg = {t.panel_id, st.pose, st.anchored, st.mode};
    for (auto& [id, client] : clients_) {
      if (client.greeted) client.sink->send(msg);
    }
  }
  return msg;
}

protocol::PanelFrameMsg Session::to_wire(
    const decomposer::PanelFrame& f) const {
  protocol::PanelFrameMsg m;
  m.panel_hash = protocol::panel_hash(f.panel_id);
  m.source_seq = f.source_seq;
  m.format = options_.frame_format;
  if (f.off_viewport) return m;
  auto u16 = [](int v) {
    if (v < 0 || v > 0xffff) {
      throw Error(ErrorCode::kInternal, "crop exceeds 16-bit frame header");
    }
    return static_cast<std::uint16_t>(v);
  };
  m.x = u16(f.crop.x);
  m.y = u16(f.crop.y);
  m.w = u16(f.crop.w);
  m.h = u16(f.crop.h);
  if (m.format == protocol::FrameFormat::kPng) {
    m.payload = encode_png(f.bitmap);
  } else {
    m.payload = f.bitmap.rgba;
  }
  return m;
}

void Session::broadcast_panel_frames(
    std::span<const decomposer::PanelFrame> frames) {
  std::vector<protocol::PanelFrameMsg> wire;
  wire.reserve(frames.size());
  for (const auto& f : frames) wire.push_back(to_wire(f));

  std::lock_guard lock(state_mu_);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    last_frames_[frames[i].panel_id] = wire[i];
    for (auto& [id, client] : clients_) {
      if (client.greeted) client.sink->send(wire[i]);
    }
  }
}

std::vector<decomposer::PanelFrame> Session::process_frame(
    const bridge::SourceFrame& f) {
  std::lock_guard frame_lock(frame_mu_);
  decomposer::ResolvedLayout layout;
  BatchObserver observer;
  {
    std::lock_guard lock(state_mu_);
    layout = layout_;
    observer = observer_;
  }
  auto frames = decomposer::decompose_frame(f, layout, cache_);
  broadcast_panel_frames(frames);
  if (observer) observer(f.seq, frames);
  return frames;
}

void Session::start_capture(int max_fps) {
  std::lock_guard lock(frame_mu_);
  if (stream_) throw Error(ErrorCode::kConflict, "capture already running");
  stream_ = bridge_.start_capture(page_, max_fps);
}

void Session::stop_capture() {
  std::unique_ptr<bridge::FrameStream> stream;
  {
    std::lock_guard lock(frame_mu_);
    stream = std::move(stream_);
  }
  if (stream) stream->stop();
}

bool Session::pump() {
  std::optional<bridge::SourceFrame> frame;
  {
    std::lock_guard lock(frame_mu_);
    if (!stream_) return false;
    frame = stream_->poll();
  }
  if (!frame) return false;
  process_frame(*frame);
  return true;
}

void Session::refresh_layout(const layout::LayoutDocument& doc) {
  auto resolved = decomposer::resolve_layout(doc, bridge_, page_);
  {
    std::lock_guard frame_lock(frame_mu_);
    std::lock_guard lock(state_mu_);
    layout_ = std::move(resolved);
    init_panel_states();
    last_frames_.clear();
    cache_.clear();
  }
  broadcast(announce());
}

protocol::LayoutAnnounce Session::announce() const {
  protocol::LayoutAnnounce a;
  a.metrics = bridge_.query_metrics(page_);
  const auto& cfg = options_.policy;
  a.url = page_.url;
  a.d_touch = cfg.d_touch;
  a.d_ray = cfg.d_ray;
  a.snap_threshold = cfg.snap_threshold;
  a.surfaces = cfg.surfaces;
  std::lock_guard lock(state_mu_);
  a.layout_name = layout_.name;
  for (const auto& p : layout_.panels) {
    const PanelState& st = states_.at(p.id);
    protocol::AnnouncedPanel ap;
    ap.id = p.id;
    ap.hash = protocol::panel_hash(p.id);
    ap.display_name = p.display_name;
    ap.role = p.role;
    ap.anchoring = p.anchoring;
    ap.rect = p.rect;
    ap.placement = p.placement;
    ap.interaction = p.interaction;
    ap.pose = st.pose;
    ap.anchored = st.anchored;
    ap.input_mode = st.mode;
    a.panels.push_back(std::move(ap));
  }
  return a;
}

std::optional<PanelState> Session::panel_state(
    const std::string& panel_id) const {
  std::lock_guard lock(state_mu_);
  auto it = states_.find(panel_id);
  if (it == states_.end()) return std::nullopt;
  return it->second;
}

decomposer::ResolvedLayout Session::layout() const {
  std::lock_guard lock(state_mu_);
  return layout_;
}

void Session::set_batch_observer(BatchObserver observer) {
  std::lock_guard lock(state_mu_);
  observer_ = std::move(observer);
}

std::vector<double> Session::latency_samples() const {
  std::lock_guard lock(latency_mu_);
  return latency_ms_;
}

LatencyStats Session::latency() const {
  return summarize_latency(latency_samples());
}

}  // namespace btw::session
