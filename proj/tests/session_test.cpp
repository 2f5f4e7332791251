#include <random>
#include <thread>

#include "doctest.h"
#include "btw/decomposer.hpp"
#include "btw/error.hpp"
#include "btw/mock_bridge.hpp"
#include "btw/png_codec.hpp"
#include "btw/session.hpp"
#include "oracles.hpp"

using namespace btw;
using namespace btw::session;
using protocol::InputKind;

namespace {

struct Sink : ClientSink {
  std::mutex mu;
  std::vector<protocol::Message> got;
  bool closed = false;

  void send(const protocol::Message& m) override {
    std::lock_guard lock(mu);
    got.push_back(m);
  }
  void close() override { closed = true; }

  template <typename T>
  std::vector<T> of() {
    std::lock_guard lock(mu);
    std::vector<T> out;
    for (const auto& m : got) {
      if (auto* t = std::get_if<T>(&m)) out.push_back(*t);
    }
    return out;
  }
  std::string last_error() {
    auto errs = of<protocol::ErrorMsg>();
    return errs.empty() ? "" : errs.back().code;
  }
};

layout::PanelSpec rect_panel(std::string id, core::RegionRect r,
                             layout::Anchoring a = layout::Anchoring::kDocument) {
  layout::PanelSpec p;
  p.id = std::move(id);
  p.display_name = p.id;
  p.region.rect = r;
  p.anchoring = a;
  return p;
}

struct Fixture {
  VirtualClock clock;
  bridge::MockBridge bridge{clock};
  bridge::PageHandle page = bridge.navigate("mock://grid");
  std::unique_ptr<Session> session;

  explicit Fixture(std::vector<layout::PanelSpec> panels,
                   SessionOptions options = {}) {
    layout::LayoutDocument doc{"test", "*", std::move(panels)};
    session = std::make_unique<Session>(
        bridge, page, decomposer::resolve_layout(doc, bridge, page), options);
  }

  std::pair<Session::ClientId, std::shared_ptr<Sink>> greeted_client() {
    auto sink = std::make_shared<Sink>();
    auto id = session->attach(sink);
    session->on_message(id, protocol::Hello{"test", 1});
    return {id, sink};
  }
};

protocol::InputEvent click(std::string panel, double u, double v,
                           std::uint64_t seq = 1) {
  protocol::InputEvent e;
  e.panel_id = std::move(panel);
  e.kind = InputKind::kPointerDown;
  e.location = {u, v};
  e.button = bridge::PointerButton::kLeft;
  e.client_seq = seq;
  return e;
}

}  // namespace

TEST_CASE("a click at the panel centre lands at the mapped viewport point") {
  Fixture fx({rect_panel("a", {100, 200, 400, 300})});
  auto out = fx.session->handle_input(click("a", 0.5, 0.5));
  CHECK(out.injected);
  CHECK_FALSE(out.error);
  auto log = fx.bridge.injections(fx.page);
  REQUIRE(log.size() == 1);
  CHECK(log[0].kind == bridge::InjectedKind::kPointerDown);
  CHECK(log[0].point == core::ViewportPoint{300, 350});
  CHECK(log[0].button == bridge::PointerButton::kLeft);
}

TEST_CASE("injection coordinates round half away from zero") {
  Fixture fx({rect_panel("a", {0.25, 0.5, 3, 3})});
  fx.session->handle_input(click("a", 0.75, 0));  // (2.5, 0.5)
  auto log = fx.bridge.injections(fx.page);
  REQUIRE(log.size() == 1);
  CHECK(log[0].point == core::ViewportPoint{3, 1});
}

TEST_CASE("randomized mapping agrees with the analytic oracle") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unit(0, 1), px(0, 1500), py(0, 2500),
      size(1, 400), sx(0, 720), sy(0, 2200);
  Fixture fx({rect_panel("a", {0, 0, 1, 1})});
  for (int i = 0; i < 200; ++i) {
    core::RegionRect r{px(rng), py(rng), size(rng), size(rng)};
    layout::LayoutDocument doc{"t", "*", {rect_panel("a", r)}};
    fx.session->refresh_layout(doc);
    auto m = fx.bridge.scroll_to(fx.page, sx(rng), sy(rng));
    const double u = unit(rng), v = unit(rng);
    auto out = fx.session->handle_input(click("a", u, v, i + 1));
    REQUIRE(out.injected);
    auto want = oracle::expected_injection(r, u, v, m.scroll_x, m.scroll_y);
    if (out.scrolled) {
      auto now = fx.bridge.query_metrics(fx.page);
      want = oracle::expected_injection(r, u, v, now.scroll_x, now.scroll_y);
    }
    CHECK(fx.bridge.injections(fx.page).back().point == want);
  }
}

TEST_CASE("unknown panels are rejected without touching the page") {
  Fixture fx({rect_panel("a", {0, 0, 10, 10})});
  auto out = fx.session->handle_input(click("zzz", 0.5, 0.5));
  CHECK_FALSE(out.injected);
  REQUIRE(out.error);
  CHECK(out.error->code == "unknown-panel");
  CHECK(fx.bridge.injections(fx.page).empty());
}

TEST_CASE("auto-scroll brings a scrolled-out target into view first") {
  Fixture fx({rect_panel("low", {0, 2000, 400, 300})});
  auto out = fx.session->handle_input(click("low", 0.5, 0.5));
  CHECK(out.injected);
  CHECK(out.scrolled);
  auto ops = fx.bridge.operations(fx.page);
  REQUIRE(ops.size() == 2);
  CHECK(ops[0].kind == bridge::MockOp::Kind::kScroll);
  CHECK(ops[1].kind == bridge::MockOp::Kind::kInject);
  auto m = fx.bridge.query_metrics(fx.page);
  CHECK(m.scroll_y == 2150 - 400);
  CHECK(fx.bridge.injections(fx.page)[0].point ==
        core::ViewportPoint{200, 400});
}

TEST_CASE("without auto-scroll an invisible target is an error") {
  SessionOptions opts;
  opts.auto_scroll = false;
  Fixture fx({rect_panel("low", {0, 2000, 400, 300})}, opts);
  auto out = fx.session->handle_input(click("low", 0.5, 0.5));
  CHECK_FALSE(out.injected);
  REQUIRE(out.error);
  CHECK(out.error->code == "out-of-viewport");
  CHECK(fx.bridge.operations(fx.page).empty());
}

TEST_CASE("viewport-anchored panels map without scroll") {
  Fixture fx({rect_panel("bar", {0, 750, 1280, 50}, layout::Anchoring::kViewport)});
  fx.bridge.scroll_to(fx.page, 0, 900);
  fx.session->handle_input(click("bar", 0.5, 1));
  auto log = fx.bridge.injections(fx.page);
  REQUIRE(log.size() == 1);
  CHECK(log[0].point == core::ViewportPoint{640, 800});
}

TEST_CASE("wheel and key events reach the bridge") {
  Fixture fx({rect_panel("a", {0, 0, 100, 100})});
  protocol::InputEvent wheel;
  wheel.panel_id = "a";
  wheel.kind = InputKind::kWheel;
  wheel.location = {0.1, 0.2};
  wheel.delta_y = -240;
  fx.session->handle_input(wheel);
  protocol::InputEvent key;
  key.panel_id = "a";
  key.kind = InputKind::kKey;
  key.key = {bridge::KeyAction::kDown, "Enter", "Enter", "\r", 0};
  fx.session->handle_input(key);
  auto log = fx.bridge.injections(fx.page);
  REQUIRE(log.size() == 2);
  CHECK(log[0].kind == bridge::InjectedKind::kWheel);
  CHECK(log[0].point == core::ViewportPoint{10, 20});
  CHECK(log[0].delta_y == -240);
  CHECK(log[1].kind == bridge::InjectedKind::kKey);
  CHECK(log[1].key.key == "Enter");
}

TEST_CASE("clients must say hello first and speak version 1") {
  Fixture fx({rect_panel("a", {0, 0, 10, 10})});
  auto sink = std::make_shared<Sink>();
  auto id = fx.session->attach(sink);
  fx.session->on_message(id, click("a", 0.5, 0.5));
  CHECK(sink->last_error() == "hello-required");
  CHECK(fx.bridge.injections(fx.page).empty());

  auto old = std::make_shared<Sink>();
  auto old_id = fx.session->attach(old);
  fx.session->on_message(old_id, protocol::Hello{"old", 2});
  CHECK(old->last_error() == "bad-version");
  CHECK(old->closed);

  fx.session->on_message(id, protocol::Hello{"ok", 1});
  auto announces = sink->of<protocol::LayoutAnnounce>();
  REQUIRE(announces.size() == 1);
  CHECK(announces[0].layout_name == "test");
  REQUIRE(announces[0].panels.size() == 1);
  CHECK(announces[0].panels[0].hash == protocol::panel_hash("a"));
  CHECK(fx.session->client_count() == 2);
  fx.session->detach(old_id);
  CHECK(fx.session->client_count() == 1);
}

TEST_CASE("client_seq must increase per client") {
  Fixture fx({rect_panel("a", {0, 0, 100, 100})});
  auto [id, sink] = fx.greeted_client();
  auto [other, other_sink] = fx.greeted_client();
  fx.session->on_message(id, click("a", 0.5, 0.5, 5));
  fx.session->on_message(id, click("a", 0.5, 0.5, 5));
  CHECK(sink->last_error() == "stale-seq");
  fx.session->on_message(id, click("a", 0.5, 0.5, 4));
  CHECK(sink->of<protocol::ErrorMsg>().size() == 2);
  // Another client has its own sequence.
  fx.session->on_message(other, click("a", 0.5, 0.5, 1));
  CHECK(other_sink->of<protocol::ErrorMsg>().empty());
  CHECK(fx.bridge.injections(fx.page).size() == 2);
}

TEST_CASE("undecodable bytes get a decode error reply") {
  Fixture fx({rect_panel("a", {0, 0, 10, 10})});
  auto [id, sink] = fx.greeted_client();
  fx.session->on_wire(id, {protocol::FrameKind::kText, "{nope"});
  CHECK(sink->last_error() == "decode");
  fx.session->on_message(id, protocol::ErrorMsg{"x", "y"});
  CHECK(sink->last_error() == "unsupported");
}

TEST_CASE("out-of-range unit points are invalid input") {
  Fixture fx({rect_panel("a", {0, 0, 10, 10})});
  auto out = fx.session->handle_input(click("a", 1.5, 0.5));
  REQUIRE(out.error);
  CHECK(out.error->code == "invalid-input");
}

TEST_CASE("panel transforms snap, switch mode and broadcast state") {
  Fixture fx({rect_panel("a", {0, 0, 10, 10})});
  auto [id, sink] = fx.greeted_client();
  protocol::PanelTransformMsg t;
  t.panel_id = "a";
  t.pose.position = {0, 0.02, -0.3};
  t.client_seq = 1;
  fx.session->on_message(id, t);
  auto states = sink->of<protocol::PanelStateMsg>();
  REQUIRE(states.size() == 1);
  CHECK(states[0].anchored);
  CHECK(states[0].pose.position.y == doctest::Approx(0));
  CHECK(states[0].input_mode == policy::InputMode::kTouch);

  t.pose.position = {0, 0.45, -0.9};
  t.client_seq = 2;
  fx.session->on_message(id, t);
  states = sink->of<protocol::PanelStateMsg>();
  REQUIRE(states.size() == 2);
  CHECK_FALSE(states[1].anchored);
  CHECK(states[1].input_mode == policy::InputMode::kRay);
  CHECK(fx.session->panel_state("a")->mode == policy::InputMode::kRay);

  t.panel_id = "nope";
  t.client_seq = 3;
  fx.session->on_message(id, t);
  CHECK(sink->last_error() == "unknown-panel");
}

TEST_CASE("initial panel states follow the placement policy") {
  auto surface = rect_panel("s", {0, 0, 10, 10});
  surface.placement = {layout::Zone::kSurface, layout::Distance::kNear, 1};
  auto far = rect_panel("f", {0, 0, 10, 10});
  far.placement = {layout::Zone::kPeripheral, layout::Distance::kFar, 1};
  Fixture fx({surface, far});
  CHECK(fx.session->panel_state("s")->anchored);
  CHECK(fx.session->panel_state("s")->mode == policy::InputMode::kTouch);
  CHECK_FALSE(fx.session->panel_state("f")->anchored);
  CHECK(fx.session->panel_state("f")->mode == policy::InputMode::kRay);
}

TEST_CASE("frames are broadcast to greeted clients with one source seq") {
  Fixture fx({rect_panel("video", {40, 140, 200, 200}),
              rect_panel("header", {0, 0, 300, 100})});
  auto [id, sink] = fx.greeted_client();
  auto lurker = std::make_shared<Sink>();
  fx.session->attach(lurker);
  std::vector<std::uint32_t> batch_seqs;
  fx.session->set_batch_observer(
      [&](std::uint32_t seq, std::span<const decomposer::PanelFrame> frames) {
        batch_seqs.push_back(seq);
        for (const auto& f : frames) CHECK(f.source_seq == seq);
      });
  fx.session->start_capture(15);
  CHECK_THROWS_AS(fx.session->start_capture(15), Error);
  for (int t = 0; t <= 200; ++t) {
    fx.clock.set(t);
    while (fx.session->pump()) {}
  }
  fx.session->stop_capture();
  auto frames = sink->of<protocol::PanelFrameMsg>();
  // Header once, video every frame.
  CHECK(batch_seqs.size() == 4);
  CHECK(frames.size() == 5);
  CHECK(lurker->got.empty());
  for (const auto& f : frames) {
    CHECK(f.format == protocol::FrameFormat::kRawRgba);
    CHECK(f.payload.size() == std::size_t(f.w) * f.h * 4);
  }
}

TEST_CASE("late joiners receive the latest frame of every panel") {
  SessionOptions opts;
  opts.frame_format = protocol::FrameFormat::kPng;
  Fixture fx({rect_panel("header", {0, 0, 300, 100})}, opts);
  fx.session->start_capture(15);
  CHECK(fx.session->pump());
  auto [id, sink] = fx.greeted_client();
  auto frames = sink->of<protocol::PanelFrameMsg>();
  REQUIRE(frames.size() == 1);
  CHECK(frames[0].format == protocol::FrameFormat::kPng);
  Bitmap b = decode_png(frames[0].payload);
  CHECK(b.width == 300);
  CHECK(b.height == 100);
  auto want = oracle::grid_pixel(10, 20, 0, 0);
  CHECK(std::equal(want.begin(), want.end(), b.pixel(10, 20)));
}

TEST_CASE("refresh re-announces to every greeted client") {
  Fixture fx({rect_panel("a", {0, 0, 10, 10})});
  auto [id, sink] = fx.greeted_client();
  fx.session->refresh_layout({"next", "*", {rect_panel("b", {0, 0, 5, 5})}});
  auto announces = sink->of<protocol::LayoutAnnounce>();
  REQUIRE(announces.size() == 2);
  CHECK(announces[1].layout_name == "next");
  CHECK(fx.session->layout().find("b") != nullptr);
}

TEST_CASE("concurrent input keeps every injection") {
  Fixture fx({rect_panel("a", {0, 0, 100, 100})});
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&] {
      for (int i = 0; i < 50; ++i) fx.session->handle_input(click("a", 0.5, 0.5));
    });
  }
  fx.session->start_capture(15);
  for (int i = 0; i < 20; ++i) {
    fx.clock.advance(70);
    fx.session->pump();
  }
  for (auto& th : threads) th.join();
  CHECK(fx.bridge.injections(fx.page).size() == 200);
  CHECK(fx.session->latency().count == 200);
}

TEST_CASE("latency summary") {
  auto s = summarize_latency({3, 1, 2, 10});
  CHECK(s.count == 4);
  CHECK(s.min_ms == 1);
  CHECK(s.median_ms == 2.5);
  CHECK(s.max_ms == 10);
  CHECK(summarize_latency({}).count == 0);
  CHECK(summarize_latency({4, 9, 1}).median_ms == 4);
}
