#include "doctest.h"
#include "btw/error.hpp"
#include "btw/geometry.hpp"
#include "btw/replay.hpp"

using namespace btw;
using namespace btw::replay;

namespace {

std::string error_path(const std::string& text) {
  try {
    parse_script(text);
  } catch (const ValidationError& e) {
    return e.path();
  }
  return "<no error>";
}

}  // namespace

TEST_CASE("script parsing fills defaults") {
  auto s = parse_script(R"({"layout": "youtube", "steps": [
    {"at_ms": 10, "input": {"panel_id": "player", "kind": "pointer-down", "u": 0.5, "v": 0.5}},
    {"at_ms": 20, "input": {"panel_id": "player", "kind": "pointer-move", "u": 0.5, "v": 0.5}},
    {"at_ms": 30, "input": {"panel_id": "player", "kind": "wheel", "u": 0, "v": 0, "delta_y": 5}},
    {"at_ms": 40, "scroll": {"x": 0, "y": 100}},
    {"at_ms": 40, "expect": {"kind": "sync"}}
  ]})");
  CHECK(s.url == "mock://grid");
  CHECK(s.max_fps == 15);
  CHECK(s.duration_ms == 0);
  REQUIRE(s.steps.size() == 5);
  auto down = std::get<protocol::InputEvent>(s.steps[0].action);
  CHECK(down.button == bridge::PointerButton::kLeft);
  CHECK(down.client_seq == 1);
  auto move = std::get<protocol::InputEvent>(s.steps[1].action);
  CHECK(move.button == bridge::PointerButton::kNone);
  CHECK(move.client_seq == 2);
  auto wheel = std::get<protocol::InputEvent>(s.steps[2].action);
  CHECK(wheel.delta_y == 5);
  CHECK(wheel.delta_x == 0);
  CHECK(std::get<ScrollAction>(s.steps[3].action) == ScrollAction{0, 100});
}

TEST_CASE("script errors carry a JSON path") {
  CHECK(error_path("{") == "$");
  CHECK(error_path(R"({"steps": []})") == "$.layout");
  CHECK(error_path(R"({"layout": "x", "steps": [], "extra": 1})") == "$.extra");
  CHECK(error_path(R"({"layout": "x", "steps": [{"at_ms": 5, "scroll": {"x": 0, "y": 0}},
                                                {"at_ms": 4, "scroll": {"x": 0, "y": 0}}]})") ==
        "$.steps[1].at_ms");
  CHECK(error_path(R"({"layout": "x", "steps": [{"at_ms": 5}]})") == "$.steps[0]");
  CHECK(error_path(R"({"layout": "x", "steps": [{"at_ms": 5, "expect": {"kind": "magic"}}]})") ==
        "$.steps[0].expect.kind");
  CHECK(error_path(R"({"layout": "x", "steps": [{"at_ms": 5,
          "input": {"panel_id": "p", "kind": "pointer-down", "u": 2, "v": 0}}]})") ==
        "$.steps[0].input");
  CHECK(error_path(R"({"layout": "x", "max_fps": 0, "steps": []})") == "$.max_fps");
}

TEST_CASE("an empty script yields an empty passing report") {
  auto report = run_script(parse_script(R"({"layout": "youtube", "steps": []})"), {});
  CHECK(report.assertions.empty());
  CHECK(report.failures() == 0);
  CHECK(report.passed());
  CHECK(report.steps == 0);
  CHECK(report.injections == 0);
}

TEST_CASE("a click expectation at the mapped coordinates passes") {
  // Player region (40, 140, 1280, 720): centre (680, 500).
  const core::RegionRect player{40, 140, 1280, 720};
  auto centre = core::panel_local_to_doc({0.5, 0.5}, player);
  std::string script = R"({"layout": "youtube", "steps": [
    {"at_ms": 100, "input": {"panel_id": "player", "kind": "pointer-down", "u": 0.5, "v": 0.5}},
    {"at_ms": 100, "expect": {"kind": "injected", "x": )" +
                       std::to_string(int(centre.x)) + R"(, "y": )" +
                       std::to_string(int(centre.y)) +
                       R"(, "event": "pointer-down"}},
    {"at_ms": 100, "expect": {"kind": "error", "code": "none"}}
  ]})";
  auto report = run_script(parse_script(script), {});
  REQUIRE(report.assertions.size() == 2);
  CHECK(report.assertions[0].passed);
  CHECK(report.assertions[1].passed);
  CHECK(report.injections == 1);
}

TEST_CASE("moving a panel out of reach switches it to ray") {
  auto report = run_script(parse_script(R"({"layout": "youtube", "steps": [
    {"at_ms": 0, "expect": {"kind": "mode", "panel_id": "controls", "mode": "touch"}},
    {"at_ms": 0, "expect": {"kind": "anchored", "panel_id": "controls", "value": true}},
    {"at_ms": 50, "transform": {"panel_id": "controls", "pose": {
        "position": [0, 0.45, -0.9], "orientation": [1, 0, 0, 0], "size": [0.5, 0.1]}}},
    {"at_ms": 50, "expect": {"kind": "mode", "panel_id": "controls", "mode": "ray"}},
    {"at_ms": 50, "expect": {"kind": "anchored", "panel_id": "controls", "value": false}}
  ]})"), {});
  REQUIRE(report.assertions.size() == 4);
  for (const auto& a : report.assertions) CHECK_MESSAGE(a.passed, a.detail);
}

TEST_CASE("failed expectations are reported, not thrown") {
  auto report = run_script(parse_script(R"({"layout": "youtube", "steps": [
    {"at_ms": 0, "input": {"panel_id": "ghost", "kind": "pointer-down", "u": 0, "v": 0}},
    {"at_ms": 0, "expect": {"kind": "error", "code": "unknown-panel"}},
    {"at_ms": 0, "expect": {"kind": "injected", "x": 1, "y": 1}},
    {"at_ms": 0, "expect": {"kind": "mode", "panel_id": "ghost", "mode": "ray"}}
  ]})"), {});
  REQUIRE(report.assertions.size() == 3);
  CHECK(report.assertions[0].passed);
  CHECK_FALSE(report.assertions[1].passed);
  CHECK_FALSE(report.assertions[2].passed);
  CHECK(report.failures() == 2);
  CHECK_FALSE(report.passed());
}

TEST_CASE("unknown layouts are infrastructure errors") {
  CHECK_THROWS_AS(run_script(parse_script(R"({"layout": "nope", "steps": []})"), {}),
                  Error);
}

TEST_CASE("scrolls and clicks keep frames in sync") {
  auto report = run_script(parse_script(R"({"layout": "youtube", "duration_ms": 3000,
    "url": "mock://grid?vw=1920&vh=1200", "steps": [
    {"at_ms": 200, "input": {"panel_id": "comments", "kind": "pointer-down", "u": 0.5, "v": 0.9}},
    {"at_ms": 500, "scroll": {"x": 0, "y": 0}},
    {"at_ms": 900, "input": {"panel_id": "controls", "kind": "pointer-up", "u": 0.1, "v": 0.5}},
    {"at_ms": 1000, "expect": {"kind": "sync"}}
  ]})"), {});
  CHECK(report.passed());
  CHECK(report.sync.ok);
  CHECK(report.source_frames == 46);
  CHECK(report.panels.at("player").first_seq == 1);
  CHECK(report.panels.at("player").last_seq == 46);
}

TEST_CASE("reports are deterministic") {
  auto script = parse_script(R"({"layout": "maps", "duration_ms": 1500, "steps": [
    {"at_ms": 100, "input": {"panel_id": "map-canvas", "kind": "pointer-down", "u": 0.2, "v": 0.3}},
    {"at_ms": 300, "scroll": {"x": 50, "y": 400}},
    {"at_ms": 600, "input": {"panel_id": "info-panel", "kind": "wheel", "u": 0.5, "v": 0.5, "delta_y": 100}}
  ]})");
  auto a = run_script(script, {});
  auto b = run_script(script, {});
  CHECK(a.canonical() == b.canonical());
  CHECK(a.canonical().find("latency") == std::string::npos);
  CHECK(a.latency_line().rfind("latency_ms count=2 ", 0) == 0);
}

TEST_CASE("assert_sync accepts a well-formed trace") {
  SyncTrace t;
  t.batches = {{1, {{"a", 1}, {"b", 1}}}, {2, {{"a", 2}}}, {3, {}}};
  t.delivered = {{10, 1}, {11, 1}, {10, 2}};
  CHECK(assert_sync(t).ok);
  CHECK(assert_sync({}).ok);
}

TEST_CASE("assert_sync rejects mixed batches and regressions") {
  SyncTrace mixed;
  mixed.batches = {{2, {{"a", 2}, {"b", 1}}}};
  auto r = assert_sync(mixed);
  CHECK_FALSE(r.ok);
  CHECK(r.detail.find("mixes") != std::string::npos);

  SyncTrace stale_source;
  stale_source.batches = {{3, {{"a", 2}, {"b", 2}}}};
  CHECK_FALSE(assert_sync(stale_source).ok);

  SyncTrace regress;
  regress.batches = {{5, {{"a", 5}}}, {4, {{"a", 4}}}};
  CHECK_FALSE(assert_sync(regress).ok);

  SyncTrace delivered;
  delivered.delivered = {{7, 3}, {8, 1}, {7, 2}};
  r = assert_sync(delivered);
  CHECK_FALSE(r.ok);
  CHECK(r.detail.find("delivery 2") != std::string::npos);
}
