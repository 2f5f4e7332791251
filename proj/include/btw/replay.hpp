#pragma once

// Scripted, virtual-clock replay of a session against the mock bridge.
//
// Script files (.btwscript) are canonical JSON:
//
//   {
//     "layout": "youtube",
//     "url": "mock://grid",          optional
//     "max_fps": 15,                 optional
//     "duration_ms": 60000,          optional; keeps capturing after the last step
//     "steps": [
//       {"at_ms": 100, "input": {"panel_id": "player", "kind": "pointer-down",
//                                "u": 0.5, "v": 0.5}},
//       {"at_ms": 200, "transform": {"panel_id": "player", "pose": {...}}},
//       {"at_ms": 300, "scroll": {"x": 0, "y": 200}},
//       {"at_ms": 400, "expect": {"kind": "injected", "x": 680, "y": 500}}
//     ]
//   }
//
// Input fields follow the wire message; button defaults to "left" for
// pointer-down/up and "none" otherwise, modifiers and deltas to 0, and
// client_seq to the step's position in the script.
//
// Expectation kinds:
//   injected  last injection has point (x, y), optionally of kind "event"
//   mode      {"panel_id", "mode": "touch"|"ray"}
//   anchored  {"panel_id", "value": bool}
//   sync      assert_sync over the trace so far
//   error     last error since the previous expect carries "code"; the code
//             "none" asserts that no error arrived

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "btw/layout_store.hpp"
#include "btw/mock_bridge.hpp"
#include "btw/policy.hpp"
#include "btw/protocol.hpp"
#include "btw/session.hpp"

namespace btw::replay {

inline constexpr std::string_view kScriptExtension = ".btwscript";

struct ScrollAction {
  double x = 0;
  double y = 0;

  bool operator==(const ScrollAction&) const = default;
};

enum class ExpectKind { kInjected, kMode, kAnchored, kSync, kError };

std::string_view to_string(ExpectKind k);

struct Expectation {
  ExpectKind kind = ExpectKind::kSync;
  std::string panel_id;                          // mode, anchored
  double x = 0;                                  // injected
  double y = 0;                                  // injected
  std::optional<bridge::InjectedKind> event;     // injected
  policy::InputMode mode = policy::InputMode::kRay;
  bool value = false;                            // anchored
  std::string code;                              // error

  bool operator==(const Expectation&) const = default;
};

using Action = std::variant<protocol::InputEvent, protocol::PanelTransformMsg,
                            ScrollAction, Expectation>;

struct Step {
  std::int64_t at_ms = 0;
  Action action;

  bool operator==(const Step&) const = default;
};

struct ReplayScript {
  std::string layout;
  std::string url = "mock://grid";
  int max_fps = bridge::kDefaultMaxFps;
  std::int64_t duration_ms = 0;
  std::vector<Step> steps;

  bool operator==(const ReplayScript&) const = default;
};

// Throws ValidationError at a JSON path; at_ms must be non-decreasing.
ReplayScript parse_script(std::string_view text);
ReplayScript load_script(const std::filesystem::path& file);

// One decompose event: the source frame seq and the seq of every panel frame
// it emitted.
struct SyncBatch {
  std::uint32_t source_seq = 0;
  std::vector<std::pair<std::string, std::uint32_t>> panels;
};

struct SyncTrace {
  std::vector<SyncBatch> batches;
  // Panel frames in client receipt order.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> delivered;  // hash, seq
};

struct SyncResult {
  bool ok = true;
  std::string detail;
};

// Passes iff every batch is single-seq and matches its source frame, and the
// seqs of each panel never decrease, both per batch sequence and as delivered.
SyncResult assert_sync(const SyncTrace& trace);

struct AssertionResult {
  std::size_t step = 0;
  std::int64_t at_ms = 0;
  ExpectKind kind = ExpectKind::kSync;
  bool passed = false;
  std::string detail;
};

struct PanelTrace {
  std::size_t frames = 0;
  std::size_t off_viewport = 0;
  std::uint32_t first_seq = 0;
  std::uint32_t last_seq = 0;
  std::uint64_t seq_digest = 0;  // FNV-1a 64 over the emitted seqs
};

struct ReplayReport {
  std::string layout;
  std::size_t steps = 0;
  std::vector<AssertionResult> assertions;
  std::size_t source_frames = 0;
  std::size_t injections = 0;
  std::uint64_t injection_digest = 0;
  std::map<std::string, PanelTrace> panels;
  SyncResult sync;
  // Wall-clock; not part of canonical().
  session::LatencyStats latency;

  std::size_t failures() const;
  bool passed() const { return failures() == 0; }

  // Canonical JSON of everything deterministic under the mock bridge.
  std::string canonical() const;
  std::string latency_line() const;
};

struct ReplayConfig {
  session::SessionOptions session;
  layout::LayoutStore layouts = layout::LayoutStore::with_builtins();
};

// Runs a script against an in-process session over a fresh mock bridge.
// Failed expectations are recorded and the run continues; infrastructure
// failures (unknown layout, navigation) throw.
ReplayReport run_script(const ReplayScript& script, const ReplayConfig& config);

}  // namespace btw::replay
