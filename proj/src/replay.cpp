#include "btw/replay.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "btw/clock.hpp"
#include "btw/decomposer.hpp"
#include "btw/error.hpp"
#include "btw/hash.hpp"
#include "json.hpp"

namespace btw::replay {

using json = nlohmann::json;

namespace {

std::string num(double v) { return json(v).dump(); }

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

// Strict object access: every key must be consumed by the caller.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError(path_, "expected an object");
  }

  std::string child(std::string_view key) const {
    return path_ + "." + std::string(key);
  }
  bool has(std::string_view key) const { return j_.contains(key); }

  const json& get(std::string_view key) {
    auto it = j_.find(key);
    if (it == j_.end()) throw ValidationError(child(key), "missing field");
    seen_.insert(std::string(key));
    return *it;
  }
  double number(std::string_view key) {
    const json& v = get(key);
    if (!v.is_number()) throw ValidationError(child(key), "expected a number");
    return v.get<double>();
  }
  std::int64_t integer(std::string_view key) {
    const json& v = get(key);
    if (!v.is_number_integer() || (v.is_number_unsigned() &&
                                   v.get<std::uint64_t>() > INT64_MAX)) {
      throw ValidationError(child(key), "expected an integer");
    }
    return v.get<std::int64_t>();
  }
  std::string string(std::string_view key) {
    const json& v = get(key);
    if (!v.is_string()) throw ValidationError(child(key), "expected a string");
    return v.get<std::string>();
  }
  bool boolean(std::string_view key) {
    const json& v = get(key);
    if (!v.is_boolean()) throw ValidationError(child(key), "expected a bool");
    return v.get<bool>();
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw ValidationError(child(it.key()), "unknown field");
      }
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

// Decodes through the wire codec so scripts get the same checks as clients.
protocol::Message decode_as(json j, std::string_view type,
                            const std::string& path) {
  j["type"] = type;
  std::string text = j.dump();
  try {
    return protocol::decode_message(
        protocol::WireFrame{protocol::FrameKind::kText, std::move(text)});
  } catch (const DecodeError& e) {
    throw ValidationError(path, e.what());
  }
}

protocol::InputEvent parse_input(json j, std::uint64_t seq,
                                 const std::string& path) {
  if (!j.is_object()) throw ValidationError(path, "expected an object");
  if (!j.contains("client_seq")) j["client_seq"] = seq;
  const auto k = j.find("kind");
  const std::string kind =
      k != j.end() && k->is_string() ? k->get<std::string>() : "";
  if (kind == "wheel") {
    if (!j.contains("delta_x")) j["delta_x"] = 0;
    if (!j.contains("delta_y")) j["delta_y"] = 0;
  } else if (kind != "key") {
    if (!j.contains("button")) {
      j["button"] = kind == "pointer-move" ? "none" : "left";
    }
    if (!j.contains("modifiers")) j["modifiers"] = 0;
  }
  return std::get<protocol::InputEvent>(decode_as(std::move(j), "input", path));
}

protocol::PanelTransformMsg parse_transform(json j, std::uint64_t seq,
                                            const std::string& path) {
  if (!j.is_object()) throw ValidationError(path, "expected an object");
  if (!j.contains("client_seq")) j["client_seq"] = seq;
  return std::get<protocol::PanelTransformMsg>(
      decode_as(std::move(j), "panel_transform", path));
}

std::optional<ExpectKind> expect_kind_from_string(std::string_view s) {
  for (ExpectKind k : {ExpectKind::kInjected, ExpectKind::kMode,
                       ExpectKind::kAnchored, ExpectKind::kSync,
                       ExpectKind::kError}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::optional<bridge::InjectedKind> injected_kind_from_string(
    std::string_view s) {
  using bridge::InjectedKind;
  for (InjectedKind k : {InjectedKind::kPointerDown, InjectedKind::kPointerMove,
                         InjectedKind::kPointerUp, InjectedKind::kWheel,
                         InjectedKind::kKey}) {
    if (bridge::injected_kind_name(k) == s) return k;
  }
  return std::nullopt;
}

Expectation parse_expect(const json& j, const std::string& path) {
  Fields f(j, path);
  Expectation e;
  const std::string kind = f.string("kind");
  auto k = expect_kind_from_string(kind);
  if (!k) throw ValidationError(f.child("kind"), "unknown kind '" + kind + "'");
  e.kind = *k;
  switch (e.kind) {
    case ExpectKind::kInjected:
      e.x = f.number("x");
      e.y = f.number("y");
      if (f.has("event")) {
        const std::string ev = f.string("event");
        e.event = injected_kind_from_string(ev);
        if (!e.event) {
          throw ValidationError(f.child("event"), "unknown event '" + ev + "'");
        }
      }
      break;
    case ExpectKind::kMode: {
      e.panel_id = f.string("panel_id");
      const std::string m = f.string("mode");
      auto mode = policy::input_mode_from_string(m);
      if (!mode) throw ValidationError(f.child("mode"), "unknown mode '" + m + "'");
      e.mode = *mode;
      break;
    }
    case ExpectKind::kAnchored:
      e.panel_id = f.string("panel_id");
      e.value = f.boolean("value");
      break;
    case ExpectKind::kSync:
      break;
    case ExpectKind::kError:
      e.code = f.string("code");
      break;
  }
  f.finish();
  return e;
}

// Receives everything the session sends to the harness client.
class RecordingSink : public session::ClientSink {
 public:
  explicit RecordingSink(SyncTrace& trace) : trace_(trace) {}

  void send(const protocol::Message& m) override {
    if (const auto* f = std::get_if<protocol::PanelFrameMsg>(&m)) {
      trace_.delivered.emplace_back(f->panel_hash, f->source_seq);
    } else if (const auto* e = std::get_if<protocol::ErrorMsg>(&m)) {
      errors.push_back(*e);
    }
  }

  std::vector<protocol::ErrorMsg> errors;

 private:
  SyncTrace& trace_;
};

std::string describe(const bridge::InjectedEvent& e) {
  return std::string(bridge::injected_kind_name(e.kind)) + " at (" +
         num(e.point.x) + ", " + num(e.point.y) + ")";
}

AssertionResult evaluate(const Expectation& e, const session::Session& s,
                         const bridge::MockBridge& bridge,
                         const SyncTrace& trace, RecordingSink& sink) {
  AssertionResult r;
  r.kind = e.kind;
  switch (e.kind) {
    case ExpectKind::kInjected: {
      auto log = bridge.injections(s.page());
      if (log.empty()) {
        r.detail = "no injection recorded";
        break;
      }
      const auto& last = log.back();
      r.passed = last.point.x == e.x && last.point.y == e.y &&
                 (!e.event || *e.event == last.kind);
      r.detail = "last injection " + describe(last);
      break;
    }
    case ExpectKind::kMode:
    case ExpectKind::kAnchored: {
      auto st = s.panel_state(e.panel_id);
      if (!st) {
        r.detail = "no panel '" + e.panel_id + "'";
        break;
      }
      if (e.kind == ExpectKind::kMode) {
        r.passed = st->mode == e.mode;
        r.detail = "mode " + std::string(policy::to_string(st->mode));
      } else {
        r.passed = st->anchored == e.value;
        r.detail = st->anchored ? "anchored" : "not anchored";
      }
      break;
    }
    case ExpectKind::kSync: {
      auto res = assert_sync(trace);
      r.passed = res.ok;
      r.detail = res.ok ? "in sync" : res.detail;
      break;
    }
    case ExpectKind::kError:
      if (sink.errors.empty()) {
        r.passed = e.code == "none";
        r.detail = "no error";
      } else {
        r.passed = sink.errors.back().code == e.code;
        r.detail = "error " + sink.errors.back().code + ": " +
                   sink.errors.back().detail;
      }
      break;
  }
  sink.errors.clear();
  return r;
}

}  // namespace

std::string_view to_string(ExpectKind k) {
  switch (k) {
    case ExpectKind::kInjected: return "injected";
    case ExpectKind::kMode: return "mode";
    case ExpectKind::kAnchored: return "anchored";
    case ExpectKind::kSync: return "sync";
    case ExpectKind::kError: return "error";
  }
  return "?";
}

ReplayScript parse_script(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("$", "malformed JSON at byte " +
                                   std::to_string(e.byte));
  }
  Fields f(j, "$");
  ReplayScript s;
  s.layout = f.string("layout");
  if (f.has("url")) s.url = f.string("url");
  if (f.has("max_fps")) {
    auto fps = f.integer("max_fps");
    if (fps <= 0 || fps > 240) {
      throw ValidationError(f.child("max_fps"), "must be in 1..240");
    }
    s.max_fps = static_cast<int>(fps);
  }
  if (f.has("duration_ms")) {
    s.duration_ms = f.integer("duration_ms");
    if (s.duration_ms < 0) {
      throw ValidationError(f.child("duration_ms"), "must be >= 0");
    }
  }
  const json& steps = f.get("steps");
  if (!steps.is_array()) throw ValidationError("$.steps", "expected an array");
  f.finish();

  std::int64_t prev = 0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const std::string path = "$.steps[" + std::to_string(i) + "]";
    Fields sf(steps[i], path);
    Step step;
    step.at_ms = sf.integer("at_ms");
    if (step.at_ms < prev) {
      throw ValidationError(sf.child("at_ms"),
                            "must not decrease (previous " +
                                std::to_string(prev) + ")");
    }
    prev = step.at_ms;
    const std::uint64_t seq = i + 1;
    int actions = 0;
    for (std::string_view key : {"input", "transform", "scroll", "expect"}) {
      if (!sf.has(key)) continue;
      ++actions;
      const json& a = sf.get(key);
      const std::string ap = sf.child(key);
      if (key == "input") {
        step.action = parse_input(a, seq, ap);
      } else if (key == "transform") {
        step.action = parse_transform(a, seq, ap);
      } else if (key == "scroll") {
        Fields af(a, ap);
        step.action = ScrollAction{af.number("x"), af.number("y")};
        af.finish();
      } else {
        step.action = parse_expect(a, ap);
      }
    }
    if (actions != 1) {
      throw ValidationError(path,
                            "needs exactly one of input, transform, scroll, "
                            "expect");
    }
    sf.finish();
    s.steps.push_back(std::move(step));
  }
  return s;
}

ReplayScript load_script(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kNotFound, "cannot read " + file.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_script(ss.str());
  } catch (const ValidationError& e) {
    throw ValidationError(file.filename().string() + ":" + e.path(),
                          e.detail());
  }
}

SyncResult assert_sync(const SyncTrace& trace) {
  std::map<std::string, std::uint32_t> last_emitted;
  for (std::size_t b = 0; b < trace.batches.size(); ++b) {
    const auto& batch = trace.batches[b];
    for (const auto& [panel, seq] : batch.panels) {
      if (seq != batch.source_seq) {
        return {false, "batch " + std::to_string(b) + " mixes seq " +
                           std::to_string(seq) + " (" + panel +
                           ") into source frame " +
                           std::to_string(batch.source_seq)};
      }
      auto [it, fresh] = last_emitted.try_emplace(panel, seq);
      if (!fresh) {
        if (seq < it->second) {
          return {false, "panel " + panel + " regressed from seq " +
                             std::to_string(it->second) + " to " +
                             std::to_string(seq)};
        }
        it->second = seq;
      }
    }
  }
  std::map<std::uint32_t, std::uint32_t> last_delivered;
  for (std::size_t i = 0; i < trace.delivered.size(); ++i) {
    const auto [hash, seq] = trace.delivered[i];
    auto [it, fresh] = last_delivered.try_emplace(hash, seq);
    if (!fresh) {
      if (seq < it->second) {
        return {false, "delivery " + std::to_string(i) + " regressed panel " +
                           hex64(hash) + " from seq " +
                           std::to_string(it->second) + " to " +
                           std::to_string(seq)};
      }
      it->second = seq;
    }
  }
  return {true, ""};
}

std::size_t ReplayReport::failures() const {
  std::size_t n = sync.ok ? 0 : 1;
  for (const auto& a : assertions) n += a.passed ? 0 : 1;
  return n;
}

std::string ReplayReport::canonical() const {
  json assertions_j = json::array();
  for (const auto& a : assertions) {
    assertions_j.push_back({{"step", a.step},
                            {"at_ms", a.at_ms},
                            {"kind", to_string(a.kind)},
                            {"passed", a.passed},
                            {"detail", a.detail}});
  }
  json panels_j = json::object();
  for (const auto& [id, p] : panels) {
    panels_j[id] = {{"frames", p.frames},
                    {"off_viewport", p.off_viewport},
                    {"first_seq", p.first_seq},
                    {"last_seq", p.last_seq},
                    {"seq_digest", hex64(p.seq_digest)}};
  }
  json j{{"layout", layout},
         {"steps", steps},
         {"assertions", assertions_j},
         {"failures", failures()},
         {"source_frames", source_frames},
         {"injections", injections},
         {"injection_digest", hex64(injection_digest)},
         {"panels", panels_j},
         {"sync", {{"ok", sync.ok}, {"detail", sync.detail}}}};
  return j.dump();
}

std::string ReplayReport::latency_line() const {
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "latency_ms count=%zu min=%.3f median=%.3f max=%.3f",
                latency.count, latency.min_ms, latency.median_ms,
                latency.max_ms);
  return buf;
}

ReplayReport run_script(const ReplayScript& script,
                        const ReplayConfig& config) {
  auto doc = config.layouts.get(script.layout);
  if (!doc) {
    throw Error(ErrorCode::kNotFound, "no layout '" + script.layout + "'");
  }

  VirtualClock clock;
  bridge::MockBridge bridge(clock);
  const bridge::PageHandle page = bridge.navigate(script.url);
  session::Session s(bridge, page,
                     decomposer::resolve_layout(*doc, bridge, page),
                     config.session);

  ReplayReport report;
  report.layout = script.layout;
  report.steps = script.steps.size();

  SyncTrace trace;
  std::map<std::string, Fnv1a64> seq_hashes;
  s.set_batch_observer([&](std::uint32_t seq,
                           std::span<const decomposer::PanelFrame> frames) {
    ++report.source_frames;
    SyncBatch batch{seq, {}};
    for (const auto& f : frames) {
      batch.panels.emplace_back(f.panel_id, f.source_seq);
      auto& pt = report.panels[f.panel_id];
      if (pt.frames == 0) pt.first_seq = f.source_seq;
      ++pt.frames;
      pt.last_seq = f.source_seq;
      if (f.off_viewport) ++pt.off_viewport;
      seq_hashes[f.panel_id].update_u64(f.source_seq);
    }
    trace.batches.push_back(std::move(batch));
  });

  auto sink = std::make_shared<RecordingSink>(trace);
  const auto client = s.attach(sink);
  s.on_message(client, protocol::Hello{"replay", protocol::kProtocolVersion});
  s.start_capture(script.max_fps);

  auto advance_to = [&](std::int64_t t) {
    for (;;) {
      while (s.pump()) {
      }
      if (clock.now_ms() >= t) break;
      clock.advance(1);
    }
  };

  for (std::size_t i = 0; i < script.steps.size(); ++i) {
    const Step& step = script.steps[i];
    advance_to(step.at_ms);
    std::visit(
        [&](const auto& a) {
          using T = std::decay_t<decltype(a)>;
          if constexpr (std::is_same_v<T, ScrollAction>) {
            bridge.scroll_to(page, a.x, a.y);
          } else if constexpr (std::is_same_v<T, Expectation>) {
            AssertionResult r = evaluate(a, s, bridge, trace, *sink);
            r.step = i;
            r.at_ms = step.at_ms;
            report.assertions.push_back(std::move(r));
          } else {
            s.on_message(client, a);
          }
        },
        step.action);
  }
  advance_to(std::max(script.duration_ms,
                      script.steps.empty() ? 0 : script.steps.back().at_ms));
  s.stop_capture();

  for (auto& [id, h] : seq_hashes) report.panels[id].seq_digest = h.digest();

  Fnv1a64 log_hash;
  const auto log = bridge.injections(page);
  for (const auto& e : log) {
    log_hash.update(describe(e) + " " +
                    std::string(bridge::pointer_button_name(e.button)) + " " +
                    std::to_string(e.modifiers) + " " + num(e.delta_x) + " " +
                    num(e.delta_y) + " " + e.key.key + " " + e.key.code + " " +
                    e.key.text + "\n");
  }
  report.injections = log.size();
  report.injection_digest = log_hash.digest();
  report.sync = assert_sync(trace);
  report.latency = s.latency();
  return report;
}

}  // namespace btw::replay
