#include "btw/mock_bridge.hpp"

#include <cstdlib>
#include <cmath>
#include <string>

#include "btw/error.hpp"

namespace btw::bridge {

namespace {

bool inside(const core::RegionRect& r, double x, double y) {
  return x >= r.x && x < r.x + r.w && y >= r.y && y < r.y + r.h;
}

double query_number(std::string_view query, std::string_view key,
                    double fallback) {
  std::size_t pos = 0;
  while (pos <= query.size()) {
    std::size_t end = query.find('&', pos);
    if (end == std::string_view::npos) end = query.size();
    std::string_view pair = query.substr(pos, end - pos);
    std::size_t eq = pair.find('=');
    if (eq != std::string_view::npos && pair.substr(0, eq) == key) {
      std::string value(pair.substr(eq + 1));
      char* tail = nullptr;
      double d = std::strtod(value.c_str(), &tail);
      if (tail == value.c_str() || *tail != '\0' || !std::isfinite(d) ||
          d <= 0) {
        throw Error(ErrorCode::kNavigation,
                    "bad mock page parameter " + std::string(key));
      }
      return d;
    }
    pos = end + 1;
  }
  return fallback;
}

}  // namespace

const MockPageModel& MockPageModel::grid() {
  static const MockPageModel model = [] {
    MockPageModel m;
    m.animated = {40, 140, 1280, 720};
    m.counter = {1800, 20, 160, 80};
    m.elements = {
        {"#header", {0, 0, 2000, 120}},
        {"#event-counter", m.counter},
        {"#footer", {0, 2900, 2000, 100}},
        {"#hidden", {100, 100, 0, 0}},
        // YouTube watch page
        {"#movie_player", m.animated},
        {".ytp-chrome-bottom", {52, 812, 1256, 48}},
        {"#comments", {40, 900, 1280, 1600}},
        {"#secondary", {1360, 140, 600, 2400}},
        // Google Maps
        {"#scene", {420, 120, 1580, 1300}},
        {"#QA0Szd", {0, 120, 420, 1300}},
        {"#omnibox-container", {16, 136, 392, 48}},
        // Google Slides editor
        {"#docs-toolbar-wrapper", {0, 1440, 2000, 40}},
        {".punch-filmstrip-scroll", {0, 1480, 260, 1000}},
        {"#workspace-container", {280, 1480, 1700, 1000}},
    };
    return m;
  }();
  return model;
}

std::array<std::uint8_t, 4> MockPageModel::pixel(
    double doc_x, double doc_y, std::uint32_t seq,
    std::size_t injected_count) const {
  if (!(doc_x >= 0 && doc_y >= 0 && doc_x < document_w && doc_y < document_h)) {
    return {32, 32, 32, 255};
  }
  const auto ix = static_cast<std::uint32_t>(std::floor(doc_x));
  const auto iy = static_cast<std::uint32_t>(std::floor(doc_y));
  std::uint8_t r = ix & 255u;
  std::uint8_t g = iy & 255u;
  std::uint8_t b = ((ix >> 8) & 15u) | (((iy >> 8) & 15u) << 4);
  if (inside(animated, doc_x, doc_y)) r ^= static_cast<std::uint8_t>(seq);
  if (inside(counter, doc_x, doc_y)) {
    g ^= static_cast<std::uint8_t>(injected_count * 37u);
  }
  return {r, g, b, 255};
}

Bitmap MockPageModel::render(const core::ViewportMetrics& m,
                             std::uint32_t seq,
                             std::size_t injected_count) const {
  Bitmap out(m.frame_width(), m.frame_height());
  const double s = m.device_scale;
  const auto seq_mask = static_cast<std::uint8_t>(seq);
  const auto count_mask = static_cast<std::uint8_t>(injected_count * 37u);

  // Same sampling as pixel() at each device pixel centre, with the per-column
  // work hoisted out of the row loop.
  struct Column {
    std::uint8_t r = 0;
    std::uint8_t b = 0;
    bool in_doc = false;
    bool in_animated = false;
    bool in_counter = false;
  };
  std::vector<Column> cols(out.width);
  for (int i = 0; i < out.width; ++i) {
    const double x = m.scroll_x + (i + 0.5) / s;
    Column& c = cols[i];
    c.in_doc = x >= 0 && x < document_w;
    if (!c.in_doc) continue;
    const auto ix = static_cast<std::uint32_t>(std::floor(x));
    c.r = ix & 255u;
    c.b = (ix >> 8) & 15u;
    c.in_animated = x >= animated.x && x < animated.x + animated.w;
    c.in_counter = x >= counter.x && x < counter.x + counter.w;
  }
  for (int j = 0; j < out.height; ++j) {
    const double y = m.scroll_y + (j + 0.5) / s;
    std::uint8_t* row = out.pixel(0, j);
    if (!(y >= 0 && y < document_h)) {
      for (int i = 0; i < out.width; ++i) {
        row[4 * i + 0] = row[4 * i + 1] = row[4 * i + 2] = 32;
        row[4 * i + 3] = 255;
      }
      continue;
    }
    const auto iy = static_cast<std::uint32_t>(std::floor(y));
    const std::uint8_t g = iy & 255u;
    const std::uint8_t b_hi = ((iy >> 8) & 15u) << 4;
    const bool row_animated = y >= animated.y && y < animated.y + animated.h;
    const bool row_counter = y >= counter.y && y < counter.y + counter.h;
    for (int i = 0; i < out.width; ++i) {
      const Column& c = cols[i];
      std::uint8_t* px = row + 4 * i;
      if (!c.in_doc) {
        px[0] = px[1] = px[2] = 32;
      } else {
        px[0] = c.r ^ ((row_animated && c.in_animated) ? seq_mask : 0);
        px[1] = g ^ ((row_counter && c.in_counter) ? count_mask : 0);
        px[2] = c.b | b_hi;
      }
      px[3] = 255;
    }
  }
  return out;
}

std::string_view injected_kind_name(InjectedKind k) {
  switch (k) {
    case InjectedKind::kPointerDown: return "pointer-down";
    case InjectedKind::kPointerMove: return "pointer-move";
    case InjectedKind::kPointerUp: return "pointer-up";
    case InjectedKind::kWheel: return "wheel";
    case InjectedKind::kKey: return "key";
  }
  return "?";
}

class MockFrameStream : public FrameStream {
 public:
  MockFrameStream(MockBridge& bridge, PageHandle handle, int max_fps)
      : bridge_(bridge), handle_(std::move(handle)), max_fps_(max_fps) {}

  ~MockFrameStream() override { stop(); }

  std::optional<SourceFrame> poll() override {
    std::lock_guard lock(bridge_.mu_);
    if (stopped_) return std::nullopt;
    auto it = bridge_.pages_.find(handle_.id);
    if (it == bridge_.pages_.end()) return std::nullopt;
    MockBridge::Page& page = it->second;

    const std::int64_t now = bridge_.clock_.now_ms();
    if (!started_) {
      started_ = true;
      start_ms_ = now;
      next_due_ = now;
    }
    if (now < next_due_) return std::nullopt;
    // Frame k is due at start + ceil(k * 1000 / fps). Frames missed while
    // nobody polled are dropped, not replayed.
    const std::int64_t next = (now - start_ms_) * max_fps_ / 1000 + 1;
    next_due_ = start_ms_ + (next * 1000 + max_fps_ - 1) / max_fps_;

    SourceFrame f;
    f.seq = ++page.seq;
    f.metrics = page.metrics;
    f.timestamp_ms = now;
    f.bitmap = bridge_.model_.render(page.metrics, f.seq,
                                     page.injections.size());
    return f;
  }

  void stop() override {
    std::lock_guard lock(bridge_.mu_);
    if (stopped_) return;
    stopped_ = true;
    auto it = bridge_.pages_.find(handle_.id);
    if (it != bridge_.pages_.end()) it->second.capturing = false;
  }

 private:
  MockBridge& bridge_;
  PageHandle handle_;
  std::int64_t max_fps_;
  bool started_ = false;
  bool stopped_ = false;
  std::int64_t start_ms_ = 0;
  std::int64_t next_due_ = 0;
};

MockBridge::MockBridge(const Clock& clock)
    : clock_(clock), model_(MockPageModel::grid()) {}

MockBridge::~MockBridge() = default;

void MockBridge::load_locked(Page& page, std::string_view url) {
  if (!is_well_formed_url(url)) {
    throw Error(ErrorCode::kNavigation,
                "malformed url '" + std::string(url) + "'");
  }
  constexpr std::string_view kPrefix = "mock://grid";
  if (url.substr(0, kPrefix.size()) != kPrefix ||
      (url.size() > kPrefix.size() && url[kPrefix.size()] != '?' &&
       url[kPrefix.size()] != '/')) {
    throw Error(ErrorCode::kNavigation,
                "unreachable: mock bridge only serves mock://grid, got '" +
                    std::string(url) + "'");
  }
  std::string_view query;
  if (auto q = url.find('?'); q != std::string_view::npos) {
    query = url.substr(q + 1);
  }
  core::ViewportMetrics m;
  m.viewport_w = query_number(query, "vw", 1280);
  m.viewport_h = query_number(query, "vh", 800);
  m.device_scale = query_number(query, "scale", 1);
  m.document_w = model_.document_w;
  m.document_h = model_.document_h;
  page.url = std::string(url);
  page.metrics = core::clamp_scroll(m, 0, 0);
}

PageHandle MockBridge::navigate(std::string_view url) {
  std::lock_guard lock(mu_);
  Page page;
  load_locked(page, url);
  std::string id = "mock-" + std::to_string(next_id_++);
  PageHandle h{id, page.url};
  pages_.emplace(id, std::move(page));
  return h;
}

PageHandle MockBridge::navigate(const PageHandle& h, std::string_view url) {
  std::lock_guard lock(mu_);
  Page& page = page_locked(h);
  Page fresh = page;
  load_locked(fresh, url);
  page.url = fresh.url;
  page.metrics = fresh.metrics;
  return {h.id, page.url};
}

void MockBridge::close(const PageHandle& h) {
  std::lock_guard lock(mu_);
  pages_.erase(h.id);
}

MockBridge::Page& MockBridge::page_locked(const PageHandle& h) {
  auto it = pages_.find(h.id);
  if (it == pages_.end()) {
    throw Error(ErrorCode::kInvalidInput, "unknown page handle " + h.id);
  }
  return it->second;
}

const MockBridge::Page& MockBridge::page_locked(const PageHandle& h) const {
  auto it = pages_.find(h.id);
  if (it == pages_.end()) {
    throw Error(ErrorCode::kInvalidInput, "unknown page handle " + h.id);
  }
  return it->second;
}

std::unique_ptr<FrameStream> MockBridge::start_capture(const PageHandle& h,
                                                       int max_fps) {
  if (max_fps <= 0) {
    throw Error(ErrorCode::kInvalidInput, "max_fps must be positive");
  }
  std::lock_guard lock(mu_);
  Page& page = page_locked(h);
  if (page.capturing) {
    throw Error(ErrorCode::kConflict, "capture already active on " + h.id);
  }
  page.capturing = true;
  return std::make_unique<MockFrameStream>(*this, h, max_fps);
}

core::RegionRect MockBridge::resolve_selector(const PageHandle& h,
                                              std::string_view selector) {
  std::lock_guard lock(mu_);
  page_locked(h);
  ++resolve_calls_;
  for (const auto& e : model_.elements) {
    if (e.selector == selector && e.rect.valid()) return e.rect;
  }
  throw Error(ErrorCode::kNotFound,
              "no visible element matches '" + std::string(selector) + "'");
}

void MockBridge::check_in_viewport(const Page& page,
                                   core::ViewportPoint vp) const {
  const auto& m = page.metrics;
  if (!(vp.x >= 0 && vp.x <= m.viewport_w && vp.y >= 0 &&
        vp.y <= m.viewport_h)) {
    throw Error(ErrorCode::kOutOfViewport,
                "point (" + std::to_string(vp.x) + ", " +
                    std::to_string(vp.y) + ") outside the viewport");
  }
}

void MockBridge::record_locked(Page& page, InjectedEvent e) {
  e.order = page.injections.size();
  page.ops.push_back({MockOp::Kind::kInject, 0, 0, e.order});
  page.injections.push_back(std::move(e));
}

void MockBridge::inject_pointer(const PageHandle& h, PointerKind kind,
                                core::ViewportPoint vp, PointerButton button,
                                std::uint32_t mods) {
  std::lock_guard lock(mu_);
  Page& page = page_locked(h);
  check_in_viewport(page, vp);
  InjectedEvent e;
  switch (kind) {
    case PointerKind::kDown: e.kind = InjectedKind::kPointerDown; break;
    case PointerKind::kMove: e.kind = InjectedKind::kPointerMove; break;
    case PointerKind::kUp: e.kind = InjectedKind::kPointerUp; break;
  }
  e.point = vp;
  e.button = button;
  e.modifiers = mods;
  record_locked(page, std::move(e));
}

void MockBridge::inject_key(const PageHandle& h, const KeyDescriptor& key) {
  std::lock_guard lock(mu_);
  Page& page = page_locked(h);
  InjectedEvent e;
  e.kind = InjectedKind::kKey;
  e.key = key;
  e.modifiers = key.modifiers;
  record_locked(page, std::move(e));
}

void MockBridge::inject_wheel(const PageHandle& h, core::ViewportPoint vp,
                              double delta_x, double delta_y) {
  std::lock_guard lock(mu_);
  Page& page = page_locked(h);
  check_in_viewport(page, vp);
  InjectedEvent e;
  e.kind = InjectedKind::kWheel;
  e.point = vp;
  e.delta_x = delta_x;
  e.delta_y = delta_y;
  record_locked(page, std::move(e));
}

core::ViewportMetrics MockBridge::scroll_to(const PageHandle& h,
                                            double scroll_x, double scroll_y) {
  if (!std::isfinite(scroll_x) || !std::isfinite(scroll_y)) {
    throw Error(ErrorCode::kInvalidInput, "non-finite scroll offset");
  }
  std::lock_guard lock(mu_);
  Page& page = page_locked(h);
  page.metrics = core::clamp_scroll(page.metrics, scroll_x, scroll_y);
  page.ops.push_back({MockOp::Kind::kScroll, page.metrics.scroll_x,
                      page.metrics.scroll_y, 0});
  return page.metrics;
}

core::ViewportMetrics MockBridge::query_metrics(const PageHandle& h) {
  std::lock_guard lock(mu_);
  return page_locked(h).metrics;
}

std::vector<InjectedEvent> MockBridge::injections(const PageHandle& h) const {
  std::lock_guard lock(mu_);
  return page_locked(h).injections;
}

std::vector<MockOp> MockBridge::operations(const PageHandle& h) const {
  std::lock_guard lock(mu_);
  return page_locked(h).ops;
}

std::size_t MockBridge::resolve_calls() const {
  std::lock_guard lock(mu_);
  return resolve_calls_;
}

}  // namespace btw::bridge
