#include "btw/devtools_bridge.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/core/detail/base64.hpp>
#include <boost/beast/websocket.hpp>

#include <deque>
#include <functional>
#include <future>
#include <optional>
#include <thread>

#include "btw/error.hpp"
#include "btw/png_codec.hpp"
#include "httplib.h"

namespace btw::bridge {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using json = nlohmann::json;

namespace {

struct Endpoint {
  std::string scheme;
  std::string host;
  std::string port;
  std::string target;  // path and query, at least "/"
};

Endpoint parse_endpoint(std::string_view url) {
  Endpoint e;
  auto sep = url.find("://");
  if (sep == std::string_view::npos) {
    throw Error(ErrorCode::kInvalidInput,
                "devtools endpoint needs a scheme: " + std::string(url));
  }
  e.scheme = std::string(url.substr(0, sep));
  if (e.scheme != "ws" && e.scheme != "http") {
    throw Error(ErrorCode::kInvalidInput,
                "devtools endpoint must be ws:// or http://, got " +
                    std::string(url));
  }
  std::string_view rest = url.substr(sep + 3);
  auto slash = rest.find('/');
  std::string_view authority = rest.substr(0, slash);
  e.target = slash == std::string_view::npos ? "/"
                                             : std::string(rest.substr(slash));
  auto colon = authority.rfind(':');
  if (colon == std::string_view::npos) {
    e.host = std::string(authority);
    e.port = "80";
  } else {
    e.host = std::string(authority.substr(0, colon));
    e.port = std::string(authority.substr(colon + 1));
  }
  if (e.host.empty() || e.port.empty()) {
    throw Error(ErrorCode::kInvalidInput,
                "malformed devtools endpoint " + std::string(url));
  }
  return e;
}

std::string percent_encode(std::string_view s) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(hex[c >> 4]);
      out.push_back(hex[c & 15]);
    }
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view s) {
  // The decoder stops at padding.
  while (!s.empty() && s.back() == '=') s.remove_suffix(1);
  std::vector<std::uint8_t> out(beast::detail::base64::decoded_size(s.size()));
  auto [written, read] =
      beast::detail::base64::decode(out.data(), s.data(), s.size());
  if (read != s.size()) {
    throw Error(ErrorCode::kDecode, "screencast frame is not valid base64");
  }
  out.resize(written);
  return out;
}

}  // namespace

// One remote-debugging WebSocket. Commands are matched to responses by id;
// events go to a single handler on the connection's io thread, which must not
// block on call().
class CdpConnection {
 public:
  using EventHandler = std::function<void(const std::string&, const json&)>;

  CdpConnection(const std::string& ws_url, std::chrono::milliseconds timeout)
      : timeout_(timeout), ws_(asio::make_strand(ioc_)) {
    Endpoint e = parse_endpoint(ws_url);
    try {
      tcp::resolver resolver(ioc_);
      auto results = resolver.resolve(e.host, e.port);
      beast::get_lowest_layer(ws_).expires_after(timeout);
      beast::get_lowest_layer(ws_).connect(results);
      beast::get_lowest_layer(ws_).expires_never();
      ws_.read_message_max(64 << 20);
      ws_.handshake(e.host + ":" + e.port, e.target);
    } catch (const boost::system::system_error& err) {
      throw Error(ErrorCode::kTransport,
                  "cannot reach devtools at " + ws_url + ": " +
                      err.code().message());
    }
    read();
    thread_ = std::thread([this] { ioc_.run(); });
  }

  // Closing the socket fails the pending read, which lets the io thread
  // run out of work and exit.
  ~CdpConnection() {
    asio::post(ws_.get_executor(), [this] {
      beast::error_code ec;
      beast::get_lowest_layer(ws_).socket().close(ec);
    });
    if (thread_.joinable()) thread_.join();
  }

  void set_event_handler(EventHandler h) {
    std::lock_guard lock(mu_);
    handler_ = std::move(h);
  }

  // Returns the command's "result"; throws Error{kTransport} on protocol
  // errors, timeouts or a dropped connection.
  json call(const std::string& method, json params = json::object()) {
    std::future<json> reply;
    std::int64_t id;
    {
      std::lock_guard lock(mu_);
      if (closed_) throw Error(ErrorCode::kTransport, "devtools connection closed");
      id = next_id_++;
      reply = pending_[id].get_future();
    }
    enqueue(json{{"id", id}, {"method", method}, {"params", std::move(params)}});
    if (reply.wait_for(timeout_) != std::future_status::ready) {
      std::lock_guard lock(mu_);
      pending_.erase(id);
      throw Error(ErrorCode::kTransport, method + " timed out");
    }
    json msg = reply.get();
    if (msg.contains("error")) {
      throw Error(ErrorCode::kTransport,
                  method + ": " + msg["error"].value("message", "error"));
    }
    return msg.value("result", json::object());
  }

  // Fire and forget; the response is discarded.
  void notify(const std::string& method, json params) {
    std::int64_t id;
    {
      std::lock_guard lock(mu_);
      if (closed_) return;
      id = next_id_++;
    }
    enqueue(json{{"id", id}, {"method", method}, {"params", std::move(params)}});
  }

 private:
  void enqueue(const json& msg) {
    asio::post(ws_.get_executor(), [this, text = msg.dump()]() mutable {
      outgoing_.push_back(std::move(text));
      if (outgoing_.size() == 1) write();
    });
  }

  void write() {
    ws_.text(true);
    ws_.async_write(asio::buffer(outgoing_.front()),
                    [this](beast::error_code ec, std::size_t) {
                      if (ec) {
                        fail();
                        return;
                      }
                      outgoing_.pop_front();
                      if (!outgoing_.empty()) write();
                    });
  }

  void read() {
    ws_.async_read(in_, [this](beast::error_code ec, std::size_t) {
      if (ec) {
        fail();
        return;
      }
      json msg = json::parse(beast::buffers_to_string(in_.data()), nullptr,
                             false);
      in_.consume(in_.size());
      if (msg.is_object()) dispatch(msg);
      read();
    });
  }

  void dispatch(json& msg) {
    if (msg.contains("id") && msg["id"].is_number_integer()) {
      std::promise<json> p;
      {
        std::lock_guard lock(mu_);
        auto it = pending_.find(msg["id"].get<std::int64_t>());
        if (it == pending_.end()) return;
        p = std::move(it->second);
        pending_.erase(it);
      }
      p.set_value(std::move(msg));
      return;
    }
    if (msg.contains("method") && msg["method"].is_string()) {
      EventHandler h;
      {
        std::lock_guard lock(mu_);
        h = handler_;
      }
      if (h) {
        h(msg["method"].get<std::string>(),
          msg.value("params", json::object()));
      }
    }
  }

  void fail() {
    std::map<std::int64_t, std::promise<json>> pending;
    {
      std::lock_guard lock(mu_);
      closed_ = true;
      pending.swap(pending_);
    }
    for (auto& [id, p] : pending) {
      p.set_exception(std::make_exception_ptr(
          Error(ErrorCode::kTransport, "devtools connection closed")));
    }
  }

  std::chrono::milliseconds timeout_;
  asio::io_context ioc_;
  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer in_;
  std::deque<std::string> outgoing_;  // io thread only
  std::thread thread_;

  std::mutex mu_;
  std::map<std::int64_t, std::promise<json>> pending_;
  std::int64_t next_id_ = 1;
  bool closed_ = false;
  EventHandler handler_;
};

struct DevtoolsBridge::Page {
  std::string id;
  bool own_target = false;  // opened through /json/new, closed on close()

  std::mutex mu;  // url, metrics, seq, capturing, latest
  std::string url;
  core::ViewportMetrics metrics;
  std::uint32_t seq = 0;
  bool capturing = false;
  std::optional<SourceFrame> latest;

  // Declared last so its io thread (which touches the fields above from the
  // event handler) is joined before they are destroyed.
  std::unique_ptr<CdpConnection> conn;
};

class DevtoolsFrameStream : public FrameStream {
 public:
  DevtoolsFrameStream(std::shared_ptr<DevtoolsBridge::Page> page,
                      const Clock& clock, int max_fps)
      : page_(std::move(page)),
        clock_(clock),
        interval_ms_(1000.0 / std::max(1, max_fps)) {}

  ~DevtoolsFrameStream() override { stop(); }

  std::optional<SourceFrame> poll() override {
    const double now = static_cast<double>(clock_.now_ms());
    if (stopped_ || now < next_due_) return std::nullopt;
    std::optional<SourceFrame> f;
    {
      std::lock_guard lock(page_->mu);
      f = std::move(page_->latest);
      page_->latest.reset();
    }
    if (f) next_due_ = now + interval_ms_;
    return f;
  }

  void stop() override {
    if (stopped_) return;
    stopped_ = true;
    try {
      page_->conn->call("Page.stopScreencast");
    } catch (const Error&) {
      // The page may already be gone.
    }
    std::lock_guard lock(page_->mu);
    page_->capturing = false;
    page_->latest.reset();
  }

 private:
  std::shared_ptr<DevtoolsBridge::Page> page_;
  const Clock& clock_;
  double interval_ms_;
  double next_due_ = 0;
  bool stopped_ = false;
};

DevtoolsBridge::DevtoolsBridge(DevtoolsOptions options, const Clock& clock)
    : options_(std::move(options)), clock_(clock) {
  if (options_.endpoint.empty()) {
    throw Error(ErrorCode::kInvalidInput, "devtools endpoint is required");
  }
  parse_endpoint(options_.endpoint);
}

DevtoolsBridge::~DevtoolsBridge() = default;

std::shared_ptr<DevtoolsBridge::Page> DevtoolsBridge::page(
    const PageHandle& h) const {
  std::lock_guard lock(mu_);
  auto it = pages_.find(h.id);
  if (it == pages_.end()) {
    throw Error(ErrorCode::kNotFound, "unknown page handle " + h.id);
  }
  return it->second;
}

json DevtoolsBridge::evaluate(Page& p, const std::string& expression) {
  json r = p.conn->call("Runtime.evaluate", {{"expression", expression},
                                             {"returnByValue", true}});
  if (r.contains("exceptionDetails")) {
    const auto& d = r["exceptionDetails"];
    std::string text = d.value("text", "exception");
    if (d.contains("exception") && d["exception"].contains("description")) {
      text = d["exception"]["description"].get<std::string>();
    }
    throw Error(ErrorCode::kInvalidInput, "page script failed: " + text);
  }
  return r.contains("result") ? r["result"].value("value", json())
                              : json();
}

core::ViewportMetrics DevtoolsBridge::fetch_metrics(Page& p) {
  json v = evaluate(
      p,
      "[scrollX, scrollY, innerWidth, innerHeight, devicePixelRatio, "
      "Math.max(document.documentElement.scrollWidth, innerWidth), "
      "Math.max(document.documentElement.scrollHeight, innerHeight)]");
  if (!v.is_array() || v.size() != 7) {
    throw Error(ErrorCode::kTransport, "unexpected metrics reply");
  }
  core::ViewportMetrics m;
  m.scroll_x = v[0].get<double>();
  m.scroll_y = v[1].get<double>();
  m.viewport_w = v[2].get<double>();
  m.viewport_h = v[3].get<double>();
  m.device_scale = v[4].get<double>();
  m.document_w = v[5].get<double>();
  m.document_h = v[6].get<double>();
  std::lock_guard lock(p.mu);
  p.metrics = m;
  return m;
}

void DevtoolsBridge::load(Page& p, std::string_view url) {
  json r = p.conn->call("Page.navigate", {{"url", std::string(url)}});
  if (r.contains("errorText") && !r["errorText"].get<std::string>().empty()) {
    throw Error(ErrorCode::kNavigation, "cannot load " + std::string(url) +
                                            ": " +
                                            r["errorText"].get<std::string>());
  }
  const auto deadline = std::chrono::steady_clock::now() + options_.load_timeout;
  while (std::chrono::steady_clock::now() < deadline) {
    if (evaluate(p, "document.readyState") == "complete") break;
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  {
    std::lock_guard lock(p.mu);
    p.url = std::string(url);
  }
  fetch_metrics(p);
}

PageHandle DevtoolsBridge::navigate(std::string_view url) {
  if (!is_well_formed_url(url)) {
    throw Error(ErrorCode::kNavigation, "malformed URL " + std::string(url));
  }
  Endpoint e = parse_endpoint(options_.endpoint);
  auto p = std::make_shared<Page>();
  std::string ws_url = options_.endpoint;
  if (e.scheme == "http") {
    httplib::Client http(e.host, std::stoi(e.port));
    http.set_connection_timeout(options_.call_timeout);
    http.set_read_timeout(options_.call_timeout);
    const std::string path = "/json/new?" + percent_encode("about:blank");
    auto res = http.Put(path);
    if (!res || res->status != 200) res = http.Get(path);
    if (!res || res->status != 200) {
      throw Error(ErrorCode::kTransport,
                  "cannot open a tab through " + options_.endpoint);
    }
    json target = json::parse(res->body, nullptr, false);
    if (!target.is_object() || !target.contains("webSocketDebuggerUrl")) {
      throw Error(ErrorCode::kTransport, "unexpected /json/new reply");
    }
    ws_url = target["webSocketDebuggerUrl"].get<std::string>();
    p->id = target.value("id", ws_url);
    p->own_target = true;
  } else {
    p->id = e.target;
  }
  {
    std::lock_guard lock(mu_);
    if (pages_.count(p->id)) {
      throw Error(ErrorCode::kConflict, "page target already open: " + p->id);
    }
  }
  p->conn = std::make_unique<CdpConnection>(ws_url, options_.call_timeout);

  Page* page = p.get();
  p->conn->set_event_handler([page](const std::string& method,
                                    const json& params) {
    if (method != "Page.screencastFrame") return;
    page->conn->notify("Page.screencastFrameAck",
                       {{"sessionId", params.value("sessionId", 0)}});
    try {
      Bitmap bmp = decode_png(base64_decode(params.value("data", "")));
      const json meta = params.value("metadata", json::object());
      std::lock_guard lock(page->mu);
      if (!page->capturing) return;
      core::ViewportMetrics m = page->metrics;
      m.scroll_x = meta.value("scrollOffsetX", m.scroll_x);
      m.scroll_y = meta.value("scrollOffsetY", m.scroll_y);
      m.viewport_w = meta.value("deviceWidth", m.viewport_w);
      m.viewport_h = meta.value("deviceHeight", m.viewport_h);
      if (m.viewport_w > 0) m.device_scale = bmp.width / m.viewport_w;
      SourceFrame f;
      f.seq = ++page->seq;
      f.bitmap = std::move(bmp);
      f.metrics = m;
      f.timestamp_ms = static_cast<std::int64_t>(
          meta.value("timestamp", 0.0) * 1000.0);
      page->latest = std::move(f);
    } catch (const Error&) {
      // A corrupt frame is skipped; the next one replaces it.
    } catch (const json::exception&) {
    }
  });
  p->conn->call("Page.enable");
  load(*p, url);

  std::lock_guard lock(mu_);
  pages_[p->id] = p;
  return {p->id, std::string(url)};
}

PageHandle DevtoolsBridge::navigate(const PageHandle& h, std::string_view url) {
  if (!is_well_formed_url(url)) {
    throw Error(ErrorCode::kNavigation, "malformed URL " + std::string(url));
  }
  auto p = page(h);
  load(*p, url);
  return {h.id, std::string(url)};
}

void DevtoolsBridge::close(const PageHandle& h) {
  std::shared_ptr<Page> p;
  {
    std::lock_guard lock(mu_);
    auto it = pages_.find(h.id);
    if (it == pages_.end()) return;
    p = it->second;
    pages_.erase(it);
  }
  if (p->own_target) {
    try {
      p->conn->call("Page.close");
    } catch (const Error&) {
      // Already closed by the browser.
    }
  }
}

std::unique_ptr<FrameStream> DevtoolsBridge::start_capture(const PageHandle& h,
                                                           int max_fps) {
  auto p = page(h);
  {
    std::lock_guard lock(p->mu);
    if (p->capturing) {
      throw Error(ErrorCode::kConflict, "capture already active on " + h.id);
    }
    p->capturing = true;
  }
  try {
    p->conn->call("Page.startScreencast",
                  {{"format", "png"}, {"everyNthFrame", 1}});
  } catch (...) {
    std::lock_guard lock(p->mu);
    p->capturing = false;
    throw;
  }
  return std::make_unique<DevtoolsFrameStream>(p, clock_, max_fps);
}

core::RegionRect DevtoolsBridge::resolve_selector(const PageHandle& h,
                                                  std::string_view selector) {
  auto p = page(h);
  const std::string quoted = json(std::string(selector)).dump();
  json v = evaluate(
      *p, "(() => { const e = document.querySelector(" + quoted +
              "); if (!e) return null; const r = e.getBoundingClientRect(); "
              "return [r.left + scrollX, r.top + scrollY, r.width, "
              "r.height]; })()");
  if (!v.is_array() || v.size() != 4) {
    throw Error(ErrorCode::kNotFound,
                "selector " + std::string(selector) + " matched nothing");
  }
  core::RegionRect r{v[0].get<double>(), v[1].get<double>(),
                     v[2].get<double>(), v[3].get<double>()};
  if (!(r.w > 0 && r.h > 0)) {
    throw Error(ErrorCode::kNotFound,
                "selector " + std::string(selector) + " has zero area");
  }
  return r;
}

void DevtoolsBridge::check_in_viewport(Page& p, core::ViewportPoint vp) {
  std::lock_guard lock(p.mu);
  if (!(vp.x >= 0 && vp.x <= p.metrics.viewport_w && vp.y >= 0 &&
        vp.y <= p.metrics.viewport_h)) {
    throw Error(ErrorCode::kOutOfViewport, "point outside the viewport");
  }
}

void DevtoolsBridge::inject_pointer(const PageHandle& h, PointerKind kind,
                                    core::ViewportPoint vp,
                                    PointerButton button,
                                    std::uint32_t modifiers) {
  auto p = page(h);
  check_in_viewport(*p, vp);
  const char* type = kind == PointerKind::kDown ? "mousePressed"
                     : kind == PointerKind::kUp ? "mouseReleased"
                                                : "mouseMoved";
  json params{{"type", type},
              {"x", vp.x},
              {"y", vp.y},
              {"button", pointer_button_name(button)},
              {"modifiers", modifiers}};
  if (kind != PointerKind::kMove) params["clickCount"] = 1;
  p->conn->call("Input.dispatchMouseEvent", std::move(params));
}

void DevtoolsBridge::inject_key(const PageHandle& h, const KeyDescriptor& key) {
  auto p = page(h);
  json params{{"key", key.key},
              {"code", key.code},
              {"modifiers", key.modifiers}};
  if (key.action == KeyAction::kUp) {
    params["type"] = "keyUp";
  } else if (key.text.empty()) {
    params["type"] = "rawKeyDown";
  } else {
    params["type"] = "keyDown";
    params["text"] = key.text;
  }
  p->conn->call("Input.dispatchKeyEvent", std::move(params));
}

void DevtoolsBridge::inject_wheel(const PageHandle& h, core::ViewportPoint vp,
                                  double delta_x, double delta_y) {
  auto p = page(h);
  check_in_viewport(*p, vp);
  p->conn->call("Input.dispatchMouseEvent", {{"type", "mouseWheel"},
                                             {"x", vp.x},
                                             {"y", vp.y},
                                             {"deltaX", delta_x},
                                             {"deltaY", delta_y}});
}

core::ViewportMetrics DevtoolsBridge::scroll_to(const PageHandle& h,
                                                double scroll_x,
                                                double scroll_y) {
  auto p = page(h);
  core::ViewportMetrics current;
  {
    std::lock_guard lock(p->mu);
    current = p->metrics;
  }
  auto target = core::clamp_scroll(current, scroll_x, scroll_y);
  evaluate(*p, "scrollTo(" + json(target.scroll_x).dump() + ", " +
                   json(target.scroll_y).dump() + ")");
  return fetch_metrics(*p);
}

core::ViewportMetrics DevtoolsBridge::query_metrics(const PageHandle& h) {
  return fetch_metrics(*page(h));
}

}  // namespace btw::bridge
