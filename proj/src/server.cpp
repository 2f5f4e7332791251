#include "btw/server.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <atomic>
#include <chrono>
#include <mutex>
#include <set>
#include <thread>
#include <vector>

#include "btw/error.hpp"
#include "btw/outbox.hpp"

namespace btw::transport {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

constexpr std::size_t kMaxClientMessage = 1 << 20;

int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::string percent_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size()) {
      int hi = hex_digit(s[i + 1]);
      int lo = hex_digit(s[i + 2]);
      if (hi >= 0 && lo >= 0) {
        out.push_back(static_cast<char>(hi * 16 + lo));
        i += 2;
        continue;
      }
    }
    out.push_back(s[i] == '+' ? ' ' : s[i]);
  }
  return out;
}

}  // namespace

std::optional<std::string> query_param(std::string_view target,
                                       std::string_view name) {
  auto q = target.find('?');
  if (q == std::string_view::npos) return std::nullopt;
  std::string_view rest = target.substr(q + 1);
  while (!rest.empty()) {
    auto amp = rest.find('&');
    std::string_view pair = rest.substr(0, amp);
    auto eq = pair.find('=');
    if (percent_decode(pair.substr(0, eq)) == name) {
      return eq == std::string_view::npos ? std::string()
                                          : percent_decode(pair.substr(eq + 1));
    }
    if (amp == std::string_view::npos) break;
    rest = rest.substr(amp + 1);
  }
  return std::nullopt;
}

class Connection;

struct Server::Impl {
  session::Session& session;
  ServerOptions options;
  EventSink events;

  asio::io_context ioc;
  tcp::acceptor acceptor{ioc};
  std::vector<std::thread> io_threads;
  std::thread capture_thread;
  std::atomic<bool> running{false};

  std::mutex conn_mu;
  std::set<std::shared_ptr<Connection>> connections;

  Impl(session::Session& s, ServerOptions o, EventSink e)
      : session(s), options(std::move(o)), events(std::move(e)) {}

  void emit(const std::string& line) {
    if (events) events(line);
  }

  void do_accept();
  void capture_loop();
  void forget(const std::shared_ptr<Connection>& c) {
    std::lock_guard lock(conn_mu);
    connections.erase(c);
  }
};

// One client. All socket work runs on the connection's strand; the session
// may call send() from any thread.
class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, Server::Impl& server)
      : server_(server),
        strand_(asio::make_strand(server.ioc)),
        ws_(std::move(socket)) {}

  ~Connection() {
    if (attached_) server_.session.detach(id_);
  }

  void run() {
    asio::dispatch(strand_, [self = shared_from_this()] { self->read_request(); });
  }

  void send(const protocol::Message& m) {
    protocol::WireFrame wire = protocol::encode_message(m);
    if (const auto* f = std::get_if<protocol::PanelFrameMsg>(&m)) {
      outbox_.push_frame(f->panel_hash, std::move(wire));
    } else {
      outbox_.push_control(std::move(wire));
    }
    asio::post(strand_, [self = shared_from_this()] { self->write_next(); });
  }

  void close_after_flush() {
    asio::post(strand_, [self = shared_from_this()] {
      self->close_requested_ = true;
      self->write_next();
    });
  }

  void shutdown() {
    asio::post(strand_, [self = shared_from_this()] {
      beast::error_code ec;
      beast::get_lowest_layer(self->ws_).socket().close(ec);
    });
  }

 private:
  class Sink : public session::ClientSink {
   public:
    explicit Sink(std::weak_ptr<Connection> c) : c_(std::move(c)) {}
    void send(const protocol::Message& m) override {
      if (auto c = c_.lock()) c->send(m);
    }
    void close() override {
      if (auto c = c_.lock()) c->close_after_flush();
    }

   private:
    std::weak_ptr<Connection> c_;
  };

  void read_request() {
    beast::get_lowest_layer(ws_).expires_after(std::chrono::seconds(30));
    http::async_read(
        beast::get_lowest_layer(ws_), buffer_, request_,
        asio::bind_executor(strand_, [self = shared_from_this()](
                                         beast::error_code ec, std::size_t) {
          self->on_request(ec);
        }));
  }

  void reject(http::status status, std::string body) {
    auto res = std::make_shared<http::response<http::string_body>>(
        status, request_.version());
    res->set(http::field::content_type, "text/plain");
    res->body() = std::move(body);
    res->prepare_payload();
    res->keep_alive(false);
    http::async_write(
        beast::get_lowest_layer(ws_), *res,
        asio::bind_executor(strand_, [self = shared_from_this(), res](
                                         beast::error_code, std::size_t) {
          beast::error_code ec;
          beast::get_lowest_layer(self->ws_).socket().shutdown(
              tcp::socket::shutdown_both, ec);
          self->server_.forget(self);
        }));
  }

  void on_request(beast::error_code ec) {
    if (ec) {
      server_.forget(shared_from_this());
      return;
    }
    if (!websocket::is_upgrade(request_)) {
      reject(http::status::bad_request, "websocket upgrade required\n");
      return;
    }
    const auto& token = server_.options.token;
    if (!token.empty()) {
      auto given = query_param(
          std::string_view(request_.target().data(), request_.target().size()),
          "token");
      if (!given || *given != token) {
        server_.emit("ERROR unauthorized connection rejected");
        reject(http::status::unauthorized, "bad token\n");
        return;
      }
    }
    beast::get_lowest_layer(ws_).expires_never();
    ws_.set_option(
        websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.read_message_max(kMaxClientMessage);
    ws_.async_accept(request_,
                     asio::bind_executor(strand_, [self = shared_from_this()](
                                                      beast::error_code ec) {
                       self->on_accept(ec);
                     }));
  }

  void on_accept(beast::error_code ec) {
    if (ec) {
      server_.forget(shared_from_this());
      return;
    }
    sink_ = std::make_shared<Sink>(weak_from_this());
    id_ = server_.session.attach(sink_);
    attached_ = true;
    beast::error_code rec;
    auto remote = beast::get_lowest_layer(ws_).socket().remote_endpoint(rec);
    server_.emit("SESSION " + std::to_string(id_) + " open " +
                 (rec ? std::string("?") : remote.address().to_string() + ":" +
                                               std::to_string(remote.port())));
    read_message();
  }

  void read_message() {
    ws_.async_read(in_, asio::bind_executor(
                            strand_, [self = shared_from_this()](
                                         beast::error_code ec, std::size_t) {
                              self->on_message(ec);
                            }));
  }

  void on_message(beast::error_code ec) {
    if (ec) {
      finish(ec);
      return;
    }
    protocol::WireFrame frame;
    frame.kind = ws_.got_text() ? protocol::FrameKind::kText
                                : protocol::FrameKind::kBinary;
    frame.bytes = beast::buffers_to_string(in_.data());
    in_.consume(in_.size());
    try {
      server_.session.on_wire(id_, frame);
    } catch (const std::exception& e) {
      server_.emit("ERROR session " + std::to_string(id_) + ": " + e.what());
    }
    if (!closing_) read_message();
  }

  void write_next() {
    if (writing_ || closing_) return;
    auto next = outbox_.pop();
    if (!next) {
      if (close_requested_) {
        closing_ = true;
        ws_.async_close(websocket::close_code::normal,
                        asio::bind_executor(strand_,
                                            [self = shared_from_this()](
                                                beast::error_code) {}));
      }
      return;
    }
    writing_ = true;
    current_ = std::move(next->bytes);
    ws_.text(next->kind == protocol::FrameKind::kText);
    ws_.async_write(asio::buffer(current_),
                    asio::bind_executor(strand_, [self = shared_from_this()](
                                                     beast::error_code ec,
                                                     std::size_t) {
                      self->writing_ = false;
                      if (ec) {
                        self->finish(ec);
                        return;
                      }
                      self->write_next();
                    }));
  }

  void finish(beast::error_code) {
    if (attached_) {
      attached_ = false;
      server_.session.detach(id_);
      server_.emit("SESSION " + std::to_string(id_) + " closed");
    }
    closing_ = true;
    server_.forget(shared_from_this());
  }

  Server::Impl& server_;
  asio::strand<asio::io_context::executor_type> strand_;
  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
  beast::flat_buffer in_;
  Outbox outbox_;
  std::string current_;
  std::shared_ptr<Sink> sink_;
  session::Session::ClientId id_ = 0;
  bool attached_ = false;
  bool writing_ = false;
  bool close_requested_ = false;
  bool closing_ = false;
};

void Server::Impl::do_accept() {
  acceptor.async_accept(
      asio::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
        if (ec) {
          if (running) emit("ERROR accept: " + ec.message());
          if (!acceptor.is_open()) return;
        } else {
          auto c = std::make_shared<Connection>(std::move(socket), *this);
          {
            std::lock_guard lock(conn_mu);
            connections.insert(c);
          }
          c->run();
        }
        if (running) do_accept();
      });
}

void Server::Impl::capture_loop() {
  while (running) {
    bool processed = false;
    try {
      processed = session.pump();
    } catch (const std::exception& e) {
      emit(std::string("ERROR capture: ") + e.what());
    }
    if (!processed) std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
}

Server::Server(session::Session& session, ServerOptions options,
               EventSink events)
    : impl_(std::make_unique<Impl>(session, std::move(options),
                                   std::move(events))) {}

Server::~Server() { stop(); }

void Server::start() {
  Impl& s = *impl_;
  try {
    tcp::endpoint ep(asio::ip::make_address(s.options.host), s.options.port);
    s.acceptor.open(ep.protocol());
    s.acceptor.set_option(asio::socket_base::reuse_address(true));
    s.acceptor.bind(ep);
    s.acceptor.listen(asio::socket_base::max_listen_connections);
    port_ = s.acceptor.local_endpoint().port();
  } catch (const boost::system::system_error& e) {
    throw Error(ErrorCode::kTransport, "cannot listen on " + s.options.host +
                                           ":" +
                                           std::to_string(s.options.port) +
                                           ": " + e.code().message());
  }
  s.session.start_capture(s.options.max_fps);
  s.running = true;
  s.do_accept();
  const int n = std::max(1, s.options.io_threads);
  for (int i = 0; i < n; ++i) {
    s.io_threads.emplace_back([&s] { s.ioc.run(); });
  }
  s.capture_thread = std::thread([&s] { s.capture_loop(); });
}

void Server::stop() {
  if (!impl_) return;
  Impl& s = *impl_;
  if (!s.running.exchange(false)) return;
  asio::post(s.ioc, [&s] {
    beast::error_code ec;
    s.acceptor.close(ec);
  });
  {
    std::lock_guard lock(s.conn_mu);
    for (const auto& c : s.connections) c->shutdown();
  }
  if (s.capture_thread.joinable()) s.capture_thread.join();
  s.session.stop_capture();
  // Give pending closes a moment to run before tearing down the loop.
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  s.ioc.stop();
  for (auto& t : s.io_threads) t.join();
  s.io_threads.clear();
  std::lock_guard lock(s.conn_mu);
  s.connections.clear();
}

}  // namespace btw::transport
