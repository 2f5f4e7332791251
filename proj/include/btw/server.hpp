#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "btw/session.hpp"

namespace btw::transport {

struct ServerOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 7420;  // 0 picks a free port
  std::string token;          // empty disables the check
  int max_fps = bridge::kDefaultMaxFps;
  int io_threads = 2;
};

// Extracts a query parameter from a request target, percent-decoded.
std::optional<std::string> query_param(std::string_view target,
                                       std::string_view name);

class Connection;

// WebSocket front end for one Session. Clients connect to
// ws://host:port/?token=... ; control messages are text frames, panel frames
// binary. Also drives the session's capture loop.
class Server {
 public:
  using EventSink = std::function<void(const std::string& line)>;

  Server(session::Session& session, ServerOptions options,
         EventSink events = {});
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds, starts capture and the io threads. Throws Error{kTransport}.
  void start();
  void stop();

  std::uint16_t port() const { return port_; }

 private:
  friend class Connection;
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::uint16_t port_ = 0;
};

}  // namespace btw::transport
