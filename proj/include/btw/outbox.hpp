#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <vector>

#include "btw/protocol.hpp"

namespace btw::transport {

// Pending sends for one client. Control messages are never dropped and keep
// FIFO order; a panel frame replaces any undelivered frame of the same panel,
// so a slow client sees fewer frames but never an older one after a newer one.
class Outbox {
 public:
  void push_control(protocol::WireFrame frame);
  void push_frame(std::uint32_t panel_hash, protocol::WireFrame frame);

  // Control first, then frames in the order their panels were first queued.
  std::optional<protocol::WireFrame> pop();

  bool empty() const;
  std::size_t pending() const;
  std::uint64_t coalesced() const;

 private:
  mutable std::mutex mu_;
  std::deque<protocol::WireFrame> control_;
  std::deque<std::uint32_t> frame_order_;
  std::map<std::uint32_t, protocol::WireFrame> frames_;
  std::uint64_t coalesced_ = 0;
};

}  // namespace btw::transport
