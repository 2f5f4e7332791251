#include "btw/outbox.hpp"

namespace btw::transport {

void Outbox::push_control(protocol::WireFrame frame) {
  std::lock_guard lock(mu_);
  control_.push_back(std::move(frame));
}

void Outbox::push_frame(std::uint32_t panel_hash, protocol::WireFrame frame) {
  std::lock_guard lock(mu_);
  auto [it, fresh] = frames_.try_emplace(panel_hash, std::move(frame));
  if (fresh) {
    frame_order_.push_back(panel_hash);
  } else {
    it->second = std::move(frame);
    ++coalesced_;
  }
}

std::optional<protocol::WireFrame> Outbox::pop() {
  std::lock_guard lock(mu_);
  if (!control_.empty()) {
    auto f = std::move(control_.front());
    control_.pop_front();
    return f;
  }
  if (frame_order_.empty()) return std::nullopt;
  const std::uint32_t hash = frame_order_.front();
  frame_order_.pop_front();
  auto node = frames_.extract(hash);
  return std::move(node.mapped());
}

bool Outbox::empty() const {
  std::lock_guard lock(mu_);
  return control_.empty() && frame_order_.empty();
}

std::size_t Outbox::pending() const {
  std::lock_guard lock(mu_);
  return control_.size() + frame_order_.size();
}

std::uint64_t Outbox::coalesced() const {
  std::lock_guard lock(mu_);
  return coalesced_;
}

}  // namespace btw::transport
