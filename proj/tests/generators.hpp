#pragma once

// Random well-formed protocol messages and byte mutations for round-trip and
// fuzz tests.

#include <cmath>
#include <random>
#include <string>

#include "btw/protocol.hpp"

namespace gen {

using Rng = std::mt19937_64;

inline std::string text(Rng& rng, std::size_t max_len = 12) {
  static constexpr char kChars[] =
      "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789-_ \"\\/";
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, sizeof(kChars) - 2);
  std::string s(len(rng), ' ');
  for (auto& c : s) c = kChars[pick(rng)];
  // Non-ASCII UTF-8 now and then.
  if (rng() % 8 == 0) s += "\xc3\xa9\xe2\x82\xac";
  return s;
}

inline double real(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

template <typename T>
T pick(Rng& rng, std::initializer_list<T> options) {
  std::uniform_int_distribution<std::size_t> d(0, options.size() - 1);
  return *(options.begin() + d(rng));
}

inline btw::policy::PanelPose pose(Rng& rng) {
  btw::policy::PanelPose p;
  p.position = {real(rng, -2, 2), real(rng, -2, 2), real(rng, -2, 2)};
  double q[4];
  double n = 0;
  do {
    n = 0;
    for (double& c : q) {
      c = real(rng, -1, 1);
      n += c * c;
    }
  } while (n < 1e-3);
  n = std::sqrt(n);
  p.orientation = {q[0] / n, q[1] / n, q[2] / n, q[3] / n};
  p.size = {real(rng, 0.01, 2), real(rng, 0.01, 2)};
  return p;
}

inline btw::protocol::InputEvent input(Rng& rng) {
  using btw::protocol::InputKind;
  btw::protocol::InputEvent e;
  e.panel_id = text(rng);
  e.kind = pick(rng, {InputKind::kPointerDown, InputKind::kPointerMove,
                      InputKind::kPointerUp, InputKind::kWheel,
                      InputKind::kKey});
  e.client_seq = rng();
  if (e.kind == InputKind::kKey) {
    e.key.action = pick(rng, {btw::bridge::KeyAction::kDown,
                              btw::bridge::KeyAction::kUp});
    e.key.key = text(rng, 6);
    e.key.code = text(rng, 6);
    e.key.text = text(rng, 2);
    e.key.modifiers = static_cast<std::uint32_t>(rng() % 16);
    return e;
  }
  e.location = {real(rng, 0, 1), real(rng, 0, 1)};
  if (rng() % 10 == 0) e.location = {1, 0};
  if (e.kind == InputKind::kWheel) {
    e.delta_x = real(rng, -500, 500);
    e.delta_y = real(rng, -500, 500);
  } else {
    e.button = pick(rng, {btw::bridge::PointerButton::kNone,
                          btw::bridge::PointerButton::kLeft,
                          btw::bridge::PointerButton::kMiddle,
                          btw::bridge::PointerButton::kRight});
    e.modifiers = static_cast<std::uint32_t>(rng() % 16);
  }
  return e;
}

inline btw::protocol::Message message(Rng& rng) {
  using namespace btw::protocol;
  switch (rng() % 7) {
    case 0:
      return Hello{text(rng), static_cast<int>(rng() % 4)};
    case 1: {
      LayoutAnnounce a;
      a.layout_name = text(rng);
      a.url = "mock://grid?" + text(rng);
      a.metrics = {real(rng, 0, 900), real(rng, 0, 900), 1280, 800,
                   real(rng, 0.5, 3), 2000, 3000};
      a.d_touch = real(rng, 0.1, 0.6);
      a.d_ray = a.d_touch + real(rng, 0.01, 1);
      a.surfaces.push_back({{real(rng, -1, 1), 0, -0.4}, {0, 1, 0}, 1.6, 0.8});
      for (std::size_t i = rng() % 4; i > 0; --i) {
        AnnouncedPanel p;
        p.id = text(rng);
        p.hash = panel_hash(p.id);
        p.display_name = text(rng);
        p.role = pick(rng, {btw::layout::Role::kPrimaryContent,
                            btw::layout::Role::kControl,
                            btw::layout::Role::kContext,
                            btw::layout::Role::kPeripheral});
        p.anchoring = pick(rng, {btw::layout::Anchoring::kDocument,
                                 btw::layout::Anchoring::kViewport});
        p.rect = {real(rng, 0, 500), real(rng, 0, 500), real(rng, 1, 900),
                  real(rng, 1, 900)};
        p.placement = {pick(rng, {btw::layout::Zone::kSurface,
                                  btw::layout::Zone::kMidairSide}),
                       pick(rng, {btw::layout::Distance::kNear,
                                  btw::layout::Distance::kFar}),
                       real(rng, 0.1, 3)};
        p.interaction = pick(rng, {btw::layout::InteractionHint::kTouch,
                                   btw::layout::InteractionHint::kAuto});
        p.pose = pose(rng);
        p.anchored = rng() % 2;
        p.input_mode = pick(rng, {btw::policy::InputMode::kTouch,
                                  btw::policy::InputMode::kRay});
        a.panels.push_back(p);
      }
      return a;
    }
    case 2: {
      PanelFrameMsg f;
      f.panel_hash = static_cast<std::uint32_t>(rng());
      f.source_seq = static_cast<std::uint32_t>(rng());
      if (rng() % 5 == 0) return f;  // off-viewport
      f.x = static_cast<std::uint16_t>(rng());
      f.y = static_cast<std::uint16_t>(rng());
      f.w = static_cast<std::uint16_t>(1 + rng() % 8);
      f.h = static_cast<std::uint16_t>(1 + rng() % 8);
      if (rng() % 2) {
        f.format = FrameFormat::kPng;
        f.payload.resize(1 + rng() % 64);
      } else {
        f.payload.resize(std::size_t(f.w) * f.h * 4);
      }
      for (auto& b : f.payload) b = static_cast<std::uint8_t>(rng());
      return f;
    }
    case 3:
      return input(rng);
    case 4:
      return PanelTransformMsg{text(rng), pose(rng), rng()};
    case 5:
      return PanelStateMsg{text(rng), pose(rng), rng() % 2 == 0,
                           pick(rng, {btw::policy::InputMode::kTouch,
                                      btw::policy::InputMode::kRay})};
    default:
      return ErrorMsg{text(rng), text(rng, 40)};
  }
}

// Truncation, bit flips, byte splices, insertions or pure noise.
inline std::string mutate(Rng& rng, std::string bytes) {
  switch (rng() % 5) {
    case 0:
      if (!bytes.empty()) bytes.resize(rng() % bytes.size());
      break;
    case 1:
      for (int i = 0, n = 1 + rng() % 4; i < n && !bytes.empty(); ++i) {
        bytes[rng() % bytes.size()] ^= static_cast<char>(1 << (rng() % 8));
      }
      break;
    case 2:
      for (int i = 0, n = 1 + rng() % 4; i < n && !bytes.empty(); ++i) {
        bytes[rng() % bytes.size()] = static_cast<char>(rng());
      }
      break;
    case 3: {
      static constexpr const char* kTokens[] = {
          "{", "}", "[", "]", ",", ":", "\"", "null", "1e999", "-0", "\\u0000",
          "\"type\"", "\"input\"", "\xff", "true"};
      const std::size_t at = bytes.empty() ? 0 : rng() % (bytes.size() + 1);
      bytes.insert(at, kTokens[rng() % std::size(kTokens)]);
      break;
    }
    default: {
      bytes.resize(rng() % 64);
      for (auto& c : bytes) c = static_cast<char>(rng());
      break;
    }
  }
  return bytes;
}

}  // namespace gen
