#include "btw/bridge.hpp"

#include <cctype>

namespace btw::bridge {

bool is_well_formed_url(std::string_view url) {
  auto colon = url.find(':');
  if (colon == std::string_view::npos || colon == 0 ||
      colon + 1 >= url.size()) {
    return false;
  }
  if (!std::isalpha(static_cast<unsigned char>(url[0]))) return false;
  for (char c : url.substr(0, colon)) {
    auto uc = static_cast<unsigned char>(c);
    if (!std::isalnum(uc) && c != '+' && c != '-' && c != '.') return false;
  }
  for (char c : url) {
    auto uc = static_cast<unsigned char>(c);
    if (uc <= 0x20 || uc == 0x7f) return false;
  }
  return true;
}

std::string_view pointer_kind_name(PointerKind k) {
  switch (k) {
    case PointerKind::kDown: return "pointer-down";
    case PointerKind::kMove: return "pointer-move";
    case PointerKind::kUp: return "pointer-up";
  }
  return "?";
}

std::string_view pointer_button_name(PointerButton b) {
  switch (b) {
    case PointerButton::kNone: return "none";
    case PointerButton::kLeft: return "left";
    case PointerButton::kMiddle: return "middle";
    case PointerButton::kRight: return "right";
  }
  return "?";
}

}  // namespace btw::bridge
