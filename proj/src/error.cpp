#include "btw/error.hpp"

namespace btw {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput: return "invalid-input";
    case ErrorCode::kNavigation: return "navigation";
    case ErrorCode::kConflict: return "conflict";
    case ErrorCode::kNotFound: return "not-found";
    case ErrorCode::kOutOfViewport: return "out-of-viewport";
    case ErrorCode::kUnknownPanel: return "unknown-panel";
    case ErrorCode::kValidation: return "validation";
    case ErrorCode::kResolution: return "resolution";
    case ErrorCode::kDecode: return "decode";
    case ErrorCode::kProtocol: return "protocol";
    case ErrorCode::kTransport: return "transport";
    case ErrorCode::kInternal: return "internal";
  }
  return "internal";
}

}  // namespace btw
