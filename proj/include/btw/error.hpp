#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace btw {

enum class ErrorCode {
  kInvalidInput,
  kNavigation,
  kConflict,
  kNotFound,
  kOutOfViewport,
  kUnknownPanel,
  kValidation,
  kResolution,
  kDecode,
  kProtocol,
  kTransport,
  kInternal,
};

// Stable wire/diagnostic spelling, e.g. "unknown-panel".
std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(detail), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Raised by the layout parser/validator; path names the offending field,
// e.g. "panels[1].id".
class ValidationError : public Error {
 public:
  ValidationError(std::string path, const std::string& detail)
      : Error(ErrorCode::kValidation, path + ": " + detail),
        path_(std::move(path)),
        detail_(detail) {}

  const std::string& path() const { return path_; }
  const std::string& detail() const { return detail_; }

 private:
  std::string path_;
  std::string detail_;
};

class DecodeError : public Error {
 public:
  DecodeError(std::size_t offset, const std::string& detail)
      : Error(ErrorCode::kDecode,
              "at offset " + std::to_string(offset) + ": " + detail),
        offset_(offset) {}

  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace btw
