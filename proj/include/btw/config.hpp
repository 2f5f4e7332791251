#pragma once

// Server configuration, layered lowest to highest:
//   built-in defaults < BTW_* environment < config file < command-line flags
//
// The config file is canonical JSON with the same keys as the flags
// (underscored) plus "policy", "auto_scroll", "frame_format" and "host":
//
//   {"port": 7420, "layout": "youtube", "frame_format": "png",
//    "policy": {"d_touch": 0.55, "surfaces": [{"origin": [0, 0, -0.4],
//               "normal": [0, 1, 0], "extent": [1.6, 0.8]}]}}

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "btw/policy.hpp"
#include "btw/protocol.hpp"
#include "json.hpp"

namespace btw::config {

struct ServeConfig {
  std::string url = "mock://grid";
  std::string bridge = "mock";  // mock | devtools
  std::string devtools_endpoint;
  std::string host = "127.0.0.1";
  std::uint16_t port = 7420;
  std::string layout_dir;
  std::string layout;  // empty: match by URL
  std::string token;
  int max_fps = 15;
  bool auto_scroll = true;
  protocol::FrameFormat frame_format = protocol::FrameFormat::kRawRgba;
  policy::PolicyConfig policy;

  // Throws Error{kValidation} on out-of-range values.
  void validate() const;
};

// Unset fields leave the lower layer alone.
struct Overrides {
  std::optional<std::string> url;
  std::optional<std::string> bridge;
  std::optional<std::string> devtools_endpoint;
  std::optional<std::string> host;
  std::optional<int> port;
  std::optional<std::string> layout_dir;
  std::optional<std::string> layout;
  std::optional<std::string> token;
  std::optional<int> max_fps;
};

using EnvLookup = std::function<std::optional<std::string>(const char*)>;

EnvLookup process_env();

// BTW_URL, BTW_BRIDGE, BTW_DEVTOOLS_ENDPOINT, BTW_HOST, BTW_PORT,
// BTW_LAYOUT_DIR, BTW_LAYOUT, BTW_TOKEN, BTW_MAX_FPS. Throws ValidationError
// naming the variable on unparsable numbers.
Overrides overrides_from_env(const EnvLookup& env);

void apply(ServeConfig& cfg, const Overrides& o);

// Applies a config file's fields on top of cfg. Unknown keys are errors.
void apply_file(ServeConfig& cfg, const std::filesystem::path& file);
void apply_json(ServeConfig& cfg, const nlohmann::json& j);

// Partial override of a policy config; keys absent from j keep their value.
void apply_policy_json(policy::PolicyConfig& cfg, const nlohmann::json& j,
                       const std::string& path = "$.policy");

ServeConfig resolve(const EnvLookup& env,
                    const std::optional<std::filesystem::path>& file,
                    const Overrides& flags);

}  // namespace btw::config
