#include "btw/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "btw/error.hpp"

namespace btw::config {

using json = nlohmann::json;

namespace {

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ValidationError(path, "expected a number");
  return j.get<double>();
}

std::string string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ValidationError(path, "expected a string");
  return j.get<std::string>();
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer() ||
      (j.is_number_unsigned() && j.get<std::uint64_t>() > INT32_MAX) ||
      j.get<std::int64_t>() < INT32_MIN || j.get<std::int64_t>() > INT32_MAX) {
    throw ValidationError(path, "expected an integer");
  }
  return j.get<int>();
}

policy::Vec3 vec3(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) {
    throw ValidationError(path, "expected [x, y, z]");
  }
  return {number(j[0], path + "[0]"), number(j[1], path + "[1]"),
          number(j[2], path + "[2]")};
}

std::pair<double, double> pair2(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) {
    throw ValidationError(path, "expected a two-element array");
  }
  return {number(j[0], path + "[0]"), number(j[1], path + "[1]")};
}

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ValidationError(path, "expected an object");
}

std::optional<int> env_int(const EnvLookup& env, const char* name) {
  auto v = env(name);
  if (!v) return std::nullopt;
  char* end = nullptr;
  errno = 0;
  long n = std::strtol(v->c_str(), &end, 10);
  if (v->empty() || *end != '\0' || errno != 0 || n < INT32_MIN ||
      n > INT32_MAX) {
    throw ValidationError(name, "expected an integer, got '" + *v + "'");
  }
  return static_cast<int>(n);
}

}  // namespace

void ServeConfig::validate() const {
  if (bridge != "mock" && bridge != "devtools") {
    throw ValidationError("bridge", "expected mock or devtools, got '" +
                                        bridge + "'");
  }
  if (bridge == "devtools" && devtools_endpoint.empty()) {
    throw ValidationError("devtools_endpoint",
                          "required with the devtools bridge");
  }
  if (max_fps < 1 || max_fps > 240) {
    throw ValidationError("max_fps", "must be in 1..240");
  }
  policy.validate();
}

EnvLookup process_env() {
  return [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    if (!v) return std::nullopt;
    return std::string(v);
  };
}

Overrides overrides_from_env(const EnvLookup& env) {
  Overrides o;
  o.url = env("BTW_URL");
  o.bridge = env("BTW_BRIDGE");
  o.devtools_endpoint = env("BTW_DEVTOOLS_ENDPOINT");
  o.host = env("BTW_HOST");
  o.port = env_int(env, "BTW_PORT");
  o.layout_dir = env("BTW_LAYOUT_DIR");
  o.layout = env("BTW_LAYOUT");
  o.token = env("BTW_TOKEN");
  o.max_fps = env_int(env, "BTW_MAX_FPS");
  return o;
}

void apply(ServeConfig& cfg, const Overrides& o) {
  if (o.url) cfg.url = *o.url;
  if (o.bridge) cfg.bridge = *o.bridge;
  if (o.devtools_endpoint) cfg.devtools_endpoint = *o.devtools_endpoint;
  if (o.host) cfg.host = *o.host;
  if (o.port) {
    if (*o.port < 0 || *o.port > 65535) {
      throw ValidationError("port", "must be in 0..65535");
    }
    cfg.port = static_cast<std::uint16_t>(*o.port);
  }
  if (o.layout_dir) cfg.layout_dir = *o.layout_dir;
  if (o.layout) cfg.layout = *o.layout;
  if (o.token) cfg.token = *o.token;
  if (o.max_fps) cfg.max_fps = *o.max_fps;
}

void apply_policy_json(policy::PolicyConfig& cfg, const json& j,
                       const std::string& path) {
  require_object(j, path);
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    const std::string p = path + "." + key;
    const json& v = it.value();
    if (key == "d_touch") {
      cfg.d_touch = number(v, p);
    } else if (key == "d_ray") {
      cfg.d_ray = number(v, p);
    } else if (key == "snap_threshold") {
      cfg.snap_threshold = number(v, p);
    } else if (key == "user_reference") {
      cfg.user_reference = vec3(v, p);
    } else if (key == "surfaces") {
      if (!v.is_array()) throw ValidationError(p, "expected an array");
      cfg.surfaces.clear();
      for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string sp = p + "[" + std::to_string(i) + "]";
        require_object(v[i], sp);
        policy::SurfacePlane s;
        for (auto f = v[i].begin(); f != v[i].end(); ++f) {
          if (f.key() == "origin") {
            s.origin = vec3(f.value(), sp + ".origin");
          } else if (f.key() == "normal") {
            s.normal = vec3(f.value(), sp + ".normal");
          } else if (f.key() == "extent") {
            std::tie(s.extent_w, s.extent_d) =
                pair2(f.value(), sp + ".extent");
          } else {
            throw ValidationError(sp + "." + f.key(), "unknown field");
          }
        }
        cfg.surfaces.push_back(s);
      }
    } else if (key == "anchors") {
      if (!v.is_array()) throw ValidationError(p, "expected an array");
      for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string ap = p + "[" + std::to_string(i) + "]";
        const json& a = v[i];
        require_object(a, ap);
        for (auto f = a.begin(); f != a.end(); ++f) {
          if (f.key() != "zone" && f.key() != "distance" &&
              f.key() != "position" && f.key() != "size") {
            throw ValidationError(ap + "." + f.key(), "unknown field");
          }
        }
        if (!a.contains("zone") || !a.contains("distance")) {
          throw ValidationError(ap, "needs zone and distance");
        }
        auto zone = layout::zone_from_string(string(a["zone"], ap + ".zone"));
        if (!zone) throw ValidationError(ap + ".zone", "unknown zone");
        auto dist = layout::distance_from_string(
            string(a["distance"], ap + ".distance"));
        if (!dist) throw ValidationError(ap + ".distance", "unknown distance");
        policy::ZoneAnchor& anchor = cfg.anchors[{*zone, *dist}];
        if (a.contains("position")) {
          anchor.position = vec3(a["position"], ap + ".position");
        }
        if (a.contains("size")) {
          std::tie(anchor.size.w, anchor.size.h) =
              pair2(a["size"], ap + ".size");
        }
      }
    } else {
      throw ValidationError(p, "unknown field");
    }
  }
}

void apply_json(ServeConfig& cfg, const json& j) {
  require_object(j, "$");
  Overrides o;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    const std::string p = "$." + key;
    const json& v = it.value();
    if (key == "url") {
      o.url = string(v, p);
    } else if (key == "bridge") {
      o.bridge = string(v, p);
    } else if (key == "devtools_endpoint") {
      o.devtools_endpoint = string(v, p);
    } else if (key == "host") {
      o.host = string(v, p);
    } else if (key == "port") {
      o.port = integer(v, p);
    } else if (key == "layout_dir") {
      o.layout_dir = string(v, p);
    } else if (key == "layout") {
      o.layout = string(v, p);
    } else if (key == "token") {
      o.token = string(v, p);
    } else if (key == "max_fps") {
      o.max_fps = integer(v, p);
    } else if (key == "auto_scroll") {
      if (!v.is_boolean()) throw ValidationError(p, "expected a bool");
      cfg.auto_scroll = v.get<bool>();
    } else if (key == "frame_format") {
      const std::string f = string(v, p);
      if (f == "raw") {
        cfg.frame_format = protocol::FrameFormat::kRawRgba;
      } else if (f == "png") {
        cfg.frame_format = protocol::FrameFormat::kPng;
      } else {
        throw ValidationError(p, "expected raw or png");
      }
    } else if (key == "policy") {
      apply_policy_json(cfg.policy, v);
    } else {
      throw ValidationError(p, "unknown field");
    }
  }
  apply(cfg, o);
}

void apply_file(ServeConfig& cfg, const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot read " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ValidationError(file.filename().string() + ":$",
                          "malformed JSON at byte " + std::to_string(e.byte));
  }
  try {
    apply_json(cfg, j);
  } catch (const ValidationError& e) {
    throw ValidationError(file.filename().string() + ":" + e.path(),
                          e.detail());
  }
}

ServeConfig resolve(const EnvLookup& env,
                    const std::optional<std::filesystem::path>& file,
                    const Overrides& flags) {
  ServeConfig cfg;
  apply(cfg, overrides_from_env(env));
  if (file) apply_file(cfg, *file);
  apply(cfg, flags);
  cfg.validate();
  return cfg;
}

}  // namespace btw::config
