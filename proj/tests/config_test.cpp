#include <functional>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "doctest.h"
#include "btw/config.hpp"
#include "btw/error.hpp"

using namespace btw;
using namespace btw::config;
namespace fs = std::filesystem;

namespace {

EnvLookup fake_env(std::map<std::string, std::string> vars) {
  return [vars](const char* name) -> std::optional<std::string> {
    auto it = vars.find(name);
    if (it == vars.end()) return std::nullopt;
    return it->second;
  };
}

struct TempFile {
  fs::path path;
  explicit TempFile(const std::string& body) {
    static int n = 0;
    path = fs::temp_directory_path() /
           ("btw_cfg_" + std::to_string(getpid()) + "_" + std::to_string(n++) +
            ".json");
    std::ofstream(path) << body;
  }
  ~TempFile() { fs::remove(path); }
};

std::string validation_path(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ValidationError& e) {
    return e.path();
  }
  FAIL("no ValidationError");
  return {};
}

}  // namespace

TEST_CASE("defaults") {
  auto cfg = resolve(fake_env({}), std::nullopt, {});
  CHECK(cfg.url == "mock://grid");
  CHECK(cfg.bridge == "mock");
  CHECK(cfg.host == "127.0.0.1");
  CHECK(cfg.port == 7420);
  CHECK(cfg.max_fps == 15);
  CHECK(cfg.auto_scroll);
  CHECK(cfg.frame_format == protocol::FrameFormat::kRawRgba);
  CHECK(cfg.policy.d_touch == 0.6);
}

TEST_CASE("layers apply in order: env, file, flags") {
  TempFile file(R"({"port": 9000, "layout": "maps", "token": "file"})");
  auto env = fake_env({{"BTW_PORT", "8000"}, {"BTW_TOKEN", "env"},
                       {"BTW_URL", "mock://grid?vw=800"}});
  Overrides flags;
  flags.token = "flag";

  auto cfg = resolve(env, file.path, flags);
  CHECK(cfg.port == 9000);
  CHECK(cfg.layout == "maps");
  CHECK(cfg.token == "flag");
  CHECK(cfg.url == "mock://grid?vw=800");

  cfg = resolve(env, std::nullopt, {});
  CHECK(cfg.port == 8000);
  CHECK(cfg.token == "env");
}

TEST_CASE("environment numbers must parse") {
  CHECK(validation_path([] { resolve(fake_env({{"BTW_PORT", "80x"}}), std::nullopt, {}); }) ==
        "BTW_PORT");
  CHECK(validation_path([] { resolve(fake_env({{"BTW_MAX_FPS", ""}}), std::nullopt, {}); }) ==
        "BTW_MAX_FPS");
  CHECK(validation_path([] {
          resolve(fake_env({{"BTW_PORT", "99999999999"}}), std::nullopt, {});
        }) == "BTW_PORT");
  CHECK(validation_path([] { resolve(fake_env({{"BTW_PORT", "70000"}}), std::nullopt, {}); }) ==
        "port");
}

TEST_CASE("validation") {
  Overrides o;
  o.bridge = "chrome";
  CHECK(validation_path([&] { resolve(fake_env({}), std::nullopt, o); }) == "bridge");
  o.bridge = "devtools";
  CHECK(validation_path([&] { resolve(fake_env({}), std::nullopt, o); }) ==
        "devtools_endpoint");
  o.devtools_endpoint = "http://127.0.0.1:9222";
  CHECK_NOTHROW(resolve(fake_env({}), std::nullopt, o));
  Overrides fps;
  fps.max_fps = 0;
  CHECK(validation_path([&] { resolve(fake_env({}), std::nullopt, fps); }) == "max_fps");
  fps.max_fps = 241;
  CHECK(validation_path([&] { resolve(fake_env({}), std::nullopt, fps); }) == "max_fps");
}

TEST_CASE("config file keys are strict") {
  TempFile unknown(R"({"prot": 1})");
  CHECK(validation_path([&] {
          ServeConfig c;
          apply_file(c, unknown.path);
        }) == unknown.path.filename().string() + ":$.prot");
  TempFile wrong_type(R"({"port": "80"})");
  CHECK(validation_path([&] {
          ServeConfig c;
          apply_file(c, wrong_type.path);
        }) == wrong_type.path.filename().string() + ":$.port");
  TempFile malformed("{\"port\": ");
  CHECK(validation_path([&] {
          ServeConfig c;
          apply_file(c, malformed.path);
        }) == malformed.path.filename().string() + ":$");
  ServeConfig c;
  CHECK_THROWS_AS(apply_file(c, "/nonexistent/btw.json"), Error);
}

TEST_CASE("frame format and auto-scroll") {
  ServeConfig c;
  apply_json(c, {{"frame_format", "png"}, {"auto_scroll", false}});
  CHECK(c.frame_format == protocol::FrameFormat::kPng);
  CHECK_FALSE(c.auto_scroll);
  CHECK(validation_path([&] { apply_json(c, {{"frame_format", "jpeg"}}); }) ==
        "$.frame_format");
  CHECK(validation_path([&] { apply_json(c, {{"auto_scroll", 1}}); }) ==
        "$.auto_scroll");
  CHECK(validation_path([&] { apply_json(c, nlohmann::json::array()); }) == "$");
}

TEST_CASE("policy overrides are partial") {
  policy::PolicyConfig p;
  const auto before = p;
  apply_policy_json(p, {{"d_touch", 0.5}});
  CHECK(p.d_touch == 0.5);
  CHECK(p.d_ray == before.d_ray);
  CHECK(p.surfaces.size() == before.surfaces.size());

  apply_policy_json(p, nlohmann::json::parse(R"({
    "surfaces": [{"origin": [0, 0.7, -0.5], "normal": [0, 1, 0], "extent": [1, 1]}],
    "anchors": [{"zone": "midair-center", "distance": "mid", "position": [0, 1, -1]}]
  })"));
  REQUIRE(p.surfaces.size() == 1);
  CHECK(p.surfaces[0].origin.y == doctest::Approx(0.7));
  const auto& a = p.anchors.at({layout::Zone::kMidairCenter, layout::Distance::kMid});
  CHECK(a.position.z == doctest::Approx(-1));
  CHECK(a.size.w == doctest::Approx(0.9));

  CHECK(validation_path([&] { apply_policy_json(p, {{"d_tuch", 1}}); }) ==
        "$.policy.d_tuch");
  CHECK(validation_path([&] {
          apply_policy_json(p, nlohmann::json::parse(
                                   R"({"surfaces": [{"origin": [0, 0]}]})"));
        }) == "$.policy.surfaces[0].origin");
  CHECK(validation_path([&] {
          apply_policy_json(p, nlohmann::json::parse(
                                   R"({"anchors": [{"zone": "sky", "distance": "mid"}]})"));
        }) == "$.policy.anchors[0].zone");
  CHECK(validation_path([&] {
          apply_policy_json(p, nlohmann::json::parse(R"({"anchors": [{"zone": "surface"}]})"));
        }) == "$.policy.anchors[0]");
}

TEST_CASE("policy validation runs on resolve") {
  TempFile file(R"({"policy": {"d_touch": 0.9, "d_ray": 0.5}})");
  CHECK_THROWS_AS(resolve(fake_env({}), file.path, {}), Error);
}
