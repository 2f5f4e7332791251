// btw: serve a page as panels, replay scripts, inspect layouts.
//
// Exit codes: 0 success, 1 usage error, 2 runtime error, 3 replay assertion
// failure.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>

#include "CLI11.hpp"
#include "btw/config.hpp"
#include "btw/decomposer.hpp"
#include "btw/devtools_bridge.hpp"
#include "btw/error.hpp"
#include "btw/layout_store.hpp"
#include "btw/mock_bridge.hpp"
#include "btw/replay.hpp"
#include "btw/server.hpp"
#include "btw/session.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitAssertion = 3;

constexpr double kLatencyBudgetMs = 5.0;

std::mutex stdout_mu;

void out_line(const std::string& line) {
  std::lock_guard lock(stdout_mu);
  std::cout << line << std::endl;
}

btw::layout::LayoutStore load_store(const std::string& dir) {
  auto store = btw::layout::LayoutStore::with_builtins();
  if (!dir.empty()) store.load_directory(dir);
  return store;
}

int run_serve(const btw::config::Overrides& flags,
              const std::optional<std::string>& config_file) {
  btw::config::ServeConfig cfg;
  try {
    std::optional<std::filesystem::path> file;
    if (config_file) file = *config_file;
    cfg = btw::config::resolve(btw::config::process_env(), file, flags);
  } catch (const btw::ValidationError& e) {
    std::cerr << "btw serve: " << e.what() << "\n";
    out_line(std::string("ERROR config ") + e.what());
    return kExitUsage;
  }

  // Block termination signals before any thread starts so sigwait sees them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  btw::SteadyClock clock;
  std::unique_ptr<btw::bridge::BrowserBridge> bridge;
  if (cfg.bridge == "devtools") {
    btw::bridge::DevtoolsOptions opts;
    opts.endpoint = cfg.devtools_endpoint;
    bridge = std::make_unique<btw::bridge::DevtoolsBridge>(opts, clock);
  } else {
    bridge = std::make_unique<btw::bridge::MockBridge>(clock);
  }

  auto store = load_store(cfg.layout_dir);
  const auto page = bridge->navigate(cfg.url);
  std::optional<btw::layout::LayoutDocument> doc;
  if (!cfg.layout.empty()) {
    doc = store.get(cfg.layout);
    if (!doc) {
      throw btw::Error(btw::ErrorCode::kNotFound,
                       "no layout named '" + cfg.layout + "'");
    }
  } else {
    doc = store.match(cfg.url);
    if (!doc) doc = btw::layout::fallback_layout(bridge->query_metrics(page));
  }

  btw::session::SessionOptions options;
  options.policy = cfg.policy;
  options.auto_scroll = cfg.auto_scroll;
  options.frame_format = cfg.frame_format;
  btw::session::Session session(
      *bridge, page, btw::decomposer::resolve_layout(*doc, *bridge, page),
      options);
  std::cerr << "btw serve: layout " << doc->name << " on " << cfg.url << "\n";

  btw::transport::ServerOptions server_opts;
  server_opts.host = cfg.host;
  server_opts.port = cfg.port;
  server_opts.token = cfg.token;
  server_opts.max_fps = cfg.max_fps;
  btw::transport::Server server(session, server_opts, out_line);
  server.start();
  out_line("LISTENING " + std::to_string(server.port()));

  int sig = 0;
  sigwait(&signals, &sig);
  std::cerr << "btw serve: signal " << sig << ", shutting down\n";
  server.stop();
  return kExitOk;
}

int run_replay(const std::string& script_file,
               const std::optional<std::string>& report_file,
               const std::optional<std::string>& config_file,
               const std::string& layout_dir) {
  btw::replay::ReplayConfig rc;
  if (config_file) {
    btw::config::ServeConfig cfg;
    btw::config::apply_file(cfg, *config_file);
    cfg.policy.validate();
    rc.session.policy = cfg.policy;
    rc.session.auto_scroll = cfg.auto_scroll;
    rc.session.frame_format = cfg.frame_format;
  }
  rc.layouts = load_store(layout_dir);
  const auto script = btw::replay::load_script(script_file);
  const auto report = btw::replay::run_script(script, rc);

  const std::string body = report.canonical();
  std::cout << body << "\n";
  if (report_file) {
    std::ofstream out(*report_file, std::ios::binary);
    out << body << "\n";
    if (!out) {
      throw btw::Error(btw::ErrorCode::kInternal,
                       "cannot write " + *report_file);
    }
  }
  std::cerr << report.latency_line() << "\n";
  if (report.latency.count > 0 && report.latency.median_ms >= kLatencyBudgetMs) {
    std::cerr << "warning: median input latency "
              << report.latency.median_ms << " ms exceeds the "
              << kLatencyBudgetMs << " ms budget\n";
  }
  for (const auto& a : report.assertions) {
    if (!a.passed) {
      std::cerr << "FAIL step " << a.step << " (" << to_string(a.kind)
                << ") at " << a.at_ms << " ms: " << a.detail << "\n";
    }
  }
  if (!report.sync.ok) std::cerr << "FAIL sync: " << report.sync.detail << "\n";
  return report.passed() ? kExitOk : kExitAssertion;
}

int run_layout_validate(const std::vector<std::string>& files,
                        const std::string& layout_dir) {
  int failures = 0;
  if (files.empty()) {
    for (const auto& doc : btw::layout::builtin_presets()) {
      btw::layout::validate(doc);
      std::cout << "OK " << doc.name << " (built-in)\n";
    }
    if (!layout_dir.empty()) {
      btw::layout::LayoutStore store;
      try {
        std::cout << "OK " << store.load_directory(layout_dir)
                  << " file(s) in " << layout_dir << "\n";
      } catch (const btw::ValidationError& e) {
        std::cerr << "INVALID " << e.what() << "\n";
        ++failures;
      }
    }
  }
  for (const auto& f : files) {
    try {
      auto doc = btw::layout::load_layout_file(f);
      std::cout << "OK " << doc.name << " (" << f << ")\n";
    } catch (const btw::ValidationError& e) {
      std::cerr << "INVALID " << e.what() << "\n";
      ++failures;
    }
  }
  return failures == 0 ? kExitOk : kExitRuntime;
}

int run_layout_show(const std::string& what, const std::string& layout_dir) {
  std::optional<btw::layout::LayoutDocument> doc;
  if (std::filesystem::is_regular_file(what)) {
    doc = btw::layout::load_layout_file(what);
  } else {
    doc = load_store(layout_dir).get(what);
  }
  if (!doc) {
    std::cerr << "btw layout show: no layout or file '" << what << "'\n";
    return kExitRuntime;
  }
  std::cout << btw::layout::serialize_layout(*doc);
  return kExitOk;
}

int run_layout_list(const std::string& layout_dir) {
  auto store = load_store(layout_dir);
  for (const auto& name : store.names()) {
    auto doc = store.get(name);
    std::cout << name << "\t" << doc->site_pattern << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mirror a web page as independently placeable panels."};
  app.require_subcommand(1);

  btw::config::Overrides flags;
  std::optional<std::string> config_file;
  auto* serve = app.add_subcommand("serve", "Run the panel server");
  serve->add_option("--url", flags.url, "Page to open");
  serve->add_option("--bridge", flags.bridge, "mock or devtools");
  serve->add_option("--devtools-endpoint", flags.devtools_endpoint,
                    "http://host:port or ws://.../devtools/page/<id>");
  serve->add_option("--host", flags.host, "Bind address");
  serve->add_option("--port", flags.port, "TCP port, 0 for any (default 7420)");
  serve->add_option("--layout-dir", flags.layout_dir,
                    "Directory of .btwlayout files");
  serve->add_option("--layout", flags.layout,
                    "Layout name; matched by URL when omitted");
  serve->add_option("--token", flags.token, "Required ?token= value");
  serve->add_option("--max-fps", flags.max_fps, "Capture rate cap (default 15)");
  serve->add_option("--config", config_file, "Config file");

  std::string script_file;
  std::optional<std::string> report_file;
  std::optional<std::string> replay_config;
  std::string replay_layout_dir;
  auto* replay = app.add_subcommand("replay", "Run a .btwscript against the mock");
  replay->add_option("script", script_file, "Script file")->required();
  replay->add_option("--report", report_file, "Also write the report here");
  replay->add_option("--config", replay_config, "Config file (policy etc.)");
  replay->add_option("--layout-dir", replay_layout_dir,
                     "Directory of .btwlayout files");

  std::string layout_dir;
  auto* layout = app.add_subcommand("layout", "Inspect layouts");
  layout->add_option("--layout-dir", layout_dir,
                     "Directory of .btwlayout files");
  layout->require_subcommand(1);
  std::vector<std::string> validate_files;
  auto* validate = layout->add_subcommand(
      "validate", "Validate files (or every built-in and --layout-dir layout)");
  validate->add_option("files", validate_files, "Layout files");
  std::string show_what;
  auto* show = layout->add_subcommand("show", "Print a layout canonically");
  show->add_option("name", show_what, "Layout name or file")->required();
  auto* list = layout->add_subcommand("list", "List known layouts");
  // --layout-dir may follow the leaf subcommand.
  for (auto* sub : {validate, show, list}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*serve) return run_serve(flags, config_file);
    if (*replay) {
      return run_replay(script_file, report_file, replay_config,
                        replay_layout_dir);
    }
    if (*validate) return run_layout_validate(validate_files, layout_dir);
    if (*show) return run_layout_show(show_what, layout_dir);
    if (*list) return run_layout_list(layout_dir);
  } catch (const btw::Error& e) {
    std::cerr << "btw: " << btw::error_code_name(e.code()) << ": " << e.what()
              << "\n";
    if (*serve) out_line(std::string("ERROR ") + e.what());
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "btw: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
