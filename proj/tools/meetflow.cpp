#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "meetflow/scenario.hpp"
#include "meetflow/ws_server.hpp"

using namespace meetflow;
namespace fs = std::filesystem;

namespace {

struct ProviderFlags {
  std::string mode = "replay";
  std::string fixtures;
  std::string canned;
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4";
  std::string api_key_env = "OPENAI_API_KEY";
  std::optional<double> temperature;
};

void add_provider_flags(CLI::App* cmd, ProviderFlags& f, bool with_mode) {
  if (with_mode) {
    cmd->add_option("--mode", f.mode, "replay, live or record")
        ->check(CLI::IsMember({"replay", "live", "record"}))
        ->capture_default_str();
  }
  cmd->add_option("--fixtures", f.fixtures, "fixture directory (default: the scenario's fixture_dir)");
  cmd->add_option("--canned", f.canned, "record from a canned reply file instead of the live endpoint");
  cmd->add_option("--endpoint", f.endpoint, "chat-completions endpoint for live and record modes")->capture_default_str();
  cmd->add_option("--model", f.model, "model name")->capture_default_str();
  cmd->add_option("--api-key-env", f.api_key_env, "environment variable holding the API key")->capture_default_str();
  cmd->add_option("--temperature", f.temperature, "sampling temperature");
}

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  Json doc = Json::parse(buffer.str(), nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) throw Error(ErrorCode::InvalidArgument, path.string() + " is not valid JSON");
  return doc;
}

std::shared_ptr<CompletionProvider> build_provider(const ProviderFlags& f, const fs::path& fixture_dir) {
  ProviderConfig config;
  config.mode = parse_provider_mode(f.mode);
  config.fixture_dir = fixture_dir;
  config.endpoint_url = f.endpoint;
  config.model_name = f.model;
  config.api_key_env_var = f.api_key_env;
  config.temperature = f.temperature;
  if (config.mode == ProviderMode::record && !f.canned.empty()) {
    return std::make_shared<RecordingProvider>(CannedProvider::from_json(read_json(f.canned)), fixture_dir, "canned",
                                               f.temperature);
  }
  require_valid(config);
  return make_provider(config);
}

int run_scenario_command(const std::string& path, const ProviderFlags& flags, const std::string& out_dir) {
  const ScenarioScript script = load_scenario(path);
  require_valid(script);
  const fs::path fixtures = flags.fixtures.empty() ? script.fixture_dir : fs::path(flags.fixtures);
  auto gateway = std::make_shared<Gateway>(build_provider(flags, fixtures));

  ScenarioRunOptions options;
  if (!out_dir.empty()) options.data_dir = fs::path(out_dir);
  const ScenarioOutcome outcome = run_scenario(script, gateway, options);
  const std::string timeline = render_timeline(outcome.report);
  std::cout << timeline;
  if (options.data_dir && !outcome.report.session_id.empty()) {
    const fs::path timeline_path = *options.data_dir / (outcome.report.session_id + ".timeline.txt");
    std::ofstream(timeline_path, std::ios::binary) << timeline;
    std::cerr << "event log: " << session_log_path(*options.data_dir, outcome.report.session_id).string() << "\n"
              << "timeline: " << timeline_path.string() << "\n";
  }
  if (outcome.first_error) {
    for (const auto& e : outcome.report.errors) std::cerr << "error: " << e << "\n";
    return exit_code_for(*outcome.first_error);
  }
  return 0;
}

int replay_log_command(const std::string& path, bool timeline_only) {
  const auto log = read_event_log(path);
  const SessionState state = replay(log);
  if (timeline_only) {
    const Timestamp start = log.empty() ? Timestamp{} : log.front().at;
    std::cout << render_timeline(build_timeline(log, start));
  } else {
    std::cout << state_json(state).dump(2) << "\n";
  }
  return 0;
}

int serve_command(const std::string& config_path) {
  const ServerConfig config = load_server_config(config_path);
  require_valid(config.session);
  require_valid(config.provider);
  auto gateway = std::make_shared<Gateway>(make_provider(config.provider));
  SystemClock clock;
  WsServer server(config, gateway, clock);
  const unsigned short port = server.start();
  std::cout << "meetflow listening on ws://" << config.host << ":" << port << " (provider "
            << to_string(config.provider.mode) << ", logs in " << (config.data_dir / "sessions").string() << ")"
            << std::endl;
  server.wait();
  server.stop();
  std::cout << "meetflow stopped" << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"meetflow: meeting phase planning and tracking service"};
  app.require_subcommand(1);

  std::string config_path;
  auto* serve = app.add_subcommand("serve", "run the websocket session server");
  serve->add_option("--config", config_path, "server config file")->required()->check(CLI::ExistingFile);

  auto* scenario = app.add_subcommand("scenario", "scripted sessions");
  scenario->require_subcommand(1);
  auto* scenario_run = scenario->add_subcommand("run", "drive a scenario end to end on a virtual clock");
  std::string scenario_path;
  std::string out_dir;
  ProviderFlags run_flags;
  scenario_run->add_option("path", scenario_path, "scenario file")->required()->check(CLI::ExistingFile);
  scenario_run->add_option("--out", out_dir, "directory for the event log and timeline");
  add_provider_flags(scenario_run, run_flags, true);

  auto* fixtures = app.add_subcommand("fixtures", "fixture management");
  fixtures->require_subcommand(1);
  auto* record = fixtures->add_subcommand("record", "run a scenario and store every model reply as a fixture");
  std::string record_path;
  ProviderFlags record_flags;
  record_flags.mode = "record";
  record->add_option("path", record_path, "scenario file")->required()->check(CLI::ExistingFile);
  add_provider_flags(record, record_flags, false);

  auto* log = app.add_subcommand("log", "event log tools");
  log->require_subcommand(1);
  auto* log_replay = log->add_subcommand("replay", "fold an event log and print the resulting state");
  std::string log_path;
  bool timeline_only = false;
  log_replay->add_option("path", log_path, "session .log file")->required()->check(CLI::ExistingFile);
  log_replay->add_flag("--timeline", timeline_only, "print the timeline instead of the state");

  CLI11_PARSE(app, argc, argv);

  try {
    if (serve->parsed()) return serve_command(config_path);
    if (scenario_run->parsed()) return run_scenario_command(scenario_path, run_flags, out_dir);
    if (record->parsed()) return run_scenario_command(record_path, record_flags, {});
    if (log_replay->parsed()) return replay_log_command(log_path, timeline_only);
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 3;
}
