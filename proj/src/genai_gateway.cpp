#include "meetflow/genai_gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace meetflow {

std::string_view to_string(Purpose p) noexcept {
  switch (p) {
    case Purpose::phase_generation: return "phase_generation";
    case Purpose::phase_refinement: return "phase_refinement";
    case Purpose::layout_generation: return "layout_generation";
    case Purpose::focus_tool_generation: return "focus_tool_generation";
    case Purpose::utterance_classification: return "utterance_classification";
  }
  return "unknown";
}

Purpose parse_purpose(std::string_view s) {
  for (auto p : {Purpose::phase_generation, Purpose::phase_refinement, Purpose::layout_generation,
                 Purpose::focus_tool_generation, Purpose::utterance_classification}) {
    if (to_string(p) == s) return p;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown purpose tag '" + std::string(s) + "'");
}

std::string_view to_string(ProviderMode m) noexcept {
  switch (m) {
    case ProviderMode::live: return "live";
    case ProviderMode::replay: return "replay";
    case ProviderMode::record: return "record";
  }
  return "unknown";
}

ProviderMode parse_provider_mode(std::string_view s) {
  if (s == "live") return ProviderMode::live;
  if (s == "replay") return ProviderMode::replay;
  if (s == "record") return ProviderMode::record;
  throw Error(ErrorCode::ConfigError, "unknown provider mode '" + std::string(s) + "'");
}

void require_valid(const PromptRequest& request) {
  if (request.system_prompt.empty() || request.user_prompt.empty()) {
    throw Error(ErrorCode::InvalidArgument, "prompt request needs both a system and a user prompt");
  }
  if (request.max_attempts < 1 || request.max_attempts > kMaxAttemptsCeiling) {
    throw Error(ErrorCode::InvalidArgument,
                "max_attempts must be in [1, " + std::to_string(kMaxAttemptsCeiling) + "]");
  }
}

Json request_json(const PromptRequest& request) {
  Json corrections = Json::array();
  for (const auto& turn : request.corrections) {
    corrections.push_back({{"assistant", turn.assistant_text}, {"user", turn.user_text}});
  }
  return {{"purpose", to_string(request.purpose)},
          {"system_prompt", request.system_prompt},
          {"user_prompt", request.user_prompt},
          {"corrections", std::move(corrections)}};
}

std::string fixture_key(const PromptRequest& request) {
  return sha256_hex(canonical_dump(request_json(request)));
}

std::string corrective_message(std::string_view reason) {
  return "Your previous response was invalid: " + std::string(reason) +
         ". Respond again following the required format exactly.";
}

void require_valid(const ProviderConfig& config) {
  if (config.mode == ProviderMode::replay || config.mode == ProviderMode::record) {
    if (config.fixture_dir.empty()) throw Error(ErrorCode::ConfigError, "fixture_dir is required");
  }
  if (config.mode == ProviderMode::replay && !std::filesystem::is_directory(config.fixture_dir)) {
    throw Error(ErrorCode::ConfigError, "fixture_dir " + config.fixture_dir.string() + " does not exist");
  }
  if (config.mode == ProviderMode::live || config.mode == ProviderMode::record) {
    if (config.endpoint_url.empty()) throw Error(ErrorCode::ConfigError, "endpoint_url is required");
    const char* key = std::getenv(config.api_key_env_var.c_str());
    if (key == nullptr || *key == '\0') {
      throw Error(ErrorCode::ConfigError, "environment variable " + config.api_key_env_var + " is not set");
    }
  }
}

// ---------------------------------------------------------------------------
// Fixtures

FixtureStore::FixtureStore(std::filesystem::path root) : root_(std::move(root)) {}

std::string_view FixtureStore::directory_for(Purpose p) noexcept {
  switch (p) {
    case Purpose::phase_generation:
    case Purpose::phase_refinement: return "phases";
    case Purpose::layout_generation: return "layouts";
    case Purpose::focus_tool_generation: return "focus_tool";
    case Purpose::utterance_classification: return "classification";
  }
  return "misc";
}

std::filesystem::path FixtureStore::path_for(const PromptRequest& request) const {
  return root_ / directory_for(request.purpose) / (fixture_key(request) + ".json");
}

std::optional<Fixture> FixtureStore::load(const PromptRequest& request) const {
  const std::string key = fixture_key(request);
  std::lock_guard lock(mutex_);
  for (const auto& candidate : {root_ / directory_for(request.purpose) / (key + ".json"), root_ / (key + ".json")}) {
    std::ifstream in(candidate);
    if (!in) continue;
    const Json doc = Json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded() || !doc.contains("response")) {
      throw Error(ErrorCode::FixtureMissing, "fixture " + candidate.string() + " is unreadable");
    }
    Fixture f;
    f.key = doc.value("key", key);
    f.request = doc.value("request", Json::object());
    const Json& response = doc.at("response");
    f.response_text = response.at("text").get<std::string>();
    f.provider_id = response.value("provider_id", "");
    f.model_name = response.value("model", "");
    if (response.contains("temperature") && response.at("temperature").is_number()) {
      f.temperature = response.at("temperature").get<double>();
    }
    return f;
  }
  return std::nullopt;
}

std::filesystem::path FixtureStore::save(const PromptRequest& request, const Fixture& fixture) {
  const auto path = path_for(request);
  Json response = {{"text", fixture.response_text}, {"provider_id", fixture.provider_id}, {"model", fixture.model_name}};
  response["temperature"] = fixture.temperature ? Json(*fixture.temperature) : Json(nullptr);
  const Json doc = {{"key", fixture_key(request)}, {"request", request_json(request)}, {"response", std::move(response)}};
  std::lock_guard lock(mutex_);
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << doc.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::ProviderUnavailable, "could not write fixture " + path.string());
  return path;
}

ReplayProvider::ReplayProvider(std::filesystem::path fixture_dir) : store_(std::move(fixture_dir)) {}

CompletionResult ReplayProvider::complete(const PromptRequest& request) {
  auto fixture = store_.load(request);
  if (!fixture) {
    throw Error(ErrorCode::FixtureMissing, "no fixture for " + std::string(to_string(request.purpose)) +
                                               " request hash " + fixture_key(request));
  }
  return CompletionResult{std::move(fixture->response_text), 1, "replay", 0};
}

RecordingProvider::RecordingProvider(std::unique_ptr<CompletionProvider> upstream, std::filesystem::path fixture_dir,
                                     std::string model_name, std::optional<double> temperature)
    : upstream_(std::move(upstream)),
      store_(std::move(fixture_dir)),
      model_name_(std::move(model_name)),
      temperature_(temperature) {}

CompletionResult RecordingProvider::complete(const PromptRequest& request) {
  CompletionResult result = upstream_->complete(request);
  store_.save(request, Fixture{fixture_key(request), request_json(request), result.text, result.provider_id, model_name_,
                               temperature_});
  return result;
}

CannedProvider::CannedProvider(std::map<Purpose, std::deque<std::string>> replies) : replies_(std::move(replies)) {}

std::unique_ptr<CannedProvider> CannedProvider::from_json(const Json& doc) {
  auto out = std::make_unique<CannedProvider>();
  for (const auto& [purpose, list] : doc.items()) {
    for (const auto& reply : list) {
      out->push(parse_purpose(purpose), reply.is_string() ? reply.get<std::string>() : reply.dump());
    }
  }
  return out;
}

void CannedProvider::push(Purpose purpose, std::string reply) {
  std::lock_guard lock(mutex_);
  replies_[purpose].push_back(std::move(reply));
}

std::size_t CannedProvider::remaining(Purpose purpose) const {
  std::lock_guard lock(mutex_);
  const auto it = replies_.find(purpose);
  return it == replies_.end() ? 0 : it->second.size();
}

CompletionResult CannedProvider::complete(const PromptRequest& request) {
  std::lock_guard lock(mutex_);
  auto& queue = replies_[request.purpose];
  if (queue.empty()) {
    throw Error(ErrorCode::ProviderUnavailable,
                "canned provider has no reply left for " + std::string(to_string(request.purpose)));
  }
  std::string text = std::move(queue.front());
  queue.pop_front();
  return CompletionResult{std::move(text), 1, "canned", 0};
}

// ---------------------------------------------------------------------------
// Live transport

namespace {

struct EndpointParts {
  std::string scheme_host_port;
  std::string path;
};

EndpointParts split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::ConfigError, "endpoint_url '" + url + "' has no scheme");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

bool retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

LiveProvider::LiveProvider(ProviderConfig config) : config_(std::move(config)) {
  const char* key = std::getenv(config_.api_key_env_var.c_str());
  if (key == nullptr || *key == '\0') {
    throw Error(ErrorCode::ConfigError, "environment variable " + config_.api_key_env_var + " is not set");
  }
  api_key_ = key;
  split_endpoint(config_.endpoint_url);
}

Json LiveProvider::build_body(const ProviderConfig& config, const PromptRequest& request) {
  Json messages = Json::array();
  messages.push_back({{"role", "system"}, {"content", request.system_prompt}});
  messages.push_back({{"role", "user"}, {"content", request.user_prompt}});
  for (const auto& turn : request.corrections) {
    messages.push_back({{"role", "assistant"}, {"content", turn.assistant_text}});
    messages.push_back({{"role", "user"}, {"content", turn.user_text}});
  }
  Json body = {{"model", config.model_name}, {"messages", std::move(messages)}};
  if (config.temperature) body["temperature"] = *config.temperature;
  return body;
}

CompletionResult LiveProvider::complete(const PromptRequest& request) {
  const auto [base, path] = split_endpoint(config_.endpoint_url);
  httplib::Client client(base);
  client.set_connection_timeout(config_.timeout_seconds, 0);
  client.set_read_timeout(config_.timeout_seconds, 0);
  client.set_bearer_token_auth(api_key_);
  const std::string body = build_body(config_, request).dump();

  std::string last_error = "no attempt made";
  const auto started = std::chrono::steady_clock::now();
  for (int attempt = 0; attempt < std::max(1, config_.transport_retries); ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(200 << attempt));
    auto response = client.Post(path, body, "application/json");
    if (!response) {
      last_error = "transport error: " + httplib::to_string(response.error());
      continue;
    }
    if (response->status == 401 || response->status == 403) {
      throw Error(ErrorCode::ProviderUnavailable,
                  "provider rejected credentials (HTTP " + std::to_string(response->status) + ")");
    }
    if (retryable_status(response->status)) {
      last_error = "HTTP " + std::to_string(response->status);
      continue;
    }
    if (response->status != 200) {
      throw Error(ErrorCode::ProviderUnavailable, "provider returned HTTP " + std::to_string(response->status));
    }
    const Json doc = Json::parse(response->body, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded()) throw Error(ErrorCode::ProviderUnavailable, "provider returned a non-JSON body");
    try {
      std::string text = doc.at("choices").at(0).at("message").at("content").get<std::string>();
      const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
      return CompletionResult{std::move(text), 1, id(), elapsed.count()};
    } catch (const Json::exception&) {
      throw Error(ErrorCode::ProviderUnavailable, "provider response has no choices[0].message.content");
    }
  }
  throw Error(ErrorCode::ProviderUnavailable, "provider unreachable at " + config_.endpoint_url + ": " + last_error);
}

std::unique_ptr<CompletionProvider> make_provider(const ProviderConfig& config) {
  require_valid(config);
  switch (config.mode) {
    case ProviderMode::replay: return std::make_unique<ReplayProvider>(config.fixture_dir);
    case ProviderMode::live: return std::make_unique<LiveProvider>(config);
    case ProviderMode::record:
      return std::make_unique<RecordingProvider>(std::make_unique<LiveProvider>(config), config.fixture_dir,
                                                 config.model_name, config.temperature);
  }
  throw Error(ErrorCode::ConfigError, "unsupported provider mode");
}

Gateway::Gateway(std::shared_ptr<CompletionProvider> provider) : provider_(std::move(provider)) {
  if (!provider_) throw Error(ErrorCode::ConfigError, "gateway needs a provider");
}

CompletionResult Gateway::complete(const PromptRequest& request) {
  require_valid(request);
  CompletionResult result = provider_->complete(request);
  result.attempt_count = 1;
  return result;
}

}  // namespace meetflow
