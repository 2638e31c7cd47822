#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "meetflow/error.hpp"
#include "meetflow/structured_text.hpp"

namespace meetflow {

enum class Purpose {
  phase_generation,
  phase_refinement,
  layout_generation,
  focus_tool_generation,
  utterance_classification,
};

std::string_view to_string(Purpose p) noexcept;
Purpose parse_purpose(std::string_view s);  // throws Error(InvalidArgument)

// An earlier model reply followed by the corrective user turn that answered it.
struct CorrectiveTurn {
  std::string assistant_text;
  std::string user_text;

  bool operator==(const CorrectiveTurn&) const = default;
};

inline constexpr int kDefaultMaxAttempts = 3;
inline constexpr int kMaxAttemptsCeiling = 5;

struct PromptRequest {
  std::string system_prompt;
  std::string user_prompt;
  Purpose purpose = Purpose::phase_generation;
  int max_attempts = kDefaultMaxAttempts;
  std::vector<CorrectiveTurn> corrections;
};

void require_valid(const PromptRequest& request);  // throws Error(InvalidArgument)

// Content key used to address fixtures: SHA-256 over purpose, both prompts and
// every prior corrective turn. Lowercase hex.
std::string fixture_key(const PromptRequest& request);

Json request_json(const PromptRequest& request);

// "Your previous response was invalid: <reason>. Respond again following the required format exactly."
std::string corrective_message(std::string_view reason);

struct CompletionResult {
  std::string text;
  int attempt_count = 1;
  std::string provider_id;
  std::int64_t latency_ms = 0;
};

enum class ProviderMode { live, replay, record };

std::string_view to_string(ProviderMode m) noexcept;
ProviderMode parse_provider_mode(std::string_view s);

struct ProviderConfig {
  ProviderMode mode = ProviderMode::replay;
  std::string endpoint_url;
  std::string model_name = "gpt-4";
  std::string api_key_env_var = "OPENAI_API_KEY";
  std::filesystem::path fixture_dir;
  std::optional<double> temperature;
  int transport_retries = 3;
  int timeout_seconds = 60;
};

// Throws Error(ConfigError) naming the failing field or environment variable.
void require_valid(const ProviderConfig& config);

class CompletionProvider {
public:
  virtual ~CompletionProvider() = default;
  virtual CompletionResult complete(const PromptRequest& request) = 0;
  virtual std::string id() const = 0;
};

struct Fixture {
  std::string key;
  Json request;
  std::string response_text;
  std::string provider_id;
  std::string model_name;
  std::optional<double> temperature;
};

// One JSON document per request hash: <root>/<purpose dir>/<key>.json
class FixtureStore {
public:
  explicit FixtureStore(std::filesystem::path root);

  std::optional<Fixture> load(const PromptRequest& request) const;
  std::filesystem::path save(const PromptRequest& request, const Fixture& fixture);
  std::filesystem::path path_for(const PromptRequest& request) const;
  const std::filesystem::path& root() const noexcept { return root_; }

  static std::string_view directory_for(Purpose p) noexcept;

private:
  std::filesystem::path root_;
  mutable std::mutex mutex_;
};

class ReplayProvider final : public CompletionProvider {
public:
  explicit ReplayProvider(std::filesystem::path fixture_dir);

  CompletionResult complete(const PromptRequest& request) override;
  std::string id() const override { return "replay"; }

private:
  FixtureStore store_;
};

// Speaks an OpenAI-style chat-completion endpoint over HTTP(S).
class LiveProvider final : public CompletionProvider {
public:
  explicit LiveProvider(ProviderConfig config);

  CompletionResult complete(const PromptRequest& request) override;
  std::string id() const override { return "live:" + config_.model_name; }
  const ProviderConfig& config() const noexcept { return config_; }

  static Json build_body(const ProviderConfig& config, const PromptRequest& request);

private:
  ProviderConfig config_;
  std::string api_key_;
};

// Forwards to an upstream provider and persists every exchange as a fixture.
class RecordingProvider final : public CompletionProvider {
public:
  RecordingProvider(std::unique_ptr<CompletionProvider> upstream, std::filesystem::path fixture_dir,
                    std::string model_name = {}, std::optional<double> temperature = std::nullopt);

  CompletionResult complete(const PromptRequest& request) override;
  std::string id() const override { return upstream_->id(); }

private:
  std::unique_ptr<CompletionProvider> upstream_;
  FixtureStore store_;
  std::string model_name_;
  std::optional<double> temperature_;
};

// Hands out prepared replies in order, one queue per purpose. Used to author
// fixture sets offline (wrapped in a RecordingProvider) and in tests.
class CannedProvider final : public CompletionProvider {
public:
  CannedProvider() = default;
  explicit CannedProvider(std::map<Purpose, std::deque<std::string>> replies);

  // {"phase_generation": ["...", ...], ...}
  static std::unique_ptr<CannedProvider> from_json(const Json& doc);

  void push(Purpose purpose, std::string reply);
  CompletionResult complete(const PromptRequest& request) override;
  std::string id() const override { return "canned"; }
  std::size_t remaining(Purpose purpose) const;

private:
  mutable std::mutex mutex_;
  std::map<Purpose, std::deque<std::string>> replies_;
};

std::unique_ptr<CompletionProvider> make_provider(const ProviderConfig& config);

template <class T>
struct StructuredResult {
  T value;
  int attempt_count = 1;
  std::string raw_text;
};

class Gateway {
public:
  explicit Gateway(std::shared_ptr<CompletionProvider> provider);

  CompletionResult complete(const PromptRequest& request);

  // Retries with a corrective turn on each ParseFailure, up to max_attempts.
  template <class T>
  StructuredResult<T> complete_structured(PromptRequest request,
                                          const std::function<T(std::string_view)>& parser);

  const CompletionProvider& provider() const noexcept { return *provider_; }

private:
  std::shared_ptr<CompletionProvider> provider_;
};

template <class T>
StructuredResult<T> Gateway::complete_structured(PromptRequest request,
                                                 const std::function<T(std::string_view)>& parser) {
  require_valid(request);
  std::vector<std::string> reasons;
  bool last_semantic = false;
  for (int attempt = 1; attempt <= request.max_attempts; ++attempt) {
    CompletionResult reply = complete(request);
    try {
      return StructuredResult<T>{parser(reply.text), attempt, std::move(reply.text)};
    } catch (const ParseFailure& failure) {
      reasons.emplace_back(failure.what());
      last_semantic = failure.semantic();
      request.corrections.push_back({std::move(reply.text), corrective_message(failure.what())});
    }
  }
  throw StructuredOutputExhausted(std::move(reasons), last_semantic);
}

}  // namespace meetflow
