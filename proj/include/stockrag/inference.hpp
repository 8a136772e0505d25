#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "stockrag/chat.hpp"
#include "stockrag/clock.hpp"
#include "stockrag/labeling.hpp"
#include "stockrag/prompting.hpp"
#include "stockrag/resilience.hpp"

namespace stockrag::inference {

inline constexpr std::string_view kApiKeyEnv = "STOCKRAG_API_KEY";

enum class Provider { remote_chat, scripted_mock };
std::string to_string(Provider p);
Provider parse_provider(std::string_view s);

struct ModelConfig {
  Provider provider = Provider::scripted_mock;
  std::string endpoint;
  std::string model_name;
  double temperature = 0.7;
  std::int64_t context_limit = 8192;
  int max_retries = 3;
  int requests_per_minute = 60;
  int max_in_flight = 4;
  std::filesystem::path script_path;
  std::chrono::seconds timeout{120};

  /// Throws Error when an invariant (positive limits, finite temperature)
  /// does not hold.
  void validate() const;
};

enum class Verdict { up, down, invalid };
std::string to_string(Verdict v);

/// Bracketed [UP]/[DOWN] (case-insensitive, first occurrence wins), then
/// whole-word UP/DOWN with the same rule, else invalid.
Verdict parse_verdict(std::string_view raw);

/// File-driven client: responses keyed by "bundle_id#run" or "bundle_id".
class ScriptedMockClient final : public ChatClient {
 public:
  explicit ScriptedMockClient(std::map<std::string, std::string> script);
  /// Reads a JSON object of key -> response text.
  static std::map<std::string, std::string> load_script(const std::filesystem::path& path);

  std::string complete(const ChatRequest& request) override;
  std::size_t invocations() const noexcept { return invocations_.load(); }

 private:
  std::map<std::string, std::string> script_;
  std::atomic<std::size_t> invocations_{0};
};

/// Chat-completions wire protocol over HTTP(S).
class RemoteChatClient final : public ChatClient {
 public:
  RemoteChatClient(std::string endpoint, std::string model_name, double temperature, std::string api_key,
                   std::chrono::seconds timeout);
  std::string complete(const ChatRequest& request) override;

  static nlohmann::json request_body(std::string_view model, std::string_view prompt, double temperature);
  /// choices[0].message.content; TransportError when absent.
  static std::string extract_content(std::string_view body);

 private:
  std::string endpoint_;
  std::string model_name_;
  double temperature_;
  std::string api_key_;
  std::chrono::seconds timeout_;
};

/// Adds rate limiting (every attempt counts as one send) and retry with
/// exponential backoff around another client.
class ResilientClient final : public ChatClient {
 public:
  ResilientClient(ChatClient& inner, RetryPolicy policy, RateLimiter* limiter, Clock& clock, std::uint64_t seed);
  std::string complete(const ChatRequest& request) override;

 private:
  ChatClient& inner_;
  RetryPolicy policy_;
  RateLimiter* limiter_;
  Clock& clock_;
  std::uint64_t seed_;
};

/// Refuses prompts whose estimate exceeds the context limit before sending.
std::string complete(const ModelConfig& config, ChatClient& client, const ChatRequest& request);

struct PredictionRecord {
  std::string bundle_id;
  int run_index = 0;
  std::string raw_response;
  Verdict verdict = Verdict::down;
  /// Set when the response stayed unparseable after one re-ask; such
  /// records carry verdict DOWN.
  bool invalid = false;
  labeling::Movement label = labeling::Movement::down;
  std::int64_t latency_ms = 0;
  std::string model_name;
  int shots = 0;
  int horizon_months = 3;
};

nlohmann::json to_json(const PredictionRecord& r);
PredictionRecord record_from_json(const nlohmann::json& j);

struct PredictionFailure {
  std::string bundle_id;
  int run_index = 0;
  std::string kind;  // "transport" or "budget"
  std::string message;
};

struct BatchResult {
  std::vector<PredictionRecord> records;
  std::vector<PredictionFailure> failures;
  std::size_t transport_failures() const;
};

/// Runs every labeled bundle `runs` times. Output order is (run_index,
/// bundle order). Per-prompt failures are collected, never thrown. The
/// result depends only on the bundles and the client's responses; retry
/// jitter is seeded inside the client stack.
BatchResult predict_batch(const ModelConfig& config, ChatClient& client, std::span<const prompting::PromptBundle> bundles,
                          int runs, Clock& clock);

/// Builds the client stack for a model: scripted mock, or remote wrapped
/// with rate limiting and retries. The API key comes from STOCKRAG_API_KEY.
class ModelSession {
 public:
  ModelSession(const ModelConfig& config, Clock& clock, std::uint64_t seed);
  ChatClient& client() { return *top_; }

 private:
  std::unique_ptr<ChatClient> base_;
  std::unique_ptr<RateLimiter> limiter_;
  std::unique_ptr<ChatClient> top_owned_;
  ChatClient* top_ = nullptr;
};

}  // namespace stockrag::inference
