#include "stockrag/inference.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <fmt/format.h>

#include "stockrag/http.hpp"
#include "stockrag/kernels.hpp"
#include "stockrag/text.hpp"

namespace stockrag::inference {

using nlohmann::json;

std::string to_string(Provider p) { return p == Provider::remote_chat ? "remote_chat" : "scripted_mock"; }

Provider parse_provider(std::string_view s) {
  if (s == "remote_chat") return Provider::remote_chat;
  if (s == "scripted_mock") return Provider::scripted_mock;
  throw ParseError(fmt::format("unknown model provider '{}'", s));
}

void ModelConfig::validate() const {
  if (context_limit <= 0) throw Error(fmt::format("model {}: context_limit must be positive", model_name));
  if (!std::isfinite(temperature) || temperature < 0.0)
    throw Error(fmt::format("model {}: temperature must be finite and non-negative", model_name));
  if (requests_per_minute <= 0) throw Error(fmt::format("model {}: requests_per_minute must be positive", model_name));
  if (max_retries < 0) throw Error(fmt::format("model {}: max_retries must be non-negative", model_name));
  if (max_in_flight <= 0) throw Error(fmt::format("model {}: max_in_flight must be positive", model_name));
  if (provider == Provider::remote_chat && endpoint.empty())
    throw Error(fmt::format("model {}: remote provider needs an endpoint", model_name));
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::up: return "UP";
    case Verdict::down: return "DOWN";
    case Verdict::invalid: return "INVALID";
  }
  return "INVALID";
}

Verdict parse_verdict(std::string_view raw) {
  const std::string lower = text::to_lower(raw);
  auto first_of = [&](std::size_t a, std::size_t b) -> Verdict {
    if (a == std::string::npos && b == std::string::npos) return Verdict::invalid;
    return a < b ? Verdict::up : Verdict::down;
  };
  Verdict bracketed = first_of(lower.find("[up]"), lower.find("[down]"));
  if (bracketed != Verdict::invalid) return bracketed;
  auto first_word = [&](std::string_view word) {
    auto hits = text::find_whole_words(lower, word);
    return hits.empty() ? std::string::npos : hits.front().pos;
  };
  return first_of(first_word("up"), first_word("down"));
}

ScriptedMockClient::ScriptedMockClient(std::map<std::string, std::string> script) : script_(std::move(script)) {}

std::map<std::string, std::string> ScriptedMockClient::load_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot read mock script: {}", path.string()));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
  if (!doc.is_object()) throw ParseError(fmt::format("{}: mock script must be a JSON object", path.string()));
  std::map<std::string, std::string> script;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (!it.value().is_string()) throw ParseError(fmt::format("{}: response for '{}' is not a string", path.string(), it.key()));
    script.emplace(it.key(), it.value().get<std::string>());
  }
  return script;
}

std::string ScriptedMockClient::complete(const ChatRequest& request) {
  ++invocations_;
  if (auto it = script_.find(fmt::format("{}#{}", request.bundle_id, request.run_index)); it != script_.end())
    return it->second;
  if (auto it = script_.find(request.bundle_id); it != script_.end()) return it->second;
  throw TransportError(fmt::format("no scripted response for {} (run {})", request.bundle_id, request.run_index), false);
}

RemoteChatClient::RemoteChatClient(std::string endpoint, std::string model_name, double temperature,
                                   std::string api_key, std::chrono::seconds timeout)
    : endpoint_(std::move(endpoint)),
      model_name_(std::move(model_name)),
      temperature_(temperature),
      api_key_(std::move(api_key)),
      timeout_(timeout) {}

json RemoteChatClient::request_body(std::string_view model, std::string_view prompt, double temperature) {
  return {{"model", model},
          {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
          {"temperature", temperature}};
}

std::string RemoteChatClient::extract_content(std::string_view body) {
  try {
    auto doc = json::parse(body);
    return doc.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw TransportError(fmt::format("malformed chat completion response: {}", e.what()), false);
  }
}

std::string RemoteChatClient::complete(const ChatRequest& request) {
  auto body = request_body(model_name_, request.prompt, temperature_).dump();
  auto response = http::post_json(endpoint_, body, api_key_, timeout_);
  if (response.status != 200) {
    throw TransportError(fmt::format("chat endpoint returned HTTP {}: {}", response.status, response.body.substr(0, 200)),
                         http::is_retryable_status(response.status));
  }
  return extract_content(response.body);
}

ResilientClient::ResilientClient(ChatClient& inner, RetryPolicy policy, RateLimiter* limiter, Clock& clock,
                                 std::uint64_t seed)
    : inner_(inner), policy_(policy), limiter_(limiter), clock_(clock), seed_(seed) {}

std::string ResilientClient::complete(const ChatRequest& request) {
  std::uint64_t jitter_seed = splitmix64(seed_ ^ kernels::fnv1a64(request.bundle_id) ^ static_cast<std::uint64_t>(request.run_index));
  return with_retries(policy_, clock_, jitter_seed, [&] {
    if (limiter_) limiter_->acquire();
    return inner_.complete(request);
  });
}

std::string complete(const ModelConfig& config, ChatClient& client, const ChatRequest& request) {
  auto estimate = prompting::estimate_tokens(request.prompt);
  if (estimate > config.context_limit) throw BudgetExceededError(config.context_limit, estimate);
  return client.complete(request);
}

json to_json(const PredictionRecord& r) {
  return {{"bundle_id", r.bundle_id},
          {"run_index", r.run_index},
          {"model_name", r.model_name},
          {"shots", r.shots},
          {"horizon", r.horizon_months},
          {"label", r.label == labeling::Movement::up ? 1 : 0},
          {"verdict", to_string(r.verdict)},
          {"invalid", r.invalid},
          {"raw_response", r.raw_response},
          {"latency_ms", r.latency_ms}};
}

PredictionRecord record_from_json(const json& j) {
  try {
    PredictionRecord r;
    r.bundle_id = j.at("bundle_id").get<std::string>();
    r.run_index = j.at("run_index").get<int>();
    r.model_name = j.at("model_name").get<std::string>();
    r.shots = j.at("shots").get<int>();
    r.horizon_months = j.at("horizon").get<int>();
    r.label = j.at("label").get<int>() == 1 ? labeling::Movement::up : labeling::Movement::down;
    auto v = j.at("verdict").get<std::string>();
    r.verdict = v == "UP" ? Verdict::up : v == "DOWN" ? Verdict::down : Verdict::invalid;
    r.invalid = j.value("invalid", false);
    r.raw_response = j.value("raw_response", "");
    r.latency_ms = j.value("latency_ms", std::int64_t{0});
    return r;
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("bad prediction record: {}", e.what()));
  }
}

std::size_t BatchResult::transport_failures() const {
  std::size_t n = 0;
  for (const auto& f : failures) n += f.kind == "transport";
  return n;
}

BatchResult predict_batch(const ModelConfig& config, ChatClient& client, std::span<const prompting::PromptBundle> bundles,
                          int runs, Clock& clock) {
  if (runs <= 0) throw Error("runs must be positive");
  for (const auto& b : bundles)
    if (!b.label) throw Error(fmt::format("bundle {} is unlabeled", b.id));

  // Assemble once per bundle; budget violations are refused without sending.
  std::vector<std::optional<std::string>> finals(bundles.size());
  std::vector<std::string> refusals(bundles.size());
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    try {
      finals[i] = prompting::assemble_final(bundles[i], bundles[i].exemplars, config.context_limit);
    } catch (const BudgetExceededError& e) {
      refusals[i] = e.what();
    }
  }

  struct Slot {
    std::optional<PredictionRecord> record;
    std::optional<PredictionFailure> failure;
  };
  const std::size_t total = bundles.size() * static_cast<std::size_t>(runs);
  std::vector<Slot> slots(total);

  auto work = [&](std::size_t task) {
    const int run = static_cast<int>(task / bundles.size());
    const auto& bundle = bundles[task % bundles.size()];
    const auto& final_text = finals[task % bundles.size()];
    if (!final_text) {
      slots[task].failure = PredictionFailure{bundle.id, run, "budget", refusals[task % bundles.size()]};
      return;
    }
    ChatRequest request{bundle.id, run, *final_text};
    auto started = clock.now();
    try {
      std::string raw = complete(config, client, request);
      Verdict verdict = parse_verdict(raw);
      bool invalid = false;
      if (verdict == Verdict::invalid) {
        try {
          std::string again = complete(config, client, request);
          Verdict second = parse_verdict(again);
          if (second != Verdict::invalid) {
            raw = std::move(again);
            verdict = second;
          }
        } catch (const TransportError&) {
        }
        if (verdict == Verdict::invalid) {
          verdict = Verdict::down;
          invalid = true;
        }
      }
      PredictionRecord r;
      r.bundle_id = bundle.id;
      r.run_index = run;
      r.raw_response = std::move(raw);
      r.verdict = verdict;
      r.invalid = invalid;
      r.label = bundle.label->value;
      r.latency_ms = (clock.now() - started).count();
      r.model_name = config.model_name;
      r.shots = bundle.shots;
      r.horizon_months = bundle.horizon.months();
      slots[task].record = std::move(r);
    } catch (const TransportError& e) {
      slots[task].failure = PredictionFailure{bundle.id, run, "transport", e.what()};
    } catch (const BudgetExceededError& e) {
      slots[task].failure = PredictionFailure{bundle.id, run, "budget", e.what()};
    }
  };

  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, config.max_in_flight)), total);
  if (workers <= 1) {
    for (std::size_t t = 0; t < total; ++t) work(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < total; t = next++) work(t);
      });
  }

  BatchResult out;
  for (auto& s : slots) {
    if (s.record) out.records.push_back(std::move(*s.record));
    if (s.failure) out.failures.push_back(std::move(*s.failure));
  }
  return out;
}

ModelSession::ModelSession(const ModelConfig& config, Clock& clock, std::uint64_t seed) {
  config.validate();
  if (config.provider == Provider::scripted_mock) {
    base_ = std::make_unique<ScriptedMockClient>(ScriptedMockClient::load_script(config.script_path));
    top_ = base_.get();
    return;
  }
  const char* key = std::getenv(std::string(kApiKeyEnv).c_str());
  base_ = std::make_unique<RemoteChatClient>(config.endpoint, config.model_name, config.temperature,
                                             key ? std::string(key) : std::string(), config.timeout);
  limiter_ = std::make_unique<RateLimiter>(config.requests_per_minute, clock);
  RetryPolicy policy;
  policy.max_retries = config.max_retries;
  top_owned_ = std::make_unique<ResilientClient>(*base_, policy, limiter_.get(), clock, seed);
  top_ = top_owned_.get();
}

}  // namespace stockrag::inference
