#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "glean/cost.hpp"

namespace glean {

struct GenerationParams {
  double temperature = 0.0;
  std::int64_t max_output_tokens = 256;
  std::optional<std::int64_t> seed;
};

// A fully materialized call. Canonical serialization is total: every field
// ordered, temperature rendered at fixed precision, so equal requests have
// equal digests on any platform.
struct ProviderRequest {
  std::string provider_id;
  std::string model_id;
  std::string system_prompt;
  std::string user_prompt;  // non-empty
  std::string schema_digest;
  GenerationParams params;

  // Derived from the schema whose digest is above; carried for providers
  // that embed a schema description in the wire request. Not part of the
  // canonical serialization (the digest already pins it).
  nlohmann::json schema_description;

  nlohmann::json to_canonical_json() const;
  std::string canonical() const;
  std::string digest() const;  // sha256 of canonical(); the cache key
};

struct ProviderResponse {
  std::string body;  // the structured output text
  TokenUsage usage;
  std::chrono::milliseconds latency{0};
  int attempts = 1;
  bool from_cache = false;
};

// HTTP 429, 5xx and transport timeouts retry; other 4xx abort immediately.
enum class FailureClass {
  rate_limit,
  server_error,
  transport,
  timeout,
  auth,
  invalid_request,
};

bool is_retryable(FailureClass c);
const char* failure_class_name(FailureClass c);
FailureClass parse_failure_class(const std::string& name);

// One failed provider attempt. The gateway classifies these into retry /
// abort; callers outside the gateway only ever see glean::Error.
class ProviderCallError : public std::runtime_error {
 public:
  ProviderCallError(FailureClass fc, std::string message)
      : std::runtime_error(std::move(message)), class_(fc) {}
  FailureClass failure_class() const { return class_; }

 private:
  FailureClass class_;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{1000};
  double factor = 2.0;
  double jitter_fraction = 0.2;  // in [0,1)

  void validate() const;
};

class Provider {
 public:
  virtual ~Provider() = default;
  // One raw attempt; throws ProviderCallError on failure.
  virtual ProviderResponse complete(const ProviderRequest& req) = 0;
};

// ---------------------------------------------------------------------------
// Mock provider: deterministic, offline. Response selection, in order:
//   1. fixed body registered for the digest of the user prompt,
//   2. first regex rule matching the user prompt,
//   3. default_body when set, otherwise a script-miss failure.
// Token usage is computed with the chars/4 approximation (estimated=true).

struct MockRule {
  std::string pattern;  // ECMAScript regex, searched in the user prompt
  std::string body;
};

struct MockScript {
  std::vector<MockRule> rules;
  std::map<std::string, std::string> fixed;  // user-prompt digest -> body
  std::optional<std::string> default_body;
  int fail_first = 0;  // fail this many sends before behaving normally
  FailureClass fail_class = FailureClass::rate_limit;
};

// Pure function of (req, script): same request and script, same body.
std::string mock_respond_body(const ProviderRequest& req,
                              const MockScript& script);

TokenUsage mock_usage(const ProviderRequest& req, const std::string& body);

class MockProvider : public Provider {
 public:
  explicit MockProvider(MockScript script);
  ProviderResponse complete(const ProviderRequest& req) override;

  std::int64_t completions() const { return completions_.load(); }

 private:
  MockScript script_;
  std::atomic<std::int64_t> completions_{0};
  std::atomic<int> failures_left_;
};

// ---------------------------------------------------------------------------
// Generic HTTP JSON provider profile. API keys come from the environment
// variable named here, never from config files.

struct HttpProviderProfile {
  std::string provider_id;
  std::string base_url;      // scheme://host[:port]/path
  std::string auth_env_var;  // empty -> unauthenticated
  std::string model_field = "model";
  std::string prompt_field = "prompt";
  std::string system_field = "system";
  std::string schema_field = "schema";
  std::string body_field = "output";  // dotted path into the response JSON
  std::string usage_input_field = "usage.input_tokens";
  std::string usage_output_field = "usage.output_tokens";
  std::chrono::milliseconds timeout{30000};

  static HttpProviderProfile from_json(const nlohmann::json& doc);
};

class HttpProvider : public Provider {
 public:
  explicit HttpProvider(HttpProviderProfile profile);
  ProviderResponse complete(const ProviderRequest& req) override;

 private:
  HttpProviderProfile profile_;
};

// ---------------------------------------------------------------------------
// Gateway: routes requests, retries with exponential backoff, never caches
// (the executor owns the cache). Supports any number of concurrent sends;
// a retry wait blocks only its own call.

class Gateway {
 public:
  using SleepFn = std::function<void(std::chrono::milliseconds)>;

  // jitter_seed feeds the per-(request, attempt) jitter draw so that all
  // randomness in a run flows from one configured seed. A custom sleep
  // function is for tests; default is std::this_thread::sleep_for.
  explicit Gateway(std::uint64_t jitter_seed = 0, SleepFn sleep = {});

  void register_provider(const std::string& provider_id,
                         std::shared_ptr<Provider> provider);
  void register_http_profile(const HttpProviderProfile& profile);
  bool has_provider(const std::string& provider_id) const;
  std::shared_ptr<Provider> provider(const std::string& provider_id) const;

  // Returns the first successful response. After a retryable failure on
  // attempt n (1-based), waits base_delay*factor^(n-1), scaled by uniform
  // jitter in [1-j, 1+j]. Non-retryable failures abort immediately
  // (Errc::non_retryable). Exhaustion raises Errc::transport when every
  // attempt was a network-level failure, Errc::exhausted_retries otherwise
  // with all attempt errors in the message.
  ProviderResponse send(const ProviderRequest& req, const RetryPolicy& policy);

  // Observability (used by tests and the warm-cache acceptance check).
  std::int64_t send_count() const { return sends_.load(); }
  std::int64_t attempt_count() const { return attempts_.load(); }
  int in_flight() const { return in_flight_.load(); }
  int max_in_flight() const { return max_in_flight_.load(); }

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Provider>> providers_;
  std::uint64_t jitter_seed_;
  SleepFn sleep_;
  std::atomic<std::int64_t> sends_{0};
  std::atomic<std::int64_t> attempts_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_in_flight_{0};
};

}  // namespace glean
