#include "glean/provider.hpp"

#include <algorithm>
#include <random>
#include <thread>

#include "glean/canonical.hpp"
#include "glean/digest.hpp"
#include "glean/errors.hpp"

namespace glean {

nlohmann::json ProviderRequest::to_canonical_json() const {
  nlohmann::json params_json{
      {"temperature", params.temperature},
      {"max_output_tokens", params.max_output_tokens}};
  if (params.seed) params_json["seed"] = *params.seed;
  return nlohmann::json{{"provider_id", provider_id},
                        {"model_id", model_id},
                        {"system_prompt", system_prompt},
                        {"user_prompt", user_prompt},
                        {"schema_digest", schema_digest},
                        {"params", std::move(params_json)}};
}

std::string ProviderRequest::canonical() const {
  return canonical_json(to_canonical_json());
}

std::string ProviderRequest::digest() const { return sha256_hex(canonical()); }

bool is_retryable(FailureClass c) {
  switch (c) {
    case FailureClass::rate_limit:
    case FailureClass::server_error:
    case FailureClass::transport:
    case FailureClass::timeout:
      return true;
    case FailureClass::auth:
    case FailureClass::invalid_request:
      return false;
  }
  return false;
}

const char* failure_class_name(FailureClass c) {
  switch (c) {
    case FailureClass::rate_limit: return "rate-limit";
    case FailureClass::server_error: return "server-error";
    case FailureClass::transport: return "transport";
    case FailureClass::timeout: return "timeout";
    case FailureClass::auth: return "auth";
    case FailureClass::invalid_request: return "invalid-request";
  }
  return "transport";
}

FailureClass parse_failure_class(const std::string& name) {
  if (name == "rate-limit" || name == "rate_limit") return FailureClass::rate_limit;
  if (name == "server-error" || name == "server_error") return FailureClass::server_error;
  if (name == "transport") return FailureClass::transport;
  if (name == "timeout") return FailureClass::timeout;
  if (name == "auth") return FailureClass::auth;
  if (name == "invalid-request" || name == "invalid_request") {
    return FailureClass::invalid_request;
  }
  raise(Errc::config, "unknown failure class: '" + name + "'");
}

void RetryPolicy::validate() const {
  if (max_attempts < 1) raise(Errc::config, "retry: max_attempts must be >= 1");
  if (factor <= 1.0) raise(Errc::config, "retry: factor must be > 1");
  if (jitter_fraction < 0.0 || jitter_fraction >= 1.0) {
    raise(Errc::config, "retry: jitter_fraction must lie in [0,1)");
  }
  if (base_delay.count() < 0) raise(Errc::config, "retry: negative base_delay");
}

// ---------------------------------------------------------------------------
// Mock provider

std::string mock_respond_body(const ProviderRequest& req,
                              const MockScript& script) {
  if (!script.fixed.empty()) {
    auto it = script.fixed.find(sha256_hex(req.user_prompt));
    if (it != script.fixed.end()) return it->second;
  }
  for (const auto& rule : script.rules) {
    std::regex re(rule.pattern, std::regex::ECMAScript);
    if (std::regex_search(req.user_prompt, re)) return rule.body;
  }
  if (script.default_body) return *script.default_body;
  raise(Errc::script_miss,
        "mock provider: no rule matches request " + req.digest().substr(0, 12));
}

TokenUsage mock_usage(const ProviderRequest& req, const std::string& body) {
  TokenUsage usage;
  usage.input_tokens =
      approx_tokens(req.system_prompt) + approx_tokens(req.user_prompt);
  usage.output_tokens =
      std::min(approx_tokens(body), req.params.max_output_tokens);
  usage.estimated = true;
  return usage;
}

MockProvider::MockProvider(MockScript script)
    : script_(std::move(script)), failures_left_(script_.fail_first) {}

ProviderResponse MockProvider::complete(const ProviderRequest& req) {
  completions_.fetch_add(1);
  if (failures_left_.fetch_sub(1) > 0) {
    throw ProviderCallError(script_.fail_class,
                            std::string("scripted failure (") +
                                failure_class_name(script_.fail_class) + ")");
  }
  failures_left_.store(0);
  ProviderResponse resp;
  resp.body = mock_respond_body(req, script_);
  resp.usage = mock_usage(req, resp.body);
  return resp;
}

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway(std::uint64_t jitter_seed, SleepFn sleep)
    : jitter_seed_(jitter_seed), sleep_(std::move(sleep)) {
  if (!sleep_) {
    sleep_ = [](std::chrono::milliseconds d) {
      std::this_thread::sleep_for(d);
    };
  }
}

void Gateway::register_provider(const std::string& provider_id,
                                std::shared_ptr<Provider> provider) {
  std::lock_guard lock(mu_);
  if (!providers_.emplace(provider_id, std::move(provider)).second) {
    raise(Errc::duplicate_provider,
          "provider already registered: '" + provider_id + "'");
  }
}

void Gateway::register_http_profile(const HttpProviderProfile& profile) {
  register_provider(profile.provider_id, std::make_shared<HttpProvider>(profile));
}

bool Gateway::has_provider(const std::string& provider_id) const {
  std::lock_guard lock(mu_);
  return providers_.count(provider_id) != 0;
}

std::shared_ptr<Provider> Gateway::provider(
    const std::string& provider_id) const {
  std::lock_guard lock(mu_);
  auto it = providers_.find(provider_id);
  if (it == providers_.end()) {
    raise(Errc::unknown_provider,
          "no provider registered as '" + provider_id + "'");
  }
  return it->second;
}

ProviderResponse Gateway::send(const ProviderRequest& req,
                               const RetryPolicy& policy) {
  policy.validate();
  if (req.user_prompt.empty()) {
    raise(Errc::config, "provider request has an empty user prompt");
  }
  std::shared_ptr<Provider> target = provider(req.provider_id);

  sends_.fetch_add(1);
  int flying = in_flight_.fetch_add(1) + 1;
  int seen = max_in_flight_.load();
  while (flying > seen && !max_in_flight_.compare_exchange_weak(seen, flying)) {
  }
  struct InFlightGuard {
    std::atomic<int>& gauge;
    ~InFlightGuard() { gauge.fetch_sub(1); }
  } guard{in_flight_};

  auto start = std::chrono::steady_clock::now();
  std::string attempt_errors;
  bool all_transport = true;
  std::string req_digest = req.digest();

  for (int attempt = 1; attempt <= policy.max_attempts; ++attempt) {
    attempts_.fetch_add(1);
    try {
      ProviderResponse resp = target->complete(req);
      resp.attempts = attempt;
      resp.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - start);
      return resp;
    } catch (const ProviderCallError& e) {
      if (!attempt_errors.empty()) attempt_errors += "; ";
      attempt_errors += "attempt " + std::to_string(attempt) + ": " + e.what();
      if (!is_retryable(e.failure_class())) {
        raise(Errc::non_retryable, "provider '" + req.provider_id +
                                       "': " + attempt_errors);
      }
      all_transport = all_transport &&
                      (e.failure_class() == FailureClass::transport ||
                       e.failure_class() == FailureClass::timeout);
      if (attempt == policy.max_attempts) break;

      auto base = static_cast<double>(policy.base_delay.count()) *
                  std::pow(policy.factor, attempt - 1);
      double scale = 1.0;
      if (policy.jitter_fraction > 0.0) {
        std::seed_seq seq{jitter_seed_,
                          std::hash<std::string>{}(req_digest),
                          static_cast<std::uint64_t>(attempt)};
        std::mt19937_64 rng(seq);
        std::uniform_real_distribution<double> dist(
            1.0 - policy.jitter_fraction, 1.0 + policy.jitter_fraction);
        scale = dist(rng);
      }
      sleep_(std::chrono::milliseconds(
          static_cast<std::int64_t>(std::llround(base * scale))));
    }
  }

  if (all_transport) {
    raise(Errc::transport, "provider '" + req.provider_id +
                               "' unreachable: " + attempt_errors);
  }
  raise(Errc::exhausted_retries,
        "provider '" + req.provider_id + "': retries exhausted after " +
            std::to_string(policy.max_attempts) + " attempts: " + attempt_errors);
}

}  // namespace glean
