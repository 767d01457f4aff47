#include <cstdlib>
#include <string>

#include <httplib.h>

#include "glean/canonical.hpp"
#include "glean/errors.hpp"
#include "glean/provider.hpp"

namespace glean {

namespace {

// "a.b.c" -> doc["a"]["b"]["c"], or null when any step is missing.
nlohmann::json dig(const nlohmann::json& doc, const std::string& dotted) {
  const nlohmann::json* cur = &doc;
  std::size_t pos = 0;
  while (pos <= dotted.size()) {
    std::size_t dot = dotted.find('.', pos);
    std::string key = dotted.substr(pos, dot == std::string::npos
                                             ? std::string::npos
                                             : dot - pos);
    if (!cur->is_object() || !cur->contains(key)) return nullptr;
    cur = &(*cur)[key];
    if (dot == std::string::npos) break;
    pos = dot + 1;
  }
  return *cur;
}

FailureClass classify_status(int status) {
  if (status == 429) return FailureClass::rate_limit;
  if (status >= 500) return FailureClass::server_error;
  if (status == 401 || status == 403) return FailureClass::auth;
  return FailureClass::invalid_request;
}

}  // namespace

HttpProviderProfile HttpProviderProfile::from_json(const nlohmann::json& doc) {
  HttpProviderProfile p;
  if (!doc.contains("provider_id") || !doc.contains("base_url")) {
    raise(Errc::config, "http provider profile needs provider_id and base_url");
  }
  p.provider_id = doc["provider_id"].get<std::string>();
  p.base_url = doc["base_url"].get<std::string>();
  p.auth_env_var = doc.value("auth_env_var", std::string());
  p.model_field = doc.value("model_field", p.model_field);
  p.prompt_field = doc.value("prompt_field", p.prompt_field);
  p.system_field = doc.value("system_field", p.system_field);
  p.schema_field = doc.value("schema_field", p.schema_field);
  p.body_field = doc.value("body_field", p.body_field);
  if (doc.contains("usage_fields")) {
    const auto& u = doc["usage_fields"];
    p.usage_input_field = u.value("input", p.usage_input_field);
    p.usage_output_field = u.value("output", p.usage_output_field);
  }
  if (doc.contains("timeout_ms")) {
    p.timeout = std::chrono::milliseconds(doc["timeout_ms"].get<std::int64_t>());
  }
  return p;
}

HttpProvider::HttpProvider(HttpProviderProfile profile)
    : profile_(std::move(profile)) {}

ProviderResponse HttpProvider::complete(const ProviderRequest& req) {
  // Split scheme://host[:port] from the request path.
  const std::string& url = profile_.base_url;
  std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ProviderCallError(FailureClass::invalid_request,
                            "malformed base_url: " + url);
  }
  std::size_t path_start = url.find('/', scheme_end + 3);
  std::string origin =
      path_start == std::string::npos ? url : url.substr(0, path_start);
  std::string path =
      path_start == std::string::npos ? "/" : url.substr(path_start);

  nlohmann::json payload{
      {profile_.model_field, req.model_id},
      {profile_.prompt_field, req.user_prompt},
      {"temperature", req.params.temperature},
      {"max_output_tokens", req.params.max_output_tokens}};
  if (!req.system_prompt.empty()) {
    payload[profile_.system_field] = req.system_prompt;
  }
  if (!req.schema_description.is_null()) {
    payload[profile_.schema_field] = req.schema_description;
  }
  if (req.params.seed) payload["seed"] = *req.params.seed;

  httplib::Client client(origin);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(
      profile_.timeout));
  client.set_read_timeout(
      std::chrono::duration_cast<std::chrono::seconds>(profile_.timeout));

  httplib::Headers headers;
  if (!profile_.auth_env_var.empty()) {
    const char* key = std::getenv(profile_.auth_env_var.c_str());
    if (key == nullptr || *key == '\0') {
      throw ProviderCallError(
          FailureClass::auth,
          "environment variable " + profile_.auth_env_var + " is not set");
    }
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  auto result = client.Post(path, headers, payload.dump(), "application/json");
  if (!result) {
    auto err = result.error();
    bool timed_out = err == httplib::Error::ConnectionTimeout ||
                     err == httplib::Error::Read || err == httplib::Error::Write;
    throw ProviderCallError(
        timed_out ? FailureClass::timeout : FailureClass::transport,
        "http transport error: " + httplib::to_string(err));
  }
  if (result->status < 200 || result->status >= 300) {
    throw ProviderCallError(classify_status(result->status),
                            "http status " + std::to_string(result->status) +
                                ": " + result->body.substr(0, 200));
  }

  nlohmann::json response = nlohmann::json::parse(
      result->body, /*cb=*/nullptr, /*allow_exceptions=*/false);
  if (response.is_discarded()) {
    throw ProviderCallError(FailureClass::server_error,
                            "provider returned non-JSON response body");
  }

  ProviderResponse out;
  nlohmann::json body = dig(response, profile_.body_field);
  if (body.is_null()) {
    throw ProviderCallError(FailureClass::server_error,
                            "response missing '" + profile_.body_field + "'");
  }
  out.body = body.is_string() ? body.get<std::string>() : body.dump();

  nlohmann::json in_tok = dig(response, profile_.usage_input_field);
  nlohmann::json out_tok = dig(response, profile_.usage_output_field);
  if (in_tok.is_number() && out_tok.is_number()) {
    out.usage.input_tokens = in_tok.get<std::int64_t>();
    out.usage.output_tokens = out_tok.get<std::int64_t>();
    out.usage.estimated = false;
  } else {
    out.usage.input_tokens =
        approx_tokens(req.system_prompt) + approx_tokens(req.user_prompt);
    out.usage.output_tokens = approx_tokens(out.body);
    out.usage.estimated = true;
  }
  return out;
}

}  // namespace glean
