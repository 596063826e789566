#include "nlt/http_backend.hpp"

#include "httplib.h"
#include "json.hpp"

using nlohmann::json;

namespace nlt {

namespace {

[[noreturn]] void throw_status(int status, const std::string& body) {
  const std::string snippet = body.substr(0, 200);
  const std::string msg = "HTTP " + std::to_string(status) + ": " + snippet;
  if (status == 401 || status == 403) throw ProviderError(ProviderErrorKind::auth_error, msg);
  if (status == 429) throw ProviderError(ProviderErrorKind::rate_limit, msg);
  if (status == 408) throw ProviderError(ProviderErrorKind::timeout, msg);
  if (status >= 500) throw ProviderError(ProviderErrorKind::server_error, msg);
  throw ProviderError(ProviderErrorKind::configuration, msg);
}

ProviderErrorKind transport_kind(httplib::Error err) {
  switch (err) {
    case httplib::Error::ConnectionTimeout:
    case httplib::Error::Read:
    case httplib::Error::Write:
      return ProviderErrorKind::timeout;
    default:
      return ProviderErrorKind::transport_error;
  }
}

}  // namespace

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
  const std::string& url = config_.base_url;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw ProviderError(ProviderErrorKind::configuration,
                        "base_url must start with http:// or https://: " + url);
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https")
    throw ProviderError(ProviderErrorKind::configuration, "unsupported scheme '" + scheme + "'");
#ifndef NLT_HAVE_OPENSSL
  if (scheme == "https")
    throw ProviderError(ProviderErrorKind::configuration,
                        "built without TLS support; https base_url unavailable");
#endif
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    client_base_ = url;
  } else {
    client_base_ = url.substr(0, path_start);
    path_prefix_ = url.substr(path_start);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  }
}

std::string HttpBackend::render_request_body(const ProviderRequest& request) const {
  json body;
  body["model"] = request.model_id;
  body["messages"] = json::array({json{{"role", "system"}, {"content", request.system_text}},
                                  json{{"role", "user"}, {"content", request.user_text}}});
  if (request.function_defs) {
    json tools = json::array();
    for (const auto& fd : *request.function_defs) {
      tools.push_back(json{{"type", "function"},
                           {"function", json{{"name", fd.name},
                                             {"description", fd.description},
                                             {"parameters", json::object()}}}});
    }
    body["tools"] = std::move(tools);
  }
  // Sampling parameters deliberately absent: provider defaults.
  return body.dump();
}

ProviderResponse HttpBackend::attempt(const ProviderRequest& request, int /*attempt_no*/) {
  // One short-lived client per attempt keeps the backend safe for concurrent
  // workers without sharing connection state.
  httplib::Client client(client_base_);
  client.set_connection_timeout(0, config_.connect_timeout_ms * 1000);
  client.set_read_timeout(config_.read_timeout_ms / 1000, (config_.read_timeout_ms % 1000) * 1000);

  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  const std::string path = path_prefix_ + config_.chat_path;
  auto result = client.Post(path, headers, render_request_body(request), "application/json");
  if (!result)
    throw ProviderError(transport_kind(result.error()),
                        "request to " + client_base_ + path +
                            " failed: " + httplib::to_string(result.error()));
  if (result->status < 200 || result->status >= 300) throw_status(result->status, result->body);

  json doc;
  try {
    doc = json::parse(result->body);
  } catch (const json::exception& e) {
    throw ProviderError(ProviderErrorKind::malformed_response,
                        std::string("response is not JSON: ") + e.what());
  }

  ProviderResponse out;
  try {
    const json& choices = doc.at("choices");
    if (!choices.is_array() || choices.empty())
      throw ProviderError(ProviderErrorKind::malformed_response, "empty choices array");
    const json& message = choices[0].at("message");
    if (message.contains("content") && message["content"].is_string())
      out.content_text = message["content"].get<std::string>();
    if (message.contains("tool_calls") && message["tool_calls"].is_array()) {
      for (const auto& call : message["tool_calls"]) {
        out.tool_calls.push_back({call.at("function").at("name").get<std::string>()});
      }
    }
  } catch (const json::exception& e) {
    throw ProviderError(ProviderErrorKind::malformed_response,
                        std::string("unexpected response shape: ") + e.what());
  }

  if (doc.contains("usage") && doc["usage"].is_object()) {
    const json& u = doc["usage"];
    const bool has_in = u.contains("prompt_tokens") && u["prompt_tokens"].is_number();
    const bool has_out = u.contains("completion_tokens") && u["completion_tokens"].is_number();
    const bool has_total = u.contains("total_tokens") && u["total_tokens"].is_number();
    if (has_in && has_out)
      out.usage = TokenUsage::full(u["prompt_tokens"].get<long>(),
                                   u["completion_tokens"].get<long>());
    else if (has_total)
      out.usage = TokenUsage::total_only(u["total_tokens"].get<long>());
  }
  return out;
}

}  // namespace nlt
