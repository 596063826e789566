#pragma once

#include <string>

#include "nlt/provider.hpp"

namespace nlt {

struct HttpBackendConfig {
  // Scheme, host, port, and optional path prefix, e.g.
  // "https://api.openai.com/v1" or "http://127.0.0.1:8080".
  std::string base_url;
  std::string api_key;  // empty = no Authorization header
  std::string chat_path = "/chat/completions";
  int connect_timeout_ms = 10000;
  int read_timeout_ms = 120000;
};

// Chat-completions client: POST {model, messages, tools?}, read
// choices[0].message.{content, tool_calls[].function.name} and
// usage.{prompt_tokens, completion_tokens, total_tokens}. Declared functions
// carry an empty-object parameter schema — tools here are parameterless.
//
// Status mapping: 401/403 auth_error, 429 rate_limit, 408 timeout,
// 5xx server_error, other 4xx configuration; unusable payloads are
// malformed_response. Each attempt is an independent request (no caching,
// no conversation state).
class HttpBackend : public ChatBackend {
 public:
  explicit HttpBackend(HttpBackendConfig config);

  ProviderResponse attempt(const ProviderRequest& request, int attempt_no) override;
  std::string name() const override { return "live"; }

  // Exposed for tests: the request body this backend would send.
  std::string render_request_body(const ProviderRequest& request) const;

 private:
  HttpBackendConfig config_;
  std::string client_base_;  // scheme://host[:port]
  std::string path_prefix_;  // leading path from base_url, possibly empty
};

}  // namespace nlt
