#include "nlt/provider.hpp"

#include <cmath>
#include <thread>

namespace nlt {

const char* provider_error_kind_name(ProviderErrorKind kind) {
  switch (kind) {
    case ProviderErrorKind::rate_limit: return "rate_limit";
    case ProviderErrorKind::timeout: return "timeout";
    case ProviderErrorKind::transport_error: return "transport_error";
    case ProviderErrorKind::server_error: return "server_error";
    case ProviderErrorKind::auth_error: return "auth_error";
    case ProviderErrorKind::malformed_response: return "malformed_response";
    case ProviderErrorKind::configuration: return "configuration";
    case ProviderErrorKind::exhausted_retries: return "exhausted_retries";
  }
  return "?";
}

std::chrono::milliseconds RetryPolicy::delay_after(int attempt) const {
  double ms = static_cast<double>(backoff.base.count()) *
              std::pow(backoff.factor, static_cast<double>(attempt - 1));
  double cap = static_cast<double>(backoff.cap.count());
  if (ms > cap) ms = cap;
  return std::chrono::milliseconds(static_cast<long long>(ms));
}

SleepFn real_sleep() {
  return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

SleepFn no_sleep() {
  return [](std::chrono::milliseconds) {};
}

ProviderResponse complete(ChatBackend& backend, const ProviderRequest& request,
                          const RetryPolicy& policy, const SleepFn& sleep) {
  if (policy.max_attempts < 1)
    throw ProviderError(ProviderErrorKind::configuration, "max_attempts must be >= 1");
  for (int attempt = 1;; ++attempt) {
    try {
      ProviderResponse r = backend.attempt(request, attempt);
      r.attempts = attempt;
      return r;
    } catch (const ProviderError& e) {
      if (!policy.retryable.count(e.kind()))
        // Rethrow with the attempt count attached so callers can record it.
        throw ProviderError(e.kind(), e.what(), e.kind(), attempt);
      if (attempt >= policy.max_attempts) {
        throw ProviderError(
            ProviderErrorKind::exhausted_retries,
            "gave up after " + std::to_string(attempt) + " attempts; last error: " + e.what(),
            e.kind(), attempt);
      }
      sleep(policy.delay_after(attempt));
    }
  }
}

ProviderResponse EchoBackend::attempt(const ProviderRequest& request, int) {
  ProviderResponse r;
  r.content_text = request.user_text;
  r.usage = TokenUsage::none();
  return r;
}

}  // namespace nlt
