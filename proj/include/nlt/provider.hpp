#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlt {

// Wire-level function definition: name (slug) plus description, nothing
// else — the functions under test are parameterless.
struct FunctionDef {
  std::string name;
  std::string description;
};

// One chat-completion request. function_defs is engaged exactly when the
// structured approach is in play; sampling parameters stay at provider
// defaults on purpose (replications run "under default settings").
struct ProviderRequest {
  std::string model_id;
  std::string system_text;
  std::string user_text;
  std::optional<std::vector<FunctionDef>> function_defs;
  enum class TemperaturePolicy { provider_default } temperature_policy =
      TemperaturePolicy::provider_default;
};

// Token accounting. `full` means input and output were both reported (total
// is then their sum); `partial` means only a total came back and is carried
// as reported; `unreported` usage is excluded from aggregates — counts are
// never fabricated.
struct TokenUsage {
  enum class State { unreported, partial, full };
  State state = State::unreported;
  long input_tokens = 0;
  long output_tokens = 0;
  long total_tokens = 0;

  static TokenUsage none() { return {}; }
  static TokenUsage full(long input, long output) {
    return {State::full, input, output, input + output};
  }
  static TokenUsage total_only(long total) { return {State::partial, 0, 0, total}; }
};

struct ToolCallRef {
  std::string name;  // function slug as returned on the wire
};

struct ProviderResponse {
  std::string content_text;
  std::vector<ToolCallRef> tool_calls;
  TokenUsage usage;
  int attempts = 1;  // filled by complete()
};

enum class ProviderErrorKind {
  rate_limit,
  timeout,
  transport_error,
  server_error,
  auth_error,          // never retried
  malformed_response,  // wire payload unusable; never retried
  configuration,       // e.g. unscripted mock key; never retried
  exhausted_retries,
};

const char* provider_error_kind_name(ProviderErrorKind kind);

class ProviderError : public std::runtime_error {
 public:
  ProviderError(ProviderErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ProviderError(ProviderErrorKind kind, const std::string& message, ProviderErrorKind underlying,
                int attempts)
      : std::runtime_error(message), kind_(kind), underlying_(underlying), attempts_(attempts) {}

  ProviderErrorKind kind() const { return kind_; }
  // For exhausted_retries: the kind of the last failed attempt.
  std::optional<ProviderErrorKind> underlying() const { return underlying_; }
  int attempts() const { return attempts_; }

 private:
  ProviderErrorKind kind_;
  std::optional<ProviderErrorKind> underlying_;
  int attempts_ = 0;
};

struct RetryPolicy {
  int max_attempts = 5;
  struct Backoff {
    std::chrono::milliseconds base{500};
    double factor = 2.0;
    std::chrono::milliseconds cap{16000};
  } backoff;
  std::set<ProviderErrorKind> retryable = {
      ProviderErrorKind::rate_limit,
      ProviderErrorKind::timeout,
      ProviderErrorKind::transport_error,
      ProviderErrorKind::server_error,
  };

  // Delay before attempt n+1 after the n-th failure (n is 1-based).
  std::chrono::milliseconds delay_after(int attempt) const;
};

// A backend performs one raw attempt; complete() owns the retry loop.
// attempt_no is 1-based and exists so deterministic test doubles can script
// per-attempt behavior without shared mutable state.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ProviderResponse attempt(const ProviderRequest& request, int attempt_no) = 0;
  virtual std::string name() const = 0;
};

using SleepFn = std::function<void(std::chrono::milliseconds)>;
SleepFn real_sleep();
SleepFn no_sleep();

// Retries retryable failures with exponential backoff until a clean response
// or max_attempts, then throws ProviderError(exhausted_retries) carrying the
// last underlying kind. Non-retryable failures propagate immediately. A
// response never comes from a failed attempt, and nothing is cached.
ProviderResponse complete(ChatBackend& backend, const ProviderRequest& request,
                          const RetryPolicy& policy, const SleepFn& sleep = real_sleep());

// Trivial backend that replies with the request's user text. Handy as an
// identity rewriter and in pipeline demos.
class EchoBackend : public ChatBackend {
 public:
  ProviderResponse attempt(const ProviderRequest& request, int attempt_no) override;
  std::string name() const override { return "echo"; }
};

}  // namespace nlt
