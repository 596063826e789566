#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nlt/catalog.hpp"
#include "nlt/nlparse.hpp"
#include "nlt/provider.hpp"

namespace nlt {

struct ToolInvocation {
  const ScenarioCatalog* catalog = nullptr;
  std::string user_text;
  std::string tool;  // display name being invoked
};

struct ToolHandler {
  std::string tool;  // display name
  std::function<std::string(const ToolInvocation&)> action;
  // Side effects must be declared: true means re-invocation is harmless.
  bool idempotent = false;
};

// Registry mapping tools to handlers. A tool may instead be declared a no-op,
// which satisfies coverage without running anything.
class HandlerTable {
 public:
  void register_handler(ToolHandler handler);       // throws on duplicate/empty
  void declare_noop(const std::string& tool);
  const ToolHandler* find(const std::string& tool) const;
  bool covers(const std::string& tool) const;       // handler or declared no-op

 private:
  std::map<std::string, ToolHandler> handlers_;
  std::set<std::string> noop_;
};

enum class Stage { select, execute, respond };
const char* stage_name(Stage stage);

struct StageEvent {
  Stage stage;
  std::string detail;
  std::chrono::system_clock::time_point at;
};

struct PipelineResult {
  ParseOutcome parse;  // decision set on success, failure + raw transcript otherwise
  std::string raw_transcript;
  ProviderResponse selector_response;
  std::map<std::string, std::string> tool_results;  // keys ⊆ yes_set
  std::map<std::string, std::string> tool_errors;   // handler failures, per tool
  std::optional<std::string> response;              // Stage-3 reply, if a responder ran
  std::vector<StageEvent> trace;                    // select < execute < respond

  bool ok() const { return parse.ok(); }
};

// Stage-3 output module. Receives the user text and the labeled tool results;
// sees the selector's thinking only when the pipeline forwards it.
class Responder {
 public:
  virtual ~Responder() = default;
  virtual std::string respond(const ScenarioCatalog& catalog, const std::string& user_text,
                              const std::map<std::string, std::string>& tool_results,
                              const std::optional<std::string>& thinking) = 0;
};

// Responder backed by a chat model: makes exactly one backend call, sending
// the user text plus tool results as labeled text blocks.
class ProviderResponder : public Responder {
 public:
  ProviderResponder(ChatBackend& backend, std::string model_id, RetryPolicy policy = {},
                    SleepFn sleep = real_sleep());
  std::string respond(const ScenarioCatalog& catalog, const std::string& user_text,
                      const std::map<std::string, std::string>& tool_results,
                      const std::optional<std::string>& thinking) override;

 private:
  ChatBackend& backend_;
  std::string model_id_;
  RetryPolicy policy_;
  SleepFn sleep_;
};

struct PipelineOptions {
  std::string model_id = "selector";
  RetryPolicy retry{};
  SleepFn sleep = real_sleep();
  // Whether Stage 3 sees the selector's thinking text. Withheld by default.
  bool forward_thinking = false;
};

// The three-stage pipeline. Stage 1 sends the catalog's selector prompt plus
// the user text to the backend; Stage 2 strict-parses the transcript and
// invokes the handler of every YES tool in catalog order (a handler error is
// recorded and does not abort the remaining tools; a parse failure
// short-circuits with zero invocations); Stage 3 runs the responder, if any.
// Throws std::invalid_argument unless every catalog tool is covered by
// `handlers`; provider errors propagate.
PipelineResult run_pipeline(const ScenarioCatalog& catalog, const std::string& user_text,
                            const HandlerTable& handlers, Responder* responder,
                            ChatBackend& backend, const PipelineOptions& options = {});

}  // namespace nlt
