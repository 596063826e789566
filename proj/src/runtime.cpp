#include "nlt/runtime.hpp"

#include <stdexcept>

#include "nlt/promptgen.hpp"

namespace nlt {

const char* stage_name(Stage stage) {
  switch (stage) {
    case Stage::select: return "select";
    case Stage::execute: return "execute";
    case Stage::respond: return "respond";
  }
  return "?";
}

void HandlerTable::register_handler(ToolHandler handler) {
  if (handler.tool.empty()) throw std::invalid_argument("handler needs a tool name");
  if (!handler.action) throw std::invalid_argument("handler for '" + handler.tool + "' has no action");
  if (handlers_.count(handler.tool) || noop_.count(handler.tool))
    throw std::invalid_argument("duplicate handler for '" + handler.tool + "'");
  handlers_.emplace(handler.tool, std::move(handler));
}

void HandlerTable::declare_noop(const std::string& tool) {
  if (handlers_.count(tool) || noop_.count(tool))
    throw std::invalid_argument("duplicate handler for '" + tool + "'");
  noop_.insert(tool);
}

const ToolHandler* HandlerTable::find(const std::string& tool) const {
  auto it = handlers_.find(tool);
  return it == handlers_.end() ? nullptr : &it->second;
}

bool HandlerTable::covers(const std::string& tool) const {
  return handlers_.count(tool) || noop_.count(tool);
}

ProviderResponder::ProviderResponder(ChatBackend& backend, std::string model_id,
                                     RetryPolicy policy, SleepFn sleep)
    : backend_(backend), model_id_(std::move(model_id)), policy_(std::move(policy)),
      sleep_(std::move(sleep)) {}

std::string ProviderResponder::respond(const ScenarioCatalog& catalog,
                                       const std::string& user_text,
                                       const std::map<std::string, std::string>& tool_results,
                                       const std::optional<std::string>& thinking) {
  ProviderRequest req;
  req.model_id = model_id_;
  req.system_text = catalog.nlt.role;  // same persona the selector was given
  std::string user = user_text;
  if (thinking && !thinking->empty()) user += "\n\n[Selector thinking]\n" + *thinking;
  for (const auto& [tool, result] : tool_results)
    user += "\n\n[Tool: " + tool + "]\n" + result;
  req.user_text = std::move(user);
  return complete(backend_, req, policy_, sleep_).content_text;
}

PipelineResult run_pipeline(const ScenarioCatalog& catalog, const std::string& user_text,
                            const HandlerTable& handlers, Responder* responder,
                            ChatBackend& backend, const PipelineOptions& options) {
  for (const auto& t : catalog.tools) {
    if (!handlers.covers(t.display_name))
      throw std::invalid_argument("no handler (or no-op declaration) for tool '" +
                                  t.display_name + "'");
  }

  PipelineResult result;
  auto mark = [&](Stage stage, std::string detail) {
    result.trace.push_back({stage, std::move(detail), std::chrono::system_clock::now()});
  };

  // Stage 1: selector call.
  const SelectorPrompt prompt = build_nlt_prompt(catalog);
  ProviderRequest req;
  req.model_id = options.model_id;
  req.system_text = prompt.text;
  req.user_text = user_text;
  result.selector_response = complete(backend, req, options.retry, options.sleep);
  result.raw_transcript = result.selector_response.content_text;
  mark(Stage::select, "selector replied (" + std::to_string(result.raw_transcript.size()) +
                          " bytes, " + std::to_string(result.selector_response.attempts) +
                          " attempt(s))");

  // Stage 2: parse, then run YES tools in catalog order.
  result.parse = parse_selector(result.raw_transcript, prompt.tool_order, ParseMode::strict);
  if (!result.parse.ok()) {
    mark(Stage::execute, std::string("parse failure: ") +
                             diagnostic_kind_name(result.parse.failure->kind) +
                             "; no tools invoked");
    return result;
  }
  const std::set<std::string> yes = result.parse.yes_set();
  bool any_execute_event = false;
  for (const auto& t : catalog.tools) {
    if (!yes.count(t.display_name)) continue;
    any_execute_event = true;
    const ToolHandler* handler = handlers.find(t.display_name);
    if (!handler) {  // declared no-op
      mark(Stage::execute, "'" + t.display_name + "' is a declared no-op");
      continue;
    }
    try {
      result.tool_results[t.display_name] =
          handler->action({&catalog, user_text, t.display_name});
      mark(Stage::execute, "'" + t.display_name + "' ok");
    } catch (const std::exception& e) {
      result.tool_errors[t.display_name] = e.what();
      mark(Stage::execute, "'" + t.display_name + "' failed: " + std::string(e.what()));
    }
  }
  if (!any_execute_event) mark(Stage::execute, "no tools to invoke");

  // Stage 3: hand off to the output module.
  if (responder) {
    result.response = responder->respond(
        catalog, user_text, result.tool_results,
        options.forward_thinking ? result.parse.thinking : std::optional<std::string>{});
    mark(Stage::respond, "responder replied (" + std::to_string(result.response->size()) +
                             " bytes)");
  }
  return result;
}

}  // namespace nlt
