#include "nlt/mock_provider.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "nlt/promptgen.hpp"

using nlohmann::json;

namespace nlt {

namespace {

ProviderErrorKind error_kind_from_name(const std::string& name) {
  for (ProviderErrorKind k : {ProviderErrorKind::rate_limit, ProviderErrorKind::timeout,
                              ProviderErrorKind::transport_error, ProviderErrorKind::server_error,
                              ProviderErrorKind::auth_error, ProviderErrorKind::malformed_response,
                              ProviderErrorKind::configuration}) {
    if (name == provider_error_kind_name(k)) return k;
  }
  throw ProviderError(ProviderErrorKind::configuration, "unknown error kind '" + name + "'");
}

std::string key_to_string(const ScriptKey& k) {
  return "(" + k.model_id + ", " + k.approach + ", " + k.scenario_id + ", " + k.variant + ", " +
         std::to_string(k.input_id) + ")";
}

ToolDecisionSet decisions_for(const ScenarioCatalog& cat, const std::set<std::string>& yes) {
  ToolDecisionSet d;
  for (const auto& t : cat.tools)
    d.decisions[t.display_name] = yes.count(t.display_name) ? Verdict::yes : Verdict::no;
  return d;
}

// One scripted exchange answering `yes` exactly, for both approaches.
void add_exact_answers(Script& script, const ScenarioCatalog& cat, const std::string& model,
                       int input_id, const std::set<std::string>& yes,
                       const SelectorPrompt& prompt) {
  ScriptedReply nlt_reply;
  nlt_reply.response.content_text = emit_expected_transcript(
      prompt, decisions_for(cat, yes), "Considering each tool against the user input.");
  nlt_reply.response.usage = TokenUsage::full(kMockNltInputTokens, kMockNltOutputTokens);
  script[{model, "nlt", cat.scenario_id, cat.variant, input_id}] = std::move(nlt_reply);

  ScriptedReply structured_reply;
  structured_reply.response.content_text = "Reviewing the input against each available function.";
  for (const auto& t : cat.tools)
    if (yes.count(t.display_name)) structured_reply.response.tool_calls.push_back({t.slug});
  structured_reply.response.usage =
      TokenUsage::full(kMockStructuredInputTokens, kMockStructuredOutputTokens);
  script[{model, "structured", cat.scenario_id, cat.variant, input_id}] =
      std::move(structured_reply);
}

}  // namespace

MockProvider::MockProvider(Script script, std::vector<ScenarioCatalog> catalogs)
    : script_(std::move(script)), catalogs_(std::move(catalogs)) {
  for (std::size_t i = 0; i < catalogs_.size(); ++i) {
    const auto nlt_text = build_nlt_prompt(catalogs_[i]).text;
    const auto structured_text = build_structured_bundle(catalogs_[i]).system_text;
    if (!prompt_index_.emplace(nlt_text, std::make_pair(std::string("nlt"), i)).second ||
        !prompt_index_.emplace(structured_text, std::make_pair(std::string("structured"), i))
             .second)
      throw ProviderError(ProviderErrorKind::configuration,
                          "two catalogs render identical prompts; requests would be ambiguous");
  }
}

ScriptKey MockProvider::resolve_key(const ProviderRequest& request) const {
  auto it = prompt_index_.find(request.system_text);
  if (it == prompt_index_.end())
    throw ProviderError(ProviderErrorKind::configuration,
                        "mock: system text matches no known catalog prompt");
  const auto& [approach, cat_idx] = it->second;
  if ((approach == "structured") != request.function_defs.has_value())
    throw ProviderError(ProviderErrorKind::configuration,
                        "mock: function_defs presence does not match the " + approach +
                            " system prompt");
  const ScenarioCatalog& cat = catalogs_[cat_idx];
  for (const auto& in : cat.inputs) {
    if (in.text == request.user_text)
      return {request.model_id, approach, cat.scenario_id, cat.variant, in.id};
  }
  throw ProviderError(ProviderErrorKind::configuration,
                      "mock: user text matches no input of scenario '" + cat.scenario_id + "'");
}

ProviderResponse MockProvider::attempt(const ProviderRequest& request, int attempt_no) {
  const ScriptKey key = resolve_key(request);
  auto it = script_.find(key);
  if (it == script_.end())
    throw ProviderError(ProviderErrorKind::configuration,
                        "mock: unscripted request key " + key_to_string(key));
  const ScriptedReply& reply = it->second;
  if (reply.always_fail) {
    if (reply.failures_before.empty())
      throw ProviderError(ProviderErrorKind::transport_error,
                          "mock: scripted permanent failure at " + key_to_string(key));
    ProviderErrorKind k =
        reply.failures_before[(attempt_no - 1) % reply.failures_before.size()];
    throw ProviderError(k, std::string("mock: scripted ") + provider_error_kind_name(k) + " at " +
                               key_to_string(key));
  }
  if (attempt_no <= static_cast<int>(reply.failures_before.size())) {
    ProviderErrorKind k = reply.failures_before[attempt_no - 1];
    throw ProviderError(k, std::string("mock: scripted ") + provider_error_kind_name(k) +
                               " on attempt " + std::to_string(attempt_no) + " at " +
                               key_to_string(key));
  }
  return reply.response;
}

Script oracle_perfect_script(const std::vector<ScenarioCatalog>& catalogs,
                             const std::vector<std::string>& models) {
  Script script;
  for (const auto& cat : catalogs) {
    const SelectorPrompt prompt = build_nlt_prompt(cat);
    for (const auto& model : models)
      for (const auto& in : cat.inputs)
        add_exact_answers(script, cat, model, in.id,
                          {in.expected_tools.begin(), in.expected_tools.end()}, prompt);
  }
  return script;
}

Script drop_one_script(const std::vector<ScenarioCatalog>& catalogs,
                       const std::vector<std::string>& models) {
  Script script;
  for (const auto& cat : catalogs) {
    const SelectorPrompt prompt = build_nlt_prompt(cat);
    for (const auto& model : models) {
      for (const auto& in : cat.inputs) {
        std::set<std::string> yes(in.expected_tools.begin(), in.expected_tools.end());
        for (const auto& t : cat.tools) {  // drop first expected tool in catalog order
          if (yes.erase(t.display_name)) break;
        }
        add_exact_answers(script, cat, model, in.id, yes, prompt);
      }
    }
  }
  return script;
}

Script load_script_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f)
    throw ProviderError(ProviderErrorKind::configuration,
                        "cannot open script file " + path.string());
  json doc;
  try {
    std::ostringstream buf;
    buf << f.rdbuf();
    doc = json::parse(buf.str());
  } catch (const json::exception& e) {
    throw ProviderError(ProviderErrorKind::configuration,
                        path.string() + ": not valid JSON: " + e.what());
  }
  if (!doc.is_object() || !doc.contains("replies") || !doc["replies"].is_array())
    throw ProviderError(ProviderErrorKind::configuration,
                        path.string() + ": expected an object with a 'replies' array");

  Script script;
  for (const auto& jr : doc["replies"]) {
    try {
      ScriptKey key{jr.at("model_id").get<std::string>(), jr.at("approach").get<std::string>(),
                    jr.at("scenario_id").get<std::string>(), jr.at("variant").get<std::string>(),
                    jr.at("input_id").get<int>()};
      ScriptedReply reply;
      if (jr.contains("failures_before"))
        for (const auto& name : jr["failures_before"])
          reply.failures_before.push_back(error_kind_from_name(name.get<std::string>()));
      if (jr.contains("always_fail")) reply.always_fail = jr["always_fail"].get<bool>();
      if (jr.contains("response")) {
        const auto& jresp = jr["response"];
        if (jresp.contains("content_text"))
          reply.response.content_text = jresp["content_text"].get<std::string>();
        if (jresp.contains("tool_calls"))
          for (const auto& name : jresp["tool_calls"])
            reply.response.tool_calls.push_back({name.get<std::string>()});
        if (jresp.contains("usage")) {
          const auto& ju = jresp["usage"];
          if (ju.contains("input_tokens") && ju.contains("output_tokens"))
            reply.response.usage =
                TokenUsage::full(ju["input_tokens"].get<long>(), ju["output_tokens"].get<long>());
          else if (ju.contains("total_tokens"))
            reply.response.usage = TokenUsage::total_only(ju["total_tokens"].get<long>());
        }
      }
      if (script.count(key))
        throw ProviderError(ProviderErrorKind::configuration,
                            "duplicate script key " + key_to_string(key));
      script[key] = std::move(reply);
    } catch (const json::exception& e) {
      throw ProviderError(ProviderErrorKind::configuration,
                          path.string() + ": malformed reply entry: " + e.what());
    }
  }
  return script;
}

Script resolve_script(const std::string& name_or_path,
                      const std::vector<ScenarioCatalog>& catalogs,
                      const std::vector<std::string>& models) {
  if (name_or_path == "oracle-perfect") return oracle_perfect_script(catalogs, models);
  if (name_or_path == "drop-one") return drop_one_script(catalogs, models);
  return load_script_file(name_or_path);
}

}  // namespace nlt
