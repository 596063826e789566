#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "nlt/catalog.hpp"
#include "nlt/provider.hpp"

namespace nlt {

// Experiment coordinates that identify one scripted exchange. The mock keys
// on everything that makes a trial distinct except the replication — so each
// replication of a trial replays the same exchange, as a deterministic model
// would.
struct ScriptKey {
  std::string model_id;
  std::string approach;  // "nlt" | "structured"
  std::string scenario_id;
  std::string variant;
  int input_id = 0;

  auto operator<=>(const ScriptKey&) const = default;
};

struct ScriptedReply {
  // Error kinds thrown on attempts 1..failures_before.size(); the response is
  // served from the next attempt on. Keyed by attempt ordinal, so the
  // sequence replays identically on every complete() for this key.
  std::vector<ProviderErrorKind> failures_before;
  // Every attempt fails (cycling failures_before); complete() will exhaust.
  bool always_fail = false;
  ProviderResponse response;
};

using Script = std::map<ScriptKey, ScriptedReply>;

// Deterministic scripted backend. Requests are resolved to keys by matching
// the system text against the rendered prompts of the given catalogs and the
// user text against their inputs; unscripted or unresolvable requests raise a
// configuration error rather than answering.
class MockProvider : public ChatBackend {
 public:
  MockProvider(Script script, std::vector<ScenarioCatalog> catalogs);

  ProviderResponse attempt(const ProviderRequest& request, int attempt_no) override;
  std::string name() const override { return "mock"; }

  ScriptKey resolve_key(const ProviderRequest& request) const;

 private:
  Script script_;
  std::vector<ScenarioCatalog> catalogs_;
  // system text -> (approach, catalog index)
  std::map<std::string, std::pair<std::string, std::size_t>> prompt_index_;
};

// Token-usage fixtures attached by the builtin scripts (per-trial means
// reported for the two approaches, split so totals equal their sums).
inline constexpr long kMockNltInputTokens = 563;
inline constexpr long kMockNltOutputTokens = 342;
inline constexpr long kMockStructuredInputTokens = 1070;
inline constexpr long kMockStructuredOutputTokens = 249;

// For every (model, approach, catalog, input): answer with exactly the
// expected tool set — a well-formed transcript for NLT, the expected
// tool_calls for structured. A full run over this script grades 1.0.
Script oracle_perfect_script(const std::vector<ScenarioCatalog>& catalogs,
                             const std::vector<std::string>& models);

// Like oracle_perfect_script but omits the first expected tool (catalog
// order) from every nonempty expected set, so exactly the zero-tool inputs
// still pass.
Script drop_one_script(const std::vector<ScenarioCatalog>& catalogs,
                       const std::vector<std::string>& models);

// Loads a script document: {"replies": [{model_id, approach, scenario_id,
// variant, input_id, failures_before?, always_fail?, response: {content_text?,
// tool_calls?, usage?}}]}. Usage may carry input+output, just total, or be
// absent (unreported).
Script load_script_file(const std::filesystem::path& path);

// Resolves --script arguments: the builtin names "oracle-perfect" and
// "drop-one", else a path to a script document.
Script resolve_script(const std::string& name_or_path,
                      const std::vector<ScenarioCatalog>& catalogs,
                      const std::vector<std::string>& models);

}  // namespace nlt
