#pragma once

#include <string>
#include <vector>

#include "nlt/catalog.hpp"
#include "nlt/nlparse.hpp"
#include "nlt/provider.hpp"

namespace nlt {

// Rendered NLT selector system prompt: role, mission, tool list, output
// description, and the worked output example ending in the terminator.
struct SelectorPrompt {
  std::string text;
  std::vector<std::string> tool_order;  // display names, catalog order
  std::string terminator;               // always kTerminator
};

struct StructuredPromptBundle {
  std::string system_text;
  std::vector<FunctionDef> function_defs;  // one per tool, catalog order
};

// Pure and deterministic: the same catalog always renders byte-identical
// text. The bundled catalogs render byte-identically to their golden files.
SelectorPrompt build_nlt_prompt(const ScenarioCatalog& catalog);
StructuredPromptBundle build_structured_bundle(const ScenarioCatalog& catalog);

// Renders a well-formed selector transcript for a decision map: the
// "Thinking:" line, one "<name> -- YES|NO" line per tool in prompt order,
// then the terminator. Round-trip oracle for the parser. Throws
// std::invalid_argument unless `decisions` covers exactly prompt.tool_order.
std::string emit_expected_transcript(const SelectorPrompt& prompt,
                                     const ToolDecisionSet& decisions,
                                     const std::string& thinking);

}  // namespace nlt
