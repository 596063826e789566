#include "nlt/promptgen.hpp"

#include <stdexcept>

namespace nlt {

// Whitespace conventions here are pinned by the golden files: sections are
// separated by blank lines, list entries by single newlines, and the text
// ends with exactly one trailing newline. Do not "tidy" them.

SelectorPrompt build_nlt_prompt(const ScenarioCatalog& catalog) {
  SelectorPrompt p;
  p.terminator = kTerminator;

  std::string& s = p.text;
  s = catalog.nlt.role;
  s += "\n\n";
  s += catalog.nlt.mission;
  s += "\n\n";
  s += catalog.nlt.list_intro;
  s += "\n\n";
  for (std::size_t i = 0; i < catalog.tools.size(); ++i) {
    if (i) s += "\n";
    s += catalog.tools[i].display_name;
    s += " (";
    s += catalog.tools[i].description;
    s += ")";
  }
  s += "\n\n";
  s += catalog.nlt.output_description;
  s += "\n\n";
  s += catalog.nlt.format_intro;
  s += "\n\n";
  s += "Thinking: (insert_thinking)\n";
  for (const auto& t : catalog.tools) {
    s += t.display_name;
    s += " -- YES/NO\n";
    p.tool_order.push_back(t.display_name);
  }
  s += kTerminator;
  s += "\n";
  return p;
}

StructuredPromptBundle build_structured_bundle(const ScenarioCatalog& catalog) {
  StructuredPromptBundle b;

  std::string& s = b.system_text;
  s = catalog.structured.role;
  s += "\n\n";
  s += catalog.structured.mission;
  s += "\n\n";
  s += catalog.structured.instructions;
  s += "\n\n";
  s += catalog.structured.reasoning_instruction;
  s += "\n\n";
  s += catalog.structured.list_intro;
  s += "\n\n";
  for (std::size_t i = 0; i < catalog.tools.size(); ++i) {
    const ToolSpec& t = catalog.tools[i];
    if (i) s += "\n";
    s += t.slug;
    s += ": ";
    s += t.structured_connector;
    s += " ";
    s += t.display_name;
    s += " (";
    s += t.wire_description();
    s += ")";
  }
  s += "\n\n";
  s += catalog.structured.closing;
  s += "\n\n";
  s += catalog.structured.final_instruction;
  s += "\n";

  for (const auto& t : catalog.tools)
    b.function_defs.push_back({t.slug, t.wire_description()});
  return b;
}

std::string emit_expected_transcript(const SelectorPrompt& prompt,
                                     const ToolDecisionSet& decisions,
                                     const std::string& thinking) {
  if (decisions.decisions.size() != prompt.tool_order.size())
    throw std::invalid_argument("emit_expected_transcript: decisions must cover every tool");
  std::string s = "Thinking: " + thinking + "\n";
  for (const auto& name : prompt.tool_order) {
    auto it = decisions.decisions.find(name);
    if (it == decisions.decisions.end())
      throw std::invalid_argument("emit_expected_transcript: no decision for tool '" + name + "'");
    s += name;
    s += " -- ";
    s += it->second == Verdict::yes ? "YES" : "NO";
    s += "\n";
  }
  s += prompt.terminator;
  s += "\n";
  return s;
}

}  // namespace nlt
