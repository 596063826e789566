#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nlt/catalog.hpp"

namespace nlt {

enum class Verdict { yes, no };

// One YES/NO decision per tool, keyed by canonical display name. The map is
// the approach-agnostic meeting point: selector transcripts and structured
// tool_calls both reduce to this before grading.
struct ToolDecisionSet {
  std::map<std::string, Verdict> decisions;

  std::set<std::string> yes_set() const {
    std::set<std::string> out;
    for (const auto& [name, v] : decisions)
      if (v == Verdict::yes) out.insert(name);
    return out;
  }

  bool operator==(const ToolDecisionSet&) const = default;
};

enum class ParseMode { strict, lenient };

enum class DiagnosticKind {
  // Fatal in strict mode (the ParseFailure kinds):
  missing_tool,
  duplicate_tool,
  ambiguous_verdict,  // line carries both YES and NO as standalone tokens
  unknown_verdict,
  missing_terminator,  // selector transcripts, strict only
  unknown_slug,        // structured tool_calls, strict only
  // Always informational:
  trailing_text,      // content after the terminator, ignored
  missing_thinking,   // no "Thinking:" block found
  unrecognized_line,  // line matched no tool and is outside the thinking block
};

const char* diagnostic_kind_name(DiagnosticKind kind);

struct Diagnostic {
  int line_no = 0;  // 1-based; 0 when no line applies (e.g. missing_tool)
  DiagnosticKind kind;
  std::string detail;
  bool fatal = false;
};

struct ParseFailure {
  DiagnosticKind kind;
  std::string detail;
};

struct ParseOutcome {
  // Engaged iff no fatal diagnostic was recorded.
  std::optional<ToolDecisionSet> decisions;
  std::optional<ParseFailure> failure;  // first fatal diagnostic
  std::optional<std::string> thinking;
  bool terminator_seen = false;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return decisions.has_value(); }
  std::set<std::string> yes_set() const {
    return decisions ? decisions->yes_set() : std::set<std::string>{};
  }
};

inline constexpr const char* kTerminator = "Assessment finished.";

// Parses a Stage-1 selector transcript. Tool names and YES/NO tokens match
// case-insensitively; accepted name/verdict separators are "--", "-",
// en dash, em dash, and ":". Strict mode demands every tool exactly once with
// an unambiguous verdict plus the terminator line; lenient mode never fails —
// missing tools default to NO and defects become non-fatal diagnostics.
ParseOutcome parse_selector(const std::string& transcript,
                            const std::vector<std::string>& tool_order, ParseMode mode);

// Parses structured-approach tool_calls (function-name slugs) against a
// catalog. Uncalled tools are NO; duplicate calls collapse with a diagnostic;
// unknown slugs are fatal in strict mode, dropped with a diagnostic in
// lenient mode.
ParseOutcome parse_structured(const std::vector<std::string>& tool_calls,
                              const ScenarioCatalog& catalog, ParseMode mode);

enum class GradeReason { exact_match, set_mismatch, parse_failure };

const char* grade_reason_name(GradeReason reason);

struct GradeResult {
  bool pass = false;
  GradeReason reason = GradeReason::parse_failure;
};

// Exact-match grading: pass iff the outcome parsed and its YES-set equals the
// expected set. No partial credit. Total — never throws.
GradeResult grade(const ParseOutcome& parsed, const std::set<std::string>& expected);

}  // namespace nlt
