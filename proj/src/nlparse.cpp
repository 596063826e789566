#include "nlt/nlparse.hpp"

#include <algorithm>
#include <numeric>

#include "nlt/util.hpp"

namespace nlt {

const char* diagnostic_kind_name(DiagnosticKind kind) {
  switch (kind) {
    case DiagnosticKind::missing_tool: return "missing_tool";
    case DiagnosticKind::duplicate_tool: return "duplicate_tool";
    case DiagnosticKind::ambiguous_verdict: return "ambiguous_verdict";
    case DiagnosticKind::unknown_verdict: return "unknown_verdict";
    case DiagnosticKind::missing_terminator: return "missing_terminator";
    case DiagnosticKind::unknown_slug: return "unknown_slug";
    case DiagnosticKind::trailing_text: return "trailing_text";
    case DiagnosticKind::missing_thinking: return "missing_thinking";
    case DiagnosticKind::unrecognized_line: return "unrecognized_line";
  }
  return "?";
}

const char* grade_reason_name(GradeReason reason) {
  switch (reason) {
    case GradeReason::exact_match: return "exact_match";
    case GradeReason::set_mismatch: return "set_mismatch";
    case GradeReason::parse_failure: return "parse_failure";
  }
  return "?";
}

namespace {

// Accepted name/verdict separators, longest first so "--" is not consumed as
// "-". The en/em dashes are their UTF-8 byte sequences.
constexpr std::string_view kSeparators[] = {"--", "\xe2\x80\x93", "\xe2\x80\x94", ":", "-"};

bool is_alnum(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

// Collapses runs of spaces/tabs to a single space; name matching tolerates
// whitespace jitter but nothing fuzzier.
std::string collapse_ws(std::string_view s) {
  std::string out;
  bool pending = false;
  for (char c : s) {
    if (c == ' ' || c == '\t') {
      pending = true;
      continue;
    }
    if (pending && !out.empty()) out += ' ';
    pending = false;
    out += c;
  }
  return out;
}

enum class VerdictToken { yes, no, ambiguous, unknown };

// Scans the post-separator region for standalone YES/NO words. Both present
// (e.g. the template's literal "YES/NO") is ambiguous, never a verdict.
VerdictToken scan_verdict(std::string_view region) {
  bool saw_yes = false, saw_no = false;
  std::size_t i = 0;
  while (i < region.size()) {
    if (!is_alnum(region[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < region.size() && is_alnum(region[j])) ++j;
    std::string_view tok = region.substr(i, j - i);
    if (iequals(tok, "yes")) saw_yes = true;
    if (iequals(tok, "no")) saw_no = true;
    i = j;
  }
  if (saw_yes && saw_no) return VerdictToken::ambiguous;
  if (saw_yes) return VerdictToken::yes;
  if (saw_no) return VerdictToken::no;
  return VerdictToken::unknown;
}

struct ToolLineMatch {
  std::size_t tool_index;
  VerdictToken verdict;
};

// A tool line is <name> <separator> <verdict region>, all case-insensitive,
// whitespace collapsed. A name with no following separator is not a tool line.
std::optional<ToolLineMatch> match_tool_line(const std::string& collapsed,
                                             const std::vector<std::string>& tool_order,
                                             const std::vector<std::string>& tool_norm,
                                             const std::vector<std::size_t>& by_length) {
  for (std::size_t k : by_length) {
    const std::string& name = tool_norm[k];
    if (collapsed.size() <= name.size()) continue;
    if (!iequals(std::string_view(collapsed).substr(0, name.size()), name)) continue;
    std::string_view rest = std::string_view(collapsed).substr(name.size());
    if (!rest.empty() && is_alnum(rest.front())) continue;  // name continues as a word
    while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
    for (std::string_view sep : kSeparators) {
      if (rest.substr(0, sep.size()) != sep) continue;
      std::string_view region = rest.substr(sep.size());
      return ToolLineMatch{k, scan_verdict(region)};
    }
    // Matched a known name but no separator: fall through and try shorter
    // names (an overlapping name may still match), else unrecognized.
  }
  (void)tool_order;
  return std::nullopt;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      if (!cur.empty() && cur.back() == '\r') cur.pop_back();
      lines.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) {
    if (cur.back() == '\r') cur.pop_back();
    lines.push_back(std::move(cur));
  }
  return lines;
}

}  // namespace

ParseOutcome parse_selector(const std::string& transcript,
                            const std::vector<std::string>& tool_order, ParseMode mode) {
  if (tool_order.empty()) throw std::invalid_argument("parse_selector: tool_order must be nonempty");
  const bool strict = mode == ParseMode::strict;

  std::vector<std::string> tool_norm;
  tool_norm.reserve(tool_order.size());
  for (const auto& n : tool_order) tool_norm.push_back(collapse_ws(trim(n)));
  std::vector<std::size_t> by_length(tool_order.size());
  std::iota(by_length.begin(), by_length.end(), std::size_t{0});
  std::stable_sort(by_length.begin(), by_length.end(), [&](std::size_t a, std::size_t b) {
    return tool_norm[a].size() > tool_norm[b].size();
  });

  ParseOutcome out;
  std::vector<int> occurrences(tool_order.size(), 0);
  std::vector<std::optional<Verdict>> decided(tool_order.size());

  bool body_started = false;     // a tool line has been seen
  bool thinking_started = false;
  bool capturing_thinking = false;
  std::vector<std::string> thinking_lines;
  bool trailing_noted = false;

  const std::vector<std::string> lines = split_lines(transcript);
  for (std::size_t idx = 0; idx < lines.size(); ++idx) {
    const int line_no = static_cast<int>(idx) + 1;
    const std::string_view trimmed = trim(lines[idx]);

    if (out.terminator_seen) {
      if (!trimmed.empty() && !trailing_noted) {
        out.diagnostics.push_back({line_no, DiagnosticKind::trailing_text,
                                   "content after terminator ignored", false});
        trailing_noted = true;
      }
      continue;
    }

    if (trimmed.empty()) {
      if (capturing_thinking) thinking_lines.emplace_back();
      continue;
    }

    if (iequals(trimmed, kTerminator)) {
      out.terminator_seen = true;
      capturing_thinking = false;
      continue;
    }

    const std::string collapsed = collapse_ws(trimmed);
    if (auto m = match_tool_line(collapsed, tool_order, tool_norm, by_length)) {
      capturing_thinking = false;
      body_started = true;
      const std::size_t k = m->tool_index;
      if (++occurrences[k] > 1)
        out.diagnostics.push_back({line_no, DiagnosticKind::duplicate_tool,
                                   "'" + tool_order[k] + "' appears again", strict});
      switch (m->verdict) {
        case VerdictToken::ambiguous:
          out.diagnostics.push_back({line_no, DiagnosticKind::ambiguous_verdict,
                                     "'" + tool_order[k] + "' carries both YES and NO", strict});
          break;
        case VerdictToken::unknown:
          out.diagnostics.push_back({line_no, DiagnosticKind::unknown_verdict,
                                     "'" + tool_order[k] + "' has no YES/NO token", strict});
          break;
        case VerdictToken::yes:
        case VerdictToken::no:
          if (!decided[k])
            decided[k] = m->verdict == VerdictToken::yes ? Verdict::yes : Verdict::no;
          break;
      }
      continue;
    }

    if (!body_started) {
      if (!thinking_started && iequals(trimmed.substr(0, 9), "thinking:")) {
        thinking_started = true;
        capturing_thinking = true;
        thinking_lines.emplace_back(trim(trimmed.substr(9)));
        continue;
      }
      if (capturing_thinking) {
        thinking_lines.emplace_back(trimmed);
        continue;
      }
    }
    out.diagnostics.push_back(
        {line_no, DiagnosticKind::unrecognized_line, std::string(trimmed.substr(0, 60)), false});
  }

  for (std::size_t k = 0; k < tool_order.size(); ++k) {
    if (occurrences[k] == 0)
      out.diagnostics.push_back(
          {0, DiagnosticKind::missing_tool, "no line for '" + tool_order[k] + "'", strict});
  }
  if (!out.terminator_seen)
    out.diagnostics.push_back({0, DiagnosticKind::missing_terminator,
                               std::string("transcript never says \"") + kTerminator + "\"",
                               strict});
  if (!thinking_started)
    out.diagnostics.push_back({0, DiagnosticKind::missing_thinking, "no Thinking: block", false});

  if (thinking_started) {
    std::string joined;
    for (std::size_t i = 0; i < thinking_lines.size(); ++i) {
      if (i) joined += "\n";
      joined += thinking_lines[i];
    }
    out.thinking = std::string(trim(joined));
  }

  for (const auto& d : out.diagnostics) {
    if (d.fatal) {
      out.failure = ParseFailure{d.kind, d.detail};
      break;
    }
  }
  if (!out.failure) {
    ToolDecisionSet set;
    for (std::size_t k = 0; k < tool_order.size(); ++k)
      set.decisions[tool_order[k]] = decided[k].value_or(Verdict::no);
    out.decisions = std::move(set);
  }
  return out;
}

ParseOutcome parse_structured(const std::vector<std::string>& tool_calls,
                              const ScenarioCatalog& catalog, ParseMode mode) {
  const bool strict = mode == ParseMode::strict;
  ParseOutcome out;
  std::set<std::string> called;  // canonical display names
  for (std::size_t i = 0; i < tool_calls.size(); ++i) {
    const int pos = static_cast<int>(i) + 1;
    const ToolSpec* t = catalog.find_slug(trim(tool_calls[i]));
    if (!t) {
      // A slug we never declared: the model hallucinated a function.
      out.diagnostics.push_back(
          {pos, DiagnosticKind::unknown_slug, "'" + tool_calls[i] + "'", strict});
      continue;
    }
    if (!called.insert(t->display_name).second)
      out.diagnostics.push_back({pos, DiagnosticKind::duplicate_tool,
                                 "'" + t->display_name + "' called again", false});
  }

  for (const auto& d : out.diagnostics) {
    if (d.fatal) {
      out.failure = ParseFailure{d.kind, d.detail};
      break;
    }
  }
  if (!out.failure) {
    ToolDecisionSet set;
    for (const auto& t : catalog.tools)
      set.decisions[t.display_name] = called.count(t.display_name) ? Verdict::yes : Verdict::no;
    out.decisions = std::move(set);
  }
  return out;
}

GradeResult grade(const ParseOutcome& parsed, const std::set<std::string>& expected) {
  if (!parsed.ok()) return {false, GradeReason::parse_failure};
  if (parsed.decisions->yes_set() == expected) return {true, GradeReason::exact_match};
  return {false, GradeReason::set_mismatch};
}

}  // namespace nlt
