#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nlt/catalog.hpp"
#include "nlt/provider.hpp"

namespace nlt {

// Default rewriter instruction. A config value, not a fixed protocol — pass
// your own profile to steer the rewrite.
extern const char* kDefaultRewriteInstruction;

struct PerturbedText {
  std::string perturbed;          // the rewriter's reply, byte-for-byte
  std::uint64_t original_checksum;  // binds the rewrite to its source text
};

// Sends `original` to the rewriter under the instruction profile and returns
// the reply verbatim — never edited. Empty rewrites and provider errors are
// errors. `model_id` names the rewriting model on the wire.
PerturbedText perturb_text(const std::string& original, ChatBackend& rewriter,
                           const std::string& model_id, const std::string& instruction_profile,
                           const RetryPolicy& policy = {}, const SleepFn& sleep = real_sleep());

enum class FindingKind { length_ratio, lost_name_mention, lost_negation };
const char* finding_kind_name(FindingKind kind);

struct Finding {
  FindingKind kind;
  std::string detail;
};

// Mechanical review of a rewritten tool description: length ratio outside
// [0.5, 2.0], a display-name mention that disappeared, or a lost negation
// keyword ("not", "excluding", "distinct"). Flags candidates for human
// review; it does not judge semantic fidelity.
std::vector<Finding> review_checklist(const ToolSpec& original, const ToolSpec& perturbed);

struct PerturbedCatalog {
  ScenarioCatalog catalog;  // variant = "perturbed"; inputs untouched
  // One findings list per tool, catalog order (possibly empty lists).
  std::vector<std::pair<std::string, std::vector<Finding>>> findings;
};

// Rewrites every tool description and preamble section of `original` through
// the rewriter, leaving inputs, expected sets, names, and slugs untouched.
PerturbedCatalog perturb_catalog(const ScenarioCatalog& original, ChatBackend& rewriter,
                                 const std::string& model_id,
                                 const std::string& instruction_profile,
                                 const RetryPolicy& policy = {},
                                 const SleepFn& sleep = real_sleep());

}  // namespace nlt
