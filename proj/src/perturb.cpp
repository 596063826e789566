#include "nlt/perturb.hpp"

#include <cstdio>
#include <stdexcept>

#include "nlt/util.hpp"

namespace nlt {

const char* kDefaultRewriteInstruction =
    "Rewrite the text the user sends, maintaining its overall purpose and structure while "
    "changing the wording. Reply with the rewritten text only.";

PerturbedText perturb_text(const std::string& original, ChatBackend& rewriter,
                           const std::string& model_id, const std::string& instruction_profile,
                           const RetryPolicy& policy, const SleepFn& sleep) {
  if (original.empty()) throw std::invalid_argument("perturb_text: original is empty");
  ProviderRequest req;
  req.model_id = model_id;
  req.system_text = instruction_profile;
  req.user_text = original;
  const ProviderResponse resp = complete(rewriter, req, policy, sleep);
  if (trim(resp.content_text).empty())
    throw std::runtime_error("perturb_text: rewriter returned empty text");
  return {resp.content_text, fnv1a64(original)};
}

const char* finding_kind_name(FindingKind kind) {
  switch (kind) {
    case FindingKind::length_ratio: return "length_ratio";
    case FindingKind::lost_name_mention: return "lost_name_mention";
    case FindingKind::lost_negation: return "lost_negation";
  }
  return "?";
}

namespace {

bool contains_ci(const std::string& haystack, const std::string& needle) {
  return to_lower(haystack).find(to_lower(needle)) != std::string::npos;
}

// Standalone-word check ("not" must not fire on "nothing").
bool contains_word_ci(const std::string& text, const std::string& word) {
  const std::string hay = to_lower(text);
  const std::string w = to_lower(word);
  std::size_t pos = 0;
  auto is_word_char = [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
  };
  while ((pos = hay.find(w, pos)) != std::string::npos) {
    const bool left_ok = pos == 0 || !is_word_char(hay[pos - 1]);
    const std::size_t end = pos + w.size();
    const bool right_ok = end >= hay.size() || !is_word_char(hay[end]);
    if (left_ok && right_ok) return true;
    pos += 1;
  }
  return false;
}

}  // namespace

std::vector<Finding> review_checklist(const ToolSpec& original, const ToolSpec& perturbed) {
  if (original.display_name != perturbed.display_name)
    throw std::invalid_argument("review_checklist: tools must share a display name");

  std::vector<Finding> findings;
  const double ratio = original.description.empty()
                           ? 0.0
                           : static_cast<double>(perturbed.description.size()) /
                                 static_cast<double>(original.description.size());
  if (ratio < 0.5 || ratio > 2.0) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", ratio);
    findings.push_back({FindingKind::length_ratio,
                        "length ratio " + std::string(buf) + " outside [0.5, 2.0]"});
  }
  if (contains_ci(original.description, original.display_name) &&
      !contains_ci(perturbed.description, perturbed.display_name)) {
    findings.push_back({FindingKind::lost_name_mention,
                        "original mentions '" + original.display_name + "', rewrite does not"});
  }
  for (const char* word : {"not", "excluding", "distinct"}) {
    if (contains_word_ci(original.description, word) &&
        !contains_word_ci(perturbed.description, word)) {
      findings.push_back(
          {FindingKind::lost_negation, std::string("negation keyword '") + word + "' lost"});
    }
  }
  return findings;
}

PerturbedCatalog perturb_catalog(const ScenarioCatalog& original, ChatBackend& rewriter,
                                 const std::string& model_id,
                                 const std::string& instruction_profile,
                                 const RetryPolicy& policy, const SleepFn& sleep) {
  auto rewrite = [&](const std::string& text) {
    return perturb_text(text, rewriter, model_id, instruction_profile, policy, sleep).perturbed;
  };

  PerturbedCatalog out;
  out.catalog = original;
  out.catalog.variant = "perturbed";
  out.catalog.corpus_anomaly = false;

  out.catalog.nlt.role = rewrite(original.nlt.role);
  out.catalog.nlt.mission = rewrite(original.nlt.mission);
  out.catalog.nlt.list_intro = rewrite(original.nlt.list_intro);
  out.catalog.nlt.output_description = rewrite(original.nlt.output_description);
  out.catalog.nlt.format_intro = rewrite(original.nlt.format_intro);
  out.catalog.structured.role = rewrite(original.structured.role);
  out.catalog.structured.mission = rewrite(original.structured.mission);
  out.catalog.structured.instructions = rewrite(original.structured.instructions);
  out.catalog.structured.reasoning_instruction = rewrite(original.structured.reasoning_instruction);
  out.catalog.structured.list_intro = rewrite(original.structured.list_intro);
  out.catalog.structured.closing = rewrite(original.structured.closing);
  out.catalog.structured.final_instruction = rewrite(original.structured.final_instruction);

  for (std::size_t i = 0; i < original.tools.size(); ++i) {
    ToolSpec& t = out.catalog.tools[i];
    // Names, slugs, and expected sets are fixed; only descriptions move.
    t.description = rewrite(original.tools[i].description);
    t.structured_description.reset();
    t.corpus_anomaly = false;
    out.findings.emplace_back(t.display_name, review_checklist(original.tools[i], t));
  }
  return out;
}

}  // namespace nlt
