#include "nlt/perturb.hpp"

#include <filesystem>
#include <map>

#include "doctest.h"
#include "nlt/catalog.hpp"
#include "nlt/util.hpp"

namespace {

const std::filesystem::path kCatalogDir = std::filesystem::path(NLT_REPO_DIR) / "data/catalogs";

// Rewriter test double with a canned reply per original text (prefix "RW: "
// when nothing specific is scripted).
class CannedRewriter : public nlt::ChatBackend {
 public:
  nlt::ProviderResponse attempt(const nlt::ProviderRequest& request, int) override {
    ++calls;
    last_system = request.system_text;
    last_model = request.model_id;
    nlt::ProviderResponse r;
    auto it = replies.find(request.user_text);
    r.content_text = it != replies.end() ? it->second : "RW: " + request.user_text;
    return r;
  }
  std::string name() const override { return "canned"; }

  std::map<std::string, std::string> replies;
  std::string last_system;
  std::string last_model;
  int calls = 0;
};

nlt::ToolSpec tool(const std::string& name, const std::string& description) {
  nlt::ToolSpec t;
  t.display_name = name;
  t.description = description;
  t.slug = nlt::slugify(name);
  return t;
}

}  // namespace

TEST_CASE("perturb_text returns the rewrite verbatim, bound to its source") {
  CannedRewriter rewriter;
  rewriter.replies["original words"] = "  different words  ";

  auto result = nlt::perturb_text("original words", rewriter, "rewriter-model",
                                  nlt::kDefaultRewriteInstruction, {}, nlt::no_sleep());
  // Byte-for-byte, surrounding whitespace included: never edited.
  CHECK(result.perturbed == "  different words  ");
  CHECK(result.original_checksum == nlt::fnv1a64("original words"));

  CHECK(rewriter.last_system == nlt::kDefaultRewriteInstruction);
  CHECK(rewriter.last_model == "rewriter-model");
}

TEST_CASE("perturb_text refuses empty originals and empty rewrites") {
  CannedRewriter rewriter;
  CHECK_THROWS_AS((void)nlt::perturb_text("", rewriter, "m", "instr", {}, nlt::no_sleep()),
                  std::invalid_argument);

  rewriter.replies["something"] = "   \n  ";
  CHECK_THROWS_AS(
      (void)nlt::perturb_text("something", rewriter, "m", "instr", {}, nlt::no_sleep()),
      std::runtime_error);
}

TEST_CASE("a custom instruction profile rides along as the system text") {
  CannedRewriter rewriter;
  (void)nlt::perturb_text("text", rewriter, "m", "Translate into pirate speak.", {},
                          nlt::no_sleep());
  CHECK(rewriter.last_system == "Translate into pirate speak.");
}

TEST_CASE("review_checklist passes a faithful rewrite silently") {
  auto original = tool("Order Status", "questions about the Order Status of a placed order");
  auto rewritten = original;
  rewritten.description = "anything regarding the Order Status of an existing purchase";
  CHECK(nlt::review_checklist(original, rewritten).empty());
}

TEST_CASE("review_checklist flags runaway length ratios") {
  auto original = tool("Order Status", "a modest description");
  auto shrunk = original;
  shrunk.description = "tiny";
  auto findings = nlt::review_checklist(original, shrunk);
  REQUIRE(findings.size() == 1);
  CHECK(findings[0].kind == nlt::FindingKind::length_ratio);

  auto bloated = original;
  bloated.description = std::string(200, 'x');
  findings = nlt::review_checklist(original, bloated);
  REQUIRE(findings.size() == 1);
  CHECK(findings[0].kind == nlt::FindingKind::length_ratio);

  // Exactly at the boundary is acceptable.
  auto doubled = original;
  doubled.description = original.description + original.description;
  CHECK(nlt::review_checklist(original, doubled).empty());
}

TEST_CASE("review_checklist flags a lost display-name mention") {
  auto original = tool("Past Purchases", "look up the customer's Past Purchases on file");
  auto rewritten = original;
  rewritten.description = "look up the customer's order history on file";
  auto findings = nlt::review_checklist(original, rewritten);
  REQUIRE(findings.size() == 1);
  CHECK(findings[0].kind == nlt::FindingKind::lost_name_mention);
  CHECK(findings[0].detail.find("Past Purchases") != std::string::npos);

  // Case changes are not a loss.
  rewritten.description = "look up the customer's PAST PURCHASES on file";
  CHECK(nlt::review_checklist(original, rewritten).empty());

  // No mention in the original means nothing to lose.
  auto unnamed = tool("Past Purchases", "look up order history");
  auto still_unnamed = unnamed;
  still_unnamed.description = "fetch prior orders";
  CHECK(nlt::review_checklist(unnamed, still_unnamed).empty());
}

TEST_CASE("review_checklist flags lost negation keywords, whole words only") {
  auto original = tool("Available discounts", "active discounts, not including expired codes");
  auto rewritten = original;
  rewritten.description = "active discounts, including expired codes";
  auto findings = nlt::review_checklist(original, rewritten);
  REQUIRE(findings.size() == 1);
  CHECK(findings[0].kind == nlt::FindingKind::lost_negation);
  CHECK(findings[0].detail.find("'not'") != std::string::npos);

  // "nothing" does not count as "not": word boundaries matter both ways.
  auto tricky = tool("Available discounts", "there is nothing to redeem");
  auto tricky_rewrite = tricky;
  tricky_rewrite.description = "no codes can be redeemed";
  CHECK(nlt::review_checklist(tricky, tricky_rewrite).empty());

  // Losing several keywords yields one finding each.
  auto dense = tool("Returns", "not the same, excluding weekends, distinct from refunds");
  auto flattened = dense;
  flattened.description = "different from refunds on weekdays";
  auto multi = nlt::review_checklist(dense, flattened);
  CHECK(multi.size() == 3);
}

TEST_CASE("review_checklist refuses to compare different tools") {
  CHECK_THROWS_AS((void)nlt::review_checklist(tool("A", "x"), tool("B", "x")),
                  std::invalid_argument);
}

TEST_CASE("perturb_catalog rewrites prose and nothing else") {
  auto original = nlt::load_catalog_file(kCatalogDir / "alex_original.json");
  CannedRewriter rewriter;

  auto result = nlt::perturb_catalog(original, rewriter, "rw-model",
                                     nlt::kDefaultRewriteInstruction, {}, nlt::no_sleep());
  const auto& cat = result.catalog;

  CHECK(cat.scenario_id == original.scenario_id);
  CHECK(cat.variant == "perturbed");
  CHECK(!cat.corpus_anomaly);

  // Every preamble section and every description went through the rewriter.
  CHECK(cat.nlt.role == "RW: " + original.nlt.role);
  CHECK(cat.nlt.mission == "RW: " + original.nlt.mission);
  CHECK(cat.nlt.output_description == "RW: " + original.nlt.output_description);
  CHECK(cat.structured.final_instruction == "RW: " + original.structured.final_instruction);
  REQUIRE(cat.tools.size() == original.tools.size());
  for (std::size_t i = 0; i < cat.tools.size(); ++i) {
    CHECK(cat.tools[i].description == "RW: " + original.tools[i].description);
    // Identity axes never move.
    CHECK(cat.tools[i].display_name == original.tools[i].display_name);
    CHECK(cat.tools[i].slug == original.tools[i].slug);
    CHECK(!cat.tools[i].structured_description.has_value());
    CHECK(!cat.tools[i].corpus_anomaly);
  }
  // 12 preamble sections + 7 tool descriptions.
  CHECK(rewriter.calls == 12 + 7);

  // Inputs are the controlled variable: byte-identical, expected sets intact.
  REQUIRE(cat.inputs.size() == original.inputs.size());
  for (std::size_t i = 0; i < cat.inputs.size(); ++i) {
    CHECK(cat.inputs[i].id == original.inputs[i].id);
    CHECK(cat.inputs[i].text == original.inputs[i].text);
    CHECK(cat.inputs[i].expected_tools == original.inputs[i].expected_tools);
  }

  // One findings list per tool, in catalog order.
  REQUIRE(result.findings.size() == cat.tools.size());
  for (std::size_t i = 0; i < result.findings.size(); ++i)
    CHECK(result.findings[i].first == cat.tools[i].display_name);

  // The rewritten catalog still validates and agrees with its source.
  auto reparsed = nlt::parse_catalog_json(nlt::catalog_to_json(cat), "perturbed");
  CHECK_NOTHROW(nlt::check_variant_agreement(original, reparsed));
}

TEST_CASE("perturb_catalog surfaces checklist findings per tool") {
  auto original = nlt::load_catalog_file(kCatalogDir / "alex_original.json");
  CannedRewriter rewriter;
  // Collapse the first tool's description to something suspiciously short.
  rewriter.replies[original.tools[0].description] = "eh";

  auto result = nlt::perturb_catalog(original, rewriter, "rw", "instr", {}, nlt::no_sleep());
  REQUIRE(!result.findings.empty());
  const auto& first = result.findings[0];
  CHECK(first.first == original.tools[0].display_name);
  bool has_ratio = false;
  for (const auto& f : first.second)
    if (f.kind == nlt::FindingKind::length_ratio) has_ratio = true;
  CHECK(has_ratio);
}
