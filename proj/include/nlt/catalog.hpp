#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nlt {

// One selectable tool. `description` is the natural-language usage guidance
// shared verbatim by both approaches (the parity rule). The structured_*
// fields exist only because the corpus contains two flagged anomalies where
// the structured prompt's text diverges from the shared description; normal
// tools leave them at their defaults.
struct ToolSpec {
  std::string display_name;
  std::string description;
  std::string slug;  // structured-mode function name, e.g. "check_talk_to_a_human"

  // Verb in the structured prompt's function line:
  //   "check_x: For X (description)". Perturbed prompts vary it per tool.
  std::string structured_connector = "For";
  // Verbatim override of the structured prompt/function description; set only
  // on corpus_anomaly tools.
  std::optional<std::string> structured_description;
  bool corpus_anomaly = false;

  const std::string& wire_description() const {
    return structured_description ? *structured_description : description;
  }
};

struct ChatInput {
  int id = 0;
  std::string text;                         // sent verbatim, typos included
  std::vector<std::string> expected_tools;  // ground-truth display names; may be empty
};

// Preamble sections for the NLT selector prompt, in render order.
struct NltPreamble {
  std::string role;
  std::string mission;
  std::string list_intro;
  std::string output_description;
  std::string format_intro;
};

// Preamble sections for the structured-approach system prompt, in render order.
struct StructuredPreamble {
  std::string role;
  std::string mission;
  std::string instructions;
  std::string reasoning_instruction;
  std::string list_intro;
  std::string closing;
  std::string final_instruction;
};

class CatalogError : public std::runtime_error {
 public:
  explicit CatalogError(const std::string& what) : std::runtime_error(what) {}
};

struct ScenarioCatalog {
  std::string scenario_id;  // open set; "alex" and "sage" carry pinned tool counts
  std::string variant;      // "original" | "perturbed"
  bool corpus_anomaly = false;
  NltPreamble nlt;
  StructuredPreamble structured;
  std::vector<ToolSpec> tools;     // prompt order is this order, verbatim
  std::vector<ChatInput> inputs;   // exactly 16, ids 1..16

  // Case-insensitive lookup; nullptr when absent.
  const ToolSpec* find_tool(std::string_view display_name) const;
  const ToolSpec* find_slug(std::string_view slug) const;
  const ChatInput* find_input(int id) const;

  // Canonical content fingerprint (stable across key order / whitespace of the
  // source file); used in run manifests.
  std::uint64_t checksum() const;
};

// "Talk to a Human" -> "check_talk_to_a_human": lowercase, collapse runs of
// non-alphanumerics to single underscores, prefix "check_".
std::string slugify(std::string_view display_name);

// Parses and validates one catalog document. `origin` names the source (file
// path) for error messages.
ScenarioCatalog parse_catalog_json(const std::string& json_text, const std::string& origin);

ScenarioCatalog load_catalog_file(const std::filesystem::path& path);

// Loads every *.json in the directory (sorted by filename), validates each
// catalog and the cross-variant agreement invariants between original and
// perturbed variants of the same scenario.
std::vector<ScenarioCatalog> load_catalog_dir(const std::filesystem::path& dir);

// Throws CatalogError unless the two variants of a scenario agree on tool
// names, input ids, input texts, and expected sets.
void check_variant_agreement(const ScenarioCatalog& a, const ScenarioCatalog& b);

// Ground-truth set for one input. Throws CatalogError on unknown id.
std::set<std::string> expected_set(const ScenarioCatalog& catalog, int input_id);

struct InputMix {
  int zero = 0;
  int single = 0;
  int multi = 0;
};

// Partition of the inputs by |expected_tools| in {0, 1, >=2}.
InputMix input_mix(const ScenarioCatalog& catalog);

// Serializes back to the catalog document schema (used by the perturb CLI).
std::string catalog_to_json(const ScenarioCatalog& catalog);

}  // namespace nlt
