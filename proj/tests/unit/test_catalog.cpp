#include "nlt/catalog.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "json.hpp"

namespace {

const std::filesystem::path kCatalogDir = std::filesystem::path(NLT_REPO_DIR) / "data/catalogs";

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json load_doc(const std::string& name) {
  return nlohmann::json::parse(read_file(kCatalogDir / name));
}

// Minimal-but-valid catalog document for mutation tests: two tools, sixteen
// inputs, all preamble sections present.
nlohmann::json tiny_doc() {
  nlohmann::json doc;
  doc["scenario_id"] = "tiny";
  doc["variant"] = "original";
  doc["preambles"]["nlt"] = {{"role", "You are a helper."},
                             {"mission", "Decide."},
                             {"list_intro", "Tools:"},
                             {"output_description", "Answer YES or NO."},
                             {"format_intro", "Format:"}};
  doc["preambles"]["structured"] = {{"role", "You are a helper."},
                                    {"mission", "Decide."},
                                    {"instructions", "Call functions."},
                                    {"reasoning_instruction", "Reason first."},
                                    {"list_intro", "Functions:"},
                                    {"closing", "Only listed functions."},
                                    {"final_instruction", "Go."}};
  doc["tools"] = nlohmann::json::array(
      {{{"display_name", "Order Status"},
        {"description", "current order state"},
        {"slug", "check_order_status"}},
       {{"display_name", "Store Hours"},
        {"description", "opening times"},
        {"slug", "check_store_hours"}}});
  doc["inputs"] = nlohmann::json::array();
  for (int i = 1; i <= 16; ++i) {
    nlohmann::json in;
    in["id"] = i;
    in["text"] = "message " + std::to_string(i);
    in["expected_tools"] = (i % 2 == 0)
                               ? nlohmann::json::array({"Order Status"})
                               : nlohmann::json::array();
    doc["inputs"].push_back(in);
  }
  return doc;
}

nlt::ScenarioCatalog parse_doc(const nlohmann::json& doc) {
  return nlt::parse_catalog_json(doc.dump(), "test");
}

}  // namespace

TEST_CASE("slugify lowercases and collapses non-alphanumeric runs") {
  CHECK(nlt::slugify("Talk to a Human") == "check_talk_to_a_human");
  CHECK(nlt::slugify("Website information") == "check_website_information");
  CHECK(nlt::slugify("Recap of previous conversation") ==
        "check_recap_of_previous_conversation");
  // Runs of separators collapse to one underscore; edge runs drop entirely.
  CHECK(nlt::slugify("FAQ -- Returns & Refunds") == "check_faq_returns_refunds");
  CHECK(nlt::slugify("  padded  ") == "check_padded");
  CHECK(nlt::slugify("Self-help (beta)") == "check_self_help_beta");
  CHECK(nlt::slugify("a1 b2") == "check_a1_b2");
}

TEST_CASE("bundled catalogs load and expose the pinned shape") {
  auto catalogs = nlt::load_catalog_dir(kCatalogDir);
  REQUIRE(catalogs.size() == 4);

  std::set<std::pair<std::string, std::string>> keys;
  for (const auto& c : catalogs) keys.insert({c.scenario_id, c.variant});
  CHECK(keys == std::set<std::pair<std::string, std::string>>{{"alex", "original"},
                                                              {"alex", "perturbed"},
                                                              {"sage", "original"},
                                                              {"sage", "perturbed"}});

  for (const auto& c : catalogs) {
    CHECK(c.inputs.size() == 16);
    if (c.scenario_id == "alex") CHECK(c.tools.size() == 7);
    if (c.scenario_id == "sage") CHECK(c.tools.size() == 8);
    // Every slug is exactly what slugify derives from the display name.
    for (const auto& t : c.tools) CHECK(t.slug == nlt::slugify(t.display_name));
    // Expected sets reference catalog tools byte-exactly.
    for (const auto& in : c.inputs)
      for (const auto& name : in.expected_tools) {
        const auto* t = c.find_tool(name);
        REQUIRE(t != nullptr);
        CHECK(t->display_name == name);
      }
  }
}

TEST_CASE("input mix matches the study design") {
  auto catalogs = nlt::load_catalog_dir(kCatalogDir);
  for (const auto& c : catalogs) {
    auto mix = nlt::input_mix(c);
    CHECK(mix.zero + mix.single + mix.multi == 16);
    if (c.scenario_id == "alex") {
      CHECK(mix.zero == 2);
      CHECK(mix.single == 7);
      CHECK(mix.multi == 7);
    } else {
      CHECK(mix.zero == 4);
      CHECK(mix.single == 5);
      CHECK(mix.multi == 7);
    }
  }
}

TEST_CASE("lookups are case-insensitive and miss cleanly") {
  auto doc = tiny_doc();
  auto cat = parse_doc(doc);

  const auto* t = cat.find_tool("order status");
  REQUIRE(t != nullptr);
  CHECK(t->display_name == "Order Status");
  CHECK(cat.find_tool("ORDER STATUS") == t);
  CHECK(cat.find_tool("no such tool") == nullptr);

  const auto* s = cat.find_slug("CHECK_STORE_HOURS");
  REQUIRE(s != nullptr);
  CHECK(s->display_name == "Store Hours");
  CHECK(cat.find_slug("check_unknown") == nullptr);

  REQUIRE(cat.find_input(7) != nullptr);
  CHECK(cat.find_input(7)->id == 7);
  CHECK(cat.find_input(0) == nullptr);
  CHECK(cat.find_input(17) == nullptr);
}

TEST_CASE("expected_set copies ground truth and rejects unknown ids") {
  auto cat = parse_doc(tiny_doc());
  CHECK(nlt::expected_set(cat, 2) == std::set<std::string>{"Order Status"});
  CHECK(nlt::expected_set(cat, 1).empty());
  CHECK_THROWS_AS((void)nlt::expected_set(cat, 99), nlt::CatalogError);
}

TEST_CASE("validation rejects malformed documents with located errors") {
  SUBCASE("not json at all") {
    CHECK_THROWS_AS((void)nlt::parse_catalog_json("{nope", "bad"), nlt::CatalogError);
  }
  SUBCASE("missing scenario_id") {
    auto doc = tiny_doc();
    doc.erase("scenario_id");
    CHECK_THROWS_WITH_AS(parse_doc(doc), doctest::Contains("scenario_id"), nlt::CatalogError);
  }
  SUBCASE("variant outside the enum") {
    auto doc = tiny_doc();
    doc["variant"] = "remixed";
    CHECK_THROWS_WITH_AS(parse_doc(doc), doctest::Contains("variant"), nlt::CatalogError);
  }
  SUBCASE("unknown top-level key") {
    auto doc = tiny_doc();
    doc["extra"] = 1;
    CHECK_THROWS_WITH_AS(parse_doc(doc), doctest::Contains("extra"), nlt::CatalogError);
  }
  SUBCASE("slug disagrees with display name") {
    auto doc = tiny_doc();
    doc["tools"][0]["slug"] = "check_wrong";
    CHECK_THROWS_WITH_AS(parse_doc(doc), doctest::Contains("slug"), nlt::CatalogError);
  }
  SUBCASE("duplicate tool names") {
    auto doc = tiny_doc();
    doc["tools"][1]["display_name"] = "Order Status";
    doc["tools"][1]["slug"] = "check_order_status";
    CHECK_THROWS_AS(parse_doc(doc), nlt::CatalogError);
  }
  SUBCASE("wrong input count") {
    auto doc = tiny_doc();
    doc["inputs"].erase(15);
    CHECK_THROWS_WITH_AS(parse_doc(doc), doctest::Contains("16"), nlt::CatalogError);
  }
  SUBCASE("duplicate input id") {
    auto doc = tiny_doc();
    doc["inputs"][1]["id"] = 1;
    CHECK_THROWS_AS(parse_doc(doc), nlt::CatalogError);
  }
  SUBCASE("expected tool missing from the catalog") {
    auto doc = tiny_doc();
    doc["inputs"][0]["expected_tools"] = {"Imaginary"};
    CHECK_THROWS_WITH_AS(parse_doc(doc), doctest::Contains("Imaginary"), nlt::CatalogError);
  }
  SUBCASE("expected tool with wrong casing is rejected, not coerced") {
    auto doc = tiny_doc();
    doc["inputs"][1]["expected_tools"] = {"order status"};
    CHECK_THROWS_AS(parse_doc(doc), nlt::CatalogError);
  }
  SUBCASE("duplicate entry in an expected set") {
    auto doc = tiny_doc();
    doc["inputs"][1]["expected_tools"] = {"Order Status", "Order Status"};
    CHECK_THROWS_AS(parse_doc(doc), nlt::CatalogError);
  }
  SUBCASE("structured_description without the anomaly flag") {
    auto doc = tiny_doc();
    doc["tools"][0]["structured_description"] = "different text";
    CHECK_THROWS_WITH_AS(parse_doc(doc), doctest::Contains("corpus_anomaly"),
                         nlt::CatalogError);
  }
  SUBCASE("alex must carry exactly seven tools") {
    auto doc = tiny_doc();
    doc["scenario_id"] = "alex";
    CHECK_THROWS_WITH_AS(parse_doc(doc), doctest::Contains("7"), nlt::CatalogError);
  }
}

TEST_CASE("variant agreement catches drifted corpora") {
  auto a = parse_doc(tiny_doc());

  auto doc_b = tiny_doc();
  doc_b["variant"] = "perturbed";
  doc_b["preambles"]["nlt"]["role"] = "Reworded role.";
  auto b = parse_doc(doc_b);
  CHECK_NOTHROW(nlt::check_variant_agreement(a, b));

  SUBCASE("renamed tool") {
    auto bad = tiny_doc();
    bad["variant"] = "perturbed";
    bad["tools"][1]["display_name"] = "Shop Hours";
    bad["tools"][1]["slug"] = "check_shop_hours";
    // Fix the expected sets so the document itself still validates.
    CHECK_THROWS_AS(nlt::check_variant_agreement(a, parse_doc(bad)), nlt::CatalogError);
  }
  SUBCASE("edited input text") {
    auto bad = tiny_doc();
    bad["variant"] = "perturbed";
    bad["inputs"][4]["text"] = "tampered";
    CHECK_THROWS_AS(nlt::check_variant_agreement(a, parse_doc(bad)), nlt::CatalogError);
  }
  SUBCASE("changed expected set") {
    auto bad = tiny_doc();
    bad["variant"] = "perturbed";
    bad["inputs"][0]["expected_tools"] = {"Store Hours"};
    CHECK_THROWS_AS(nlt::check_variant_agreement(a, parse_doc(bad)), nlt::CatalogError);
  }
}

TEST_CASE("checksum is content-derived, not formatting-derived") {
  auto doc = tiny_doc();
  auto a = parse_doc(doc);
  // Reserialize with different indentation/key order; same content.
  auto reparsed = nlt::parse_catalog_json(doc.dump(4), "test");
  CHECK(a.checksum() == reparsed.checksum());

  auto changed = tiny_doc();
  changed["tools"][0]["description"] = "current order state!";
  CHECK(a.checksum() != parse_doc(changed).checksum());
}

TEST_CASE("catalog_to_json round-trips through the parser") {
  for (const char* name :
       {"alex_original.json", "alex_perturbed.json", "sage_original.json",
        "sage_perturbed.json"}) {
    CAPTURE(name);
    auto original = nlt::load_catalog_file(kCatalogDir / name);
    auto text = nlt::catalog_to_json(original);
    auto reparsed = nlt::parse_catalog_json(text, name);
    CHECK(original.checksum() == reparsed.checksum());
    CHECK(original.scenario_id == reparsed.scenario_id);
    CHECK(original.tools.size() == reparsed.tools.size());
  }
}

TEST_CASE("load_catalog_dir rejects duplicate coordinates") {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path() / "nlt_catalog_dup_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto doc = tiny_doc();
  std::ofstream(dir / "a.json") << doc.dump(2);
  std::ofstream(dir / "b.json") << doc.dump(2);
  CHECK_THROWS_WITH_AS((void)nlt::load_catalog_dir(dir), doctest::Contains("duplicate"),
                       nlt::CatalogError);
  fs::remove_all(dir);
}

TEST_CASE("corpus anomaly tools surface their structured override") {
  auto catalogs = nlt::load_catalog_dir(kCatalogDir);
  const nlt::ScenarioCatalog* alex_perturbed = nullptr;
  for (const auto& c : catalogs)
    if (c.scenario_id == "alex" && c.variant == "perturbed") alex_perturbed = &c;
  REQUIRE(alex_perturbed != nullptr);
  CHECK(alex_perturbed->corpus_anomaly);

  int flagged = 0;
  for (const auto& t : alex_perturbed->tools)
    if (t.corpus_anomaly) {
      ++flagged;
      REQUIRE(t.structured_description.has_value());
      CHECK(t.wire_description() == *t.structured_description);
      CHECK(t.wire_description() != t.description);
    } else {
      CHECK(t.wire_description() == t.description);
    }
  CHECK(flagged >= 1);
}
