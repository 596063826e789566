#include "nlt/catalog.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "nlt/util.hpp"

using nlohmann::json;

namespace nlt {

namespace {

[[noreturn]] void fail(const std::string& origin, const std::string& where, const std::string& what) {
  throw CatalogError(origin + ": " + where + ": " + what);
}

const json& require_key(const json& obj, const char* key, const std::string& origin,
                        const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(origin, where, std::string("missing required key '") + key + "'");
  return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& origin,
                           const std::string& where) {
  const json& v = require_key(obj, key, origin, where);
  if (!v.is_string()) fail(origin, where + "." + key, "expected a string");
  return v.get<std::string>();
}

int require_int(const json& obj, const char* key, const std::string& origin,
                const std::string& where) {
  const json& v = require_key(obj, key, origin, where);
  if (!v.is_number_integer()) fail(origin, where + "." + key, "expected an integer");
  return v.get<int>();
}

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> known,
                         const std::string& origin, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = std::any_of(known.begin(), known.end(),
                          [&](const char* k) { return it.key() == k; });
    if (!ok) fail(origin, where, "unknown key '" + it.key() + "'");
  }
}

}  // namespace

const ToolSpec* ScenarioCatalog::find_tool(std::string_view display_name) const {
  for (const auto& t : tools)
    if (iequals(t.display_name, display_name)) return &t;
  return nullptr;
}

const ToolSpec* ScenarioCatalog::find_slug(std::string_view slug) const {
  for (const auto& t : tools)
    if (iequals(t.slug, slug)) return &t;
  return nullptr;
}

const ChatInput* ScenarioCatalog::find_input(int id) const {
  for (const auto& in : inputs)
    if (in.id == id) return &in;
  return nullptr;
}

std::string slugify(std::string_view display_name) {
  std::string body;
  bool pending_sep = false;
  for (char c : display_name) {
    bool alnum = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
    if (alnum) {
      if (pending_sep && !body.empty()) body += '_';
      pending_sep = false;
      body += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
    } else {
      pending_sep = true;  // runs of separators collapse; edge runs drop
    }
  }
  return "check_" + body;
}

ScenarioCatalog parse_catalog_json(const std::string& json_text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw CatalogError(origin + ": not valid JSON: " + e.what());
  }
  if (!doc.is_object()) fail(origin, "$", "catalog document must be an object");
  reject_unknown_keys(doc, {"scenario_id", "variant", "corpus_anomaly", "preambles", "tools", "inputs"},
                      origin, "$");

  ScenarioCatalog cat;
  cat.scenario_id = require_string(doc, "scenario_id", origin, "$");
  if (cat.scenario_id.empty()) fail(origin, "$.scenario_id", "must be nonempty");
  cat.variant = require_string(doc, "variant", origin, "$");
  if (cat.variant != "original" && cat.variant != "perturbed")
    fail(origin, "$.variant", "must be 'original' or 'perturbed', got '" + cat.variant + "'");
  if (doc.contains("corpus_anomaly")) {
    if (!doc["corpus_anomaly"].is_boolean()) fail(origin, "$.corpus_anomaly", "expected a boolean");
    cat.corpus_anomaly = doc["corpus_anomaly"].get<bool>();
  }

  const json& pre = require_key(doc, "preambles", origin, "$");
  if (!pre.is_object()) fail(origin, "$.preambles", "expected an object");
  reject_unknown_keys(pre, {"nlt", "structured"}, origin, "$.preambles");
  const json& pn = require_key(pre, "nlt", origin, "$.preambles");
  reject_unknown_keys(pn, {"role", "mission", "list_intro", "output_description", "format_intro"},
                      origin, "$.preambles.nlt");
  cat.nlt.role = require_string(pn, "role", origin, "$.preambles.nlt");
  cat.nlt.mission = require_string(pn, "mission", origin, "$.preambles.nlt");
  cat.nlt.list_intro = require_string(pn, "list_intro", origin, "$.preambles.nlt");
  cat.nlt.output_description = require_string(pn, "output_description", origin, "$.preambles.nlt");
  cat.nlt.format_intro = require_string(pn, "format_intro", origin, "$.preambles.nlt");
  const json& ps = require_key(pre, "structured", origin, "$.preambles");
  reject_unknown_keys(ps,
                      {"role", "mission", "instructions", "reasoning_instruction", "list_intro",
                       "closing", "final_instruction"},
                      origin, "$.preambles.structured");
  cat.structured.role = require_string(ps, "role", origin, "$.preambles.structured");
  cat.structured.mission = require_string(ps, "mission", origin, "$.preambles.structured");
  cat.structured.instructions = require_string(ps, "instructions", origin, "$.preambles.structured");
  cat.structured.reasoning_instruction =
      require_string(ps, "reasoning_instruction", origin, "$.preambles.structured");
  cat.structured.list_intro = require_string(ps, "list_intro", origin, "$.preambles.structured");
  cat.structured.closing = require_string(ps, "closing", origin, "$.preambles.structured");
  cat.structured.final_instruction =
      require_string(ps, "final_instruction", origin, "$.preambles.structured");

  const json& tools = require_key(doc, "tools", origin, "$");
  if (!tools.is_array() || tools.empty()) fail(origin, "$.tools", "expected a nonempty array");
  for (std::size_t i = 0; i < tools.size(); ++i) {
    const std::string where = "$.tools[" + std::to_string(i) + "]";
    const json& jt = tools[i];
    if (!jt.is_object()) fail(origin, where, "expected an object");
    reject_unknown_keys(jt,
                        {"display_name", "description", "slug", "structured_connector",
                         "structured_description", "corpus_anomaly"},
                        origin, where);
    ToolSpec t;
    t.display_name = require_string(jt, "display_name", origin, where);
    if (t.display_name.empty()) fail(origin, where + ".display_name", "must be nonempty");
    t.description = require_string(jt, "description", origin, where);
    if (t.description.empty()) fail(origin, where + ".description", "must be nonempty");
    t.slug = require_string(jt, "slug", origin, where);
    const std::string derived = slugify(t.display_name);
    if (t.slug != derived)
      fail(origin, where + ".slug",
           "'" + t.slug + "' does not match derived slug '" + derived + "'");
    if (jt.contains("structured_connector"))
      t.structured_connector = require_string(jt, "structured_connector", origin, where);
    if (t.structured_connector.empty())
      fail(origin, where + ".structured_connector", "must be nonempty");
    if (jt.contains("corpus_anomaly")) {
      if (!jt["corpus_anomaly"].is_boolean())
        fail(origin, where + ".corpus_anomaly", "expected a boolean");
      t.corpus_anomaly = jt["corpus_anomaly"].get<bool>();
    }
    if (jt.contains("structured_description")) {
      t.structured_description = require_string(jt, "structured_description", origin, where);
      // Approach parity: the structured text may diverge from the shared
      // description only on explicitly flagged anomaly tools.
      if (!t.corpus_anomaly && *t.structured_description != t.description)
        fail(origin, where,
             "structured_description diverges from description without corpus_anomaly flag");
    }
    for (const auto& prev : cat.tools) {
      if (iequals(prev.display_name, t.display_name))
        fail(origin, where + ".display_name", "duplicate tool '" + t.display_name + "'");
      if (prev.slug == t.slug) fail(origin, where + ".slug", "duplicate slug '" + t.slug + "'");
    }
    cat.tools.push_back(std::move(t));
  }

  // Tool-count invariants for the two reserved scenario ids.
  if (cat.scenario_id == "alex" && cat.tools.size() != 7)
    fail(origin, "$.tools", "scenario 'alex' must have exactly 7 tools, got " +
                                std::to_string(cat.tools.size()));
  if (cat.scenario_id == "sage" && cat.tools.size() != 8)
    fail(origin, "$.tools", "scenario 'sage' must have exactly 8 tools, got " +
                                std::to_string(cat.tools.size()));

  const json& inputs = require_key(doc, "inputs", origin, "$");
  if (!inputs.is_array()) fail(origin, "$.inputs", "expected an array");
  if (inputs.size() != 16)
    fail(origin, "$.inputs", "expected exactly 16 inputs, got " + std::to_string(inputs.size()));
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const std::string where = "$.inputs[" + std::to_string(i) + "]";
    const json& ji = inputs[i];
    if (!ji.is_object()) fail(origin, where, "expected an object");
    reject_unknown_keys(ji, {"id", "text", "expected_tools"}, origin, where);
    ChatInput in;
    in.id = require_int(ji, "id", origin, where);
    if (in.id < 1 || in.id > 16)
      fail(origin, where + ".id", "must be in 1..16, got " + std::to_string(in.id));
    if (cat.find_input(in.id)) fail(origin, where + ".id", "duplicate id " + std::to_string(in.id));
    in.text = require_string(ji, "text", origin, where);
    if (in.text.empty()) fail(origin, where + ".text", "must be nonempty");
    const json& exp = require_key(ji, "expected_tools", origin, where);
    if (!exp.is_array()) fail(origin, where + ".expected_tools", "expected an array");
    for (const auto& e : exp) {
      if (!e.is_string()) fail(origin, where + ".expected_tools", "entries must be strings");
      const std::string name = e.get<std::string>();
      // Byte-exact membership: grading compares canonical display names.
      bool known = std::any_of(cat.tools.begin(), cat.tools.end(),
                               [&](const ToolSpec& t) { return t.display_name == name; });
      if (!known)
        fail(origin, where + ".expected_tools", "references unknown tool '" + name + "'");
      if (std::find(in.expected_tools.begin(), in.expected_tools.end(), name) !=
          in.expected_tools.end())
        fail(origin, where + ".expected_tools", "duplicate entry '" + name + "'");
      in.expected_tools.push_back(name);
    }
    cat.inputs.push_back(std::move(in));
  }

  return cat;
}

ScenarioCatalog load_catalog_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw CatalogError(path.string() + ": cannot open file");
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_catalog_json(buf.str(), path.string());
}

void check_variant_agreement(const ScenarioCatalog& a, const ScenarioCatalog& b) {
  const std::string ctx = "scenario '" + a.scenario_id + "' (" + a.variant + " vs " + b.variant + ")";
  if (a.scenario_id != b.scenario_id)
    throw CatalogError("variant agreement check across different scenarios");
  if (a.tools.size() != b.tools.size())
    throw CatalogError(ctx + ": tool counts differ");
  for (std::size_t i = 0; i < a.tools.size(); ++i) {
    if (a.tools[i].display_name != b.tools[i].display_name)
      throw CatalogError(ctx + ": tool " + std::to_string(i) + " name mismatch: '" +
                         a.tools[i].display_name + "' vs '" + b.tools[i].display_name + "'");
  }
  if (a.inputs.size() != b.inputs.size()) throw CatalogError(ctx + ": input counts differ");
  for (std::size_t i = 0; i < a.inputs.size(); ++i) {
    const ChatInput& x = a.inputs[i];
    const ChatInput& y = b.inputs[i];
    if (x.id != y.id)
      throw CatalogError(ctx + ": input " + std::to_string(i) + " id mismatch");
    if (x.text != y.text)
      throw CatalogError(ctx + ": input " + std::to_string(x.id) +
                         " text differs between variants (inputs are never perturbed)");
    std::set<std::string> ex(x.expected_tools.begin(), x.expected_tools.end());
    std::set<std::string> ey(y.expected_tools.begin(), y.expected_tools.end());
    if (ex != ey)
      throw CatalogError(ctx + ": input " + std::to_string(x.id) + " expected sets differ");
  }
}

std::vector<ScenarioCatalog> load_catalog_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw CatalogError(dir.string() + ": not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json")
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw CatalogError(dir.string() + ": no catalog files (*.json)");

  std::vector<ScenarioCatalog> cats;
  for (const auto& p : files) cats.push_back(load_catalog_file(p));

  std::map<std::pair<std::string, std::string>, const ScenarioCatalog*> seen;
  for (const auto& c : cats) {
    auto key = std::make_pair(c.scenario_id, c.variant);
    if (seen.count(key))
      throw CatalogError(dir.string() + ": duplicate catalog for scenario '" + c.scenario_id +
                         "' variant '" + c.variant + "'");
    seen[key] = &c;
  }
  for (const auto& c : cats) {
    if (c.variant != "original") continue;
    auto it = seen.find({c.scenario_id, "perturbed"});
    if (it != seen.end()) check_variant_agreement(c, *it->second);
  }
  return cats;
}

std::set<std::string> expected_set(const ScenarioCatalog& catalog, int input_id) {
  const ChatInput* in = catalog.find_input(input_id);
  if (!in)
    throw CatalogError("scenario '" + catalog.scenario_id + "': unknown input id " +
                       std::to_string(input_id));
  return std::set<std::string>(in->expected_tools.begin(), in->expected_tools.end());
}

InputMix input_mix(const ScenarioCatalog& catalog) {
  InputMix mix;
  for (const auto& in : catalog.inputs) {
    if (in.expected_tools.empty())
      ++mix.zero;
    else if (in.expected_tools.size() == 1)
      ++mix.single;
    else
      ++mix.multi;
  }
  return mix;
}

namespace {

json catalog_to_json_value(const ScenarioCatalog& c) {
  json doc;
  doc["scenario_id"] = c.scenario_id;
  doc["variant"] = c.variant;
  if (c.corpus_anomaly) doc["corpus_anomaly"] = true;
  doc["preambles"]["nlt"] = {{"role", c.nlt.role},
                             {"mission", c.nlt.mission},
                             {"list_intro", c.nlt.list_intro},
                             {"output_description", c.nlt.output_description},
                             {"format_intro", c.nlt.format_intro}};
  doc["preambles"]["structured"] = {{"role", c.structured.role},
                                    {"mission", c.structured.mission},
                                    {"instructions", c.structured.instructions},
                                    {"reasoning_instruction", c.structured.reasoning_instruction},
                                    {"list_intro", c.structured.list_intro},
                                    {"closing", c.structured.closing},
                                    {"final_instruction", c.structured.final_instruction}};
  doc["tools"] = json::array();
  for (const auto& t : c.tools) {
    json jt;
    jt["display_name"] = t.display_name;
    jt["description"] = t.description;
    jt["slug"] = t.slug;
    if (t.structured_connector != "For") jt["structured_connector"] = t.structured_connector;
    if (t.structured_description) jt["structured_description"] = *t.structured_description;
    if (t.corpus_anomaly) jt["corpus_anomaly"] = true;
    doc["tools"].push_back(std::move(jt));
  }
  doc["inputs"] = json::array();
  for (const auto& in : c.inputs) {
    doc["inputs"].push_back(
        {{"id", in.id}, {"text", in.text}, {"expected_tools", in.expected_tools}});
  }
  return doc;
}

}  // namespace

std::uint64_t ScenarioCatalog::checksum() const {
  return fnv1a64(catalog_to_json_value(*this).dump());
}

std::string catalog_to_json(const ScenarioCatalog& catalog) {
  return catalog_to_json_value(catalog).dump(2) + "\n";
}

}  // namespace nlt
