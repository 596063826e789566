#include "nlt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "nlt/promptgen.hpp"
#include "nlt/util.hpp"

using nlohmann::json;

namespace nlt {

const char* approach_name(Approach approach) {
  return approach == Approach::nlt ? "nlt" : "structured";
}

Approach approach_from_name(const std::string& name) {
  if (name == "nlt") return Approach::nlt;
  if (name == "structured") return Approach::structured;
  throw std::invalid_argument("unknown approach '" + name + "' (want nlt|structured)");
}

std::vector<TrialSpec> plan_run(const std::vector<std::string>& models, int replications,
                                const std::vector<ScenarioCatalog>& catalogs,
                                const PlanFilter& filter) {
  if (models.empty()) throw std::invalid_argument("plan_run: no models");
  if (replications < 1) throw std::invalid_argument("plan_run: replications must be >= 1");
  if (catalogs.empty()) throw std::invalid_argument("plan_run: no catalogs");

  auto keep = [](const auto& allow, const auto& value) {
    return allow.empty() || std::find(allow.begin(), allow.end(), value) != allow.end();
  };

  // scenario -> variant -> sorted input ids. "original" sorts before
  // "perturbed", which is exactly the intended variant order.
  std::map<std::string, std::map<std::string, std::vector<int>>> domain;
  for (const auto& cat : catalogs) {
    if (!keep(filter.scenarios, cat.scenario_id) || !keep(filter.variants, cat.variant)) continue;
    std::vector<int> ids;
    for (const auto& in : cat.inputs)
      if (keep(filter.input_ids, in.id)) ids.push_back(in.id);
    std::sort(ids.begin(), ids.end());
    domain[cat.scenario_id][cat.variant] = std::move(ids);
  }

  std::vector<Approach> approaches;
  for (Approach a : {Approach::nlt, Approach::structured})
    if (keep(filter.approaches, a)) approaches.push_back(a);

  std::vector<TrialSpec> plan;
  for (const auto& model : models)
    for (Approach approach : approaches)
      for (const auto& [scenario, variants] : domain)
        for (const auto& [variant, ids] : variants)
          for (int id : ids)
            for (int rep = 1; rep <= replications; ++rep)
              plan.push_back({model, approach, scenario, variant, id, rep});

  if (plan.empty()) throw std::invalid_argument("plan_run: filters leave an empty plan");
  return plan;
}

TrialRecord grade_trial(const TrialSpec& spec, const ProviderResponse& response,
                        const ScenarioCatalog& catalog) {
  TrialRecord rec;
  rec.spec = spec;
  rec.raw_output = response.content_text;
  rec.expected = expected_set(catalog, spec.input_id);
  rec.usage = response.usage;
  rec.attempts = response.attempts;
  rec.timestamp = iso8601_utc_now();

  ParseOutcome outcome;
  if (spec.approach == Approach::nlt) {
    std::vector<std::string> tool_order;
    for (const auto& t : catalog.tools) tool_order.push_back(t.display_name);
    outcome = parse_selector(response.content_text, tool_order, ParseMode::strict);
  } else {
    std::vector<std::string> names;
    for (const auto& call : response.tool_calls) names.push_back(call.name);
    rec.tool_calls_raw = names;
    outcome = parse_structured(names, catalog, ParseMode::strict);
  }

  if (outcome.ok())
    rec.parsed_yes = outcome.yes_set();
  else
    rec.parse_failure = diagnostic_kind_name(outcome.failure->kind);

  const GradeResult g = grade(outcome, rec.expected);
  rec.pass = g.pass;
  rec.reason = g.reason;
  return rec;
}

namespace {

TrialRecord errored_record(const TrialSpec& spec, const ScenarioCatalog& catalog,
                           const ProviderError& e) {
  TrialRecord rec;
  rec.spec = spec;
  rec.status = "errored";
  rec.expected = expected_set(catalog, spec.input_id);
  rec.pass = false;
  rec.attempts = e.attempts();
  rec.timestamp = iso8601_utc_now();
  rec.error = std::string(provider_error_kind_name(e.kind())) + ": " + e.what();
  return rec;
}

json usage_to_json(const TokenUsage& usage) {
  switch (usage.state) {
    case TokenUsage::State::unreported:
      return json{{"state", "unreported"}};
    case TokenUsage::State::partial:
      return json{{"state", "partial"}, {"total_tokens", usage.total_tokens}};
    case TokenUsage::State::full:
      return json{{"state", "full"},
                  {"input_tokens", usage.input_tokens},
                  {"output_tokens", usage.output_tokens},
                  {"total_tokens", usage.total_tokens}};
  }
  return json{{"state", "unreported"}};
}

TokenUsage usage_from_json(const json& ju) {
  const std::string state = ju.at("state").get<std::string>();
  if (state == "full")
    return TokenUsage::full(ju.at("input_tokens").get<long>(),
                            ju.at("output_tokens").get<long>());
  if (state == "partial") return TokenUsage::total_only(ju.at("total_tokens").get<long>());
  return TokenUsage::none();
}

json record_to_json_value(const TrialRecord& r, bool with_clock) {
  json doc;
  doc["spec"] = {{"model_id", r.spec.model_id},
                 {"approach", approach_name(r.spec.approach)},
                 {"scenario_id", r.spec.scenario_id},
                 {"variant", r.spec.variant},
                 {"input_id", r.spec.input_id},
                 {"replication", r.spec.replication}};
  doc["status"] = r.status;
  doc["raw_output"] = r.raw_output;
  doc["tool_calls_raw"] = r.tool_calls_raw ? json(*r.tool_calls_raw) : json(nullptr);
  doc["parsed_yes"] =
      r.parsed_yes ? json(std::vector<std::string>(r.parsed_yes->begin(), r.parsed_yes->end()))
                   : json(nullptr);
  doc["parse_failure"] = r.parse_failure ? json(*r.parse_failure) : json(nullptr);
  doc["expected"] = std::vector<std::string>(r.expected.begin(), r.expected.end());
  doc["pass"] = r.pass;
  doc["reason"] = r.reason ? json(grade_reason_name(*r.reason)) : json(nullptr);
  doc["usage"] = usage_to_json(r.usage);
  doc["attempts"] = r.attempts;
  doc["error"] = r.error.empty() ? json(nullptr) : json(r.error);
  if (with_clock) {
    doc["latency_ms"] = r.latency_ms;
    doc["timestamp"] = r.timestamp;
  }
  return doc;
}

}  // namespace

std::string trial_record_to_json(const TrialRecord& record) {
  return record_to_json_value(record, true).dump();
}

std::string record_identity(const TrialRecord& record) {
  return record_to_json_value(record, false).dump();
}

TrialRecord trial_record_from_json(const std::string& line) {
  json doc;
  try {
    doc = json::parse(line);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("bad trial record line: ") + e.what());
  }
  try {
    TrialRecord r;
    const json& js = doc.at("spec");
    r.spec.model_id = js.at("model_id").get<std::string>();
    r.spec.approach = approach_from_name(js.at("approach").get<std::string>());
    r.spec.scenario_id = js.at("scenario_id").get<std::string>();
    r.spec.variant = js.at("variant").get<std::string>();
    r.spec.input_id = js.at("input_id").get<int>();
    r.spec.replication = js.at("replication").get<int>();
    r.status = doc.at("status").get<std::string>();
    r.raw_output = doc.at("raw_output").get<std::string>();
    if (!doc.at("tool_calls_raw").is_null())
      r.tool_calls_raw = doc["tool_calls_raw"].get<std::vector<std::string>>();
    if (!doc.at("parsed_yes").is_null()) {
      auto v = doc["parsed_yes"].get<std::vector<std::string>>();
      r.parsed_yes = std::set<std::string>(v.begin(), v.end());
    }
    if (!doc.at("parse_failure").is_null())
      r.parse_failure = doc["parse_failure"].get<std::string>();
    auto ev = doc.at("expected").get<std::vector<std::string>>();
    r.expected = std::set<std::string>(ev.begin(), ev.end());
    r.pass = doc.at("pass").get<bool>();
    if (!doc.at("reason").is_null()) {
      const std::string name = doc["reason"].get<std::string>();
      for (GradeReason g : {GradeReason::exact_match, GradeReason::set_mismatch,
                            GradeReason::parse_failure})
        if (name == grade_reason_name(g)) r.reason = g;
      if (!r.reason) throw std::runtime_error("unknown grade reason '" + name + "'");
    }
    r.usage = usage_from_json(doc.at("usage"));
    r.attempts = doc.at("attempts").get<int>();
    if (!doc.at("error").is_null()) r.error = doc["error"].get<std::string>();
    if (doc.contains("latency_ms")) r.latency_ms = doc["latency_ms"].get<double>();
    if (doc.contains("timestamp")) r.timestamp = doc["timestamp"].get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("bad trial record line: ") + e.what());
  }
}

std::vector<TrialRecord> load_trial_log(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open trial log " + path.string());
  std::vector<TrialRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      records.push_back(trial_record_from_json(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

std::uint64_t plan_hash(const std::vector<TrialSpec>& plan) {
  std::string blob;
  for (const auto& s : plan) {
    blob += s.model_id;
    blob += '|';
    blob += approach_name(s.approach);
    blob += '|';
    blob += s.scenario_id;
    blob += '|';
    blob += s.variant;
    blob += '|';
    blob += std::to_string(s.input_id);
    blob += '|';
    blob += std::to_string(s.replication);
    blob += '\n';
  }
  return fnv1a64(blob);
}

std::filesystem::path execute_run(const std::vector<TrialSpec>& plan,
                                  const std::vector<ScenarioCatalog>& catalogs,
                                  ChatBackend& backend, const RunConfig& config) {
  if (plan.empty()) throw std::invalid_argument("execute_run: empty plan");

  std::map<std::pair<std::string, std::string>, const ScenarioCatalog*> by_coord;
  for (const auto& cat : catalogs) by_coord[{cat.scenario_id, cat.variant}] = &cat;

  struct PreparedPrompts {
    SelectorPrompt selector;
    StructuredPromptBundle structured;
  };
  std::map<const ScenarioCatalog*, PreparedPrompts> prompts;
  for (const auto& spec : plan) {
    auto it = by_coord.find({spec.scenario_id, spec.variant});
    if (it == by_coord.end())
      throw std::invalid_argument("execute_run: no catalog for scenario '" + spec.scenario_id +
                                  "' variant '" + spec.variant + "'");
    const ScenarioCatalog* cat = it->second;
    if (!prompts.count(cat))
      prompts.emplace(cat, PreparedPrompts{build_nlt_prompt(*cat), build_structured_bundle(*cat)});
    if (!cat->find_input(spec.input_id))
      throw std::invalid_argument("execute_run: scenario '" + spec.scenario_id +
                                  "' has no input " + std::to_string(spec.input_id));
  }

  std::filesystem::create_directories(config.out_dir);
  const std::filesystem::path log_path = config.out_dir / "trials.jsonl";
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw std::runtime_error("cannot open " + log_path.string() + " for writing");

  std::mutex log_mutex;
  std::atomic<std::size_t> next{0};
  std::mutex fail_mutex;
  std::exception_ptr fatal;

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= plan.size()) return;
      const TrialSpec& spec = plan[i];
      const ScenarioCatalog* cat = by_coord.at({spec.scenario_id, spec.variant});
      const PreparedPrompts& pp = prompts.at(cat);

      ProviderRequest req;
      req.model_id = spec.model_id;
      req.user_text = cat->find_input(spec.input_id)->text;
      if (spec.approach == Approach::nlt) {
        req.system_text = pp.selector.text;
      } else {
        req.system_text = pp.structured.system_text;
        req.function_defs = pp.structured.function_defs;
      }

      try {
        const auto t0 = std::chrono::steady_clock::now();
        TrialRecord rec;
        try {
          ProviderResponse resp = complete(backend, req, config.policy, config.sleep);
          rec = grade_trial(spec, resp, *cat);
        } catch (const ProviderError& e) {
          rec = errored_record(spec, *cat, e);
        }
        rec.latency_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
        const std::string line = trial_record_to_json(rec);
        std::lock_guard<std::mutex> lock(log_mutex);
        log << line << "\n";
        log.flush();  // one record = one atomic append
      } catch (...) {
        std::lock_guard<std::mutex> lock(fail_mutex);
        if (!fatal) fatal = std::current_exception();
        return;
      }
    }
  };

  const int n_workers =
      std::max(1, std::min<int>(config.workers, static_cast<int>(plan.size())));
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (fatal) std::rethrow_exception(fatal);

  json manifest;
  manifest["created_at"] = iso8601_utc_now();
  manifest["backend"] = backend.name();
  manifest["workers"] = n_workers;
  manifest["n_trials"] = plan.size();
  manifest["plan_hash"] = hex64(plan_hash(plan));
  manifest["log"] = "trials.jsonl";
  {
    std::set<std::string> models;
    for (const auto& s : plan) models.insert(s.model_id);
    manifest["models"] = models;
  }
  manifest["retry_policy"] = {
      {"max_attempts", config.policy.max_attempts},
      {"backoff_base_ms", config.policy.backoff.base.count()},
      {"backoff_factor", config.policy.backoff.factor},
      {"backoff_cap_ms", config.policy.backoff.cap.count()},
  };
  manifest["catalogs"] = json::array();
  for (const auto& cat : catalogs)
    manifest["catalogs"].push_back({{"scenario_id", cat.scenario_id},
                                    {"variant", cat.variant},
                                    {"checksum", hex64(cat.checksum())}});
  std::ofstream mf(config.out_dir / "manifest.json");
  mf << manifest.dump(2) << "\n";

  return log_path;
}

}  // namespace nlt
