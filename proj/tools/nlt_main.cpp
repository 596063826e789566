// Command-line front end: validate catalogs, inspect prompts, parse
// transcripts, run the factorial experiment, and aggregate trial logs.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "nlt/analytics.hpp"
#include "nlt/catalog.hpp"
#include "nlt/harness.hpp"
#include "nlt/http_backend.hpp"
#include "nlt/mock_provider.hpp"
#include "nlt/nlparse.hpp"
#include "nlt/perturb.hpp"
#include "nlt/promptgen.hpp"
#include "nlt/runtime.hpp"
#include "nlt/util.hpp"

using namespace nlt;

namespace {

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) {
    std::string item(trim(cur));
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

const ScenarioCatalog& pick_catalog(const std::vector<ScenarioCatalog>& catalogs,
                                    const std::string& scenario, const std::string& variant) {
  for (const auto& c : catalogs)
    if (c.scenario_id == scenario && c.variant == variant) return c;
  throw CatalogError("no catalog for scenario '" + scenario + "' variant '" + variant + "'");
}

std::string read_stdin() {
  std::ostringstream buf;
  buf << std::cin.rdbuf();
  return buf.str();
}

std::string normalize_group_field(const std::string& f) {
  if (f == "model" || f == "model_id") return "model_id";
  if (f == "scenario" || f == "scenario_id") return "scenario_id";
  if (f == "approach" || f == "variant") return f;
  throw std::invalid_argument("unknown grouping field '" + f +
                              "' (want model, approach, scenario, variant)");
}

struct LiveOptions {
  std::string base_url;
  std::string api_key_env = "NLT_API_KEY";
};

std::unique_ptr<ChatBackend> make_backend(const std::string& kind, const LiveOptions& live,
                                          const std::vector<ScenarioCatalog>& catalogs,
                                          const std::string& script,
                                          const std::vector<std::string>& models) {
  if (kind == "mock")
    return std::make_unique<MockProvider>(resolve_script(script, catalogs, models), catalogs);
  if (kind == "live") {
    if (live.base_url.empty())
      throw std::invalid_argument("--backend live requires --base-url");
    HttpBackendConfig cfg;
    cfg.base_url = live.base_url;
    if (const char* key = std::getenv(live.api_key_env.c_str())) cfg.api_key = key;
    return std::make_unique<HttpBackend>(cfg);
  }
  throw std::invalid_argument("unknown backend '" + kind + "' (want mock|live)");
}

int cmd_validate(const std::string& data_dir) {
  const auto catalogs = load_catalog_dir(data_dir);
  for (const auto& c : catalogs) {
    const InputMix mix = input_mix(c);
    std::cout << "ok " << c.scenario_id << "/" << c.variant << ": " << c.tools.size()
              << " tools, " << c.inputs.size() << " inputs (mix " << mix.zero << "/"
              << mix.single << "/" << mix.multi << "), checksum " << hex64(c.checksum())
              << (c.corpus_anomaly ? ", corpus_anomaly" : "") << "\n";
  }
  std::cout << catalogs.size() << " catalog(s) valid\n";
  return 0;
}

int cmd_prompt(const std::string& data_dir, const std::string& scenario,
               const std::string& variant, const std::string& approach, bool functions) {
  const auto catalogs = load_catalog_dir(data_dir);
  const ScenarioCatalog& cat = pick_catalog(catalogs, scenario, variant);
  if (approach == "nlt") {
    if (functions) throw std::invalid_argument("--functions applies to the structured approach");
    std::cout << build_nlt_prompt(cat).text;
    return 0;
  }
  if (approach != "structured")
    throw std::invalid_argument("unknown approach '" + approach + "' (want nlt|structured)");
  const StructuredPromptBundle bundle = build_structured_bundle(cat);
  if (!functions) {
    std::cout << bundle.system_text;
    return 0;
  }
  nlohmann::json defs = nlohmann::json::array();
  for (const auto& fd : bundle.function_defs)
    defs.push_back({{"type", "function"},
                    {"function", {{"name", fd.name},
                                  {"description", fd.description},
                                  {"parameters", nlohmann::json::object()}}}});
  std::cout << defs.dump(2) << "\n";
  return 0;
}

int cmd_parse(const std::string& data_dir, const std::string& scenario,
              const std::string& variant, const std::string& approach, const std::string& mode,
              int input_id) {
  const auto catalogs = load_catalog_dir(data_dir);
  const ScenarioCatalog& cat = pick_catalog(catalogs, scenario, variant);
  const ParseMode pm = mode == "lenient" ? ParseMode::lenient : ParseMode::strict;

  ParseOutcome outcome;
  if (approach == "nlt") {
    std::vector<std::string> order;
    for (const auto& t : cat.tools) order.push_back(t.display_name);
    outcome = parse_selector(read_stdin(), order, pm);
  } else if (approach == "structured") {
    // One called function name per line.
    std::vector<std::string> calls;
    std::string line;
    while (std::getline(std::cin, line))
      if (!trim(line).empty()) calls.emplace_back(trim(line));
    outcome = parse_structured(calls, cat, pm);
  } else {
    throw std::invalid_argument("unknown approach '" + approach + "'");
  }

  for (const auto& d : outcome.diagnostics)
    std::cerr << "line " << d.line_no << ": " << diagnostic_kind_name(d.kind) << ": " << d.detail
              << (d.fatal ? " (fatal)" : "") << "\n";

  if (!outcome.ok()) {
    std::cout << "parse_failure: " << diagnostic_kind_name(outcome.failure->kind) << ": "
              << outcome.failure->detail << "\n";
    return 1;
  }
  if (outcome.thinking) std::cout << "thinking: " << *outcome.thinking << "\n";
  for (const auto& t : cat.tools) {
    const auto v = outcome.decisions->decisions.at(t.display_name);
    std::cout << t.display_name << ": " << (v == Verdict::yes ? "YES" : "NO") << "\n";
  }
  if (input_id > 0) {
    const auto expected = expected_set(cat, input_id);
    const GradeResult g = grade(outcome, expected);
    std::cout << "expected:";
    for (const auto& name : expected) std::cout << " [" << name << "]";
    std::cout << "\n"
              << "grade: " << (g.pass ? "pass" : "fail") << " (" << grade_reason_name(g.reason)
              << ")\n";
    return g.pass ? 0 : 1;
  }
  return 0;
}

int cmd_demo(const std::string& data_dir, const std::string& scenario,
             const std::string& variant, int input_id) {
  const auto catalogs = load_catalog_dir(data_dir);
  const ScenarioCatalog& cat = pick_catalog(catalogs, scenario, variant);
  const ChatInput* input = cat.find_input(input_id);
  if (!input) throw CatalogError("no input " + std::to_string(input_id));

  const std::string model = "demo-model";
  MockProvider selector_backend(oracle_perfect_script({cat}, {model}), {cat});

  HandlerTable handlers;
  for (const auto& t : cat.tools) {
    handlers.register_handler({t.display_name,
                               [](const ToolInvocation& inv) {
                                 return "looked up '" + inv.tool + "' for this chat";
                               },
                               /*idempotent=*/true});
  }

  EchoBackend responder_backend;
  ProviderResponder responder(responder_backend, "demo-responder");

  PipelineOptions options;
  options.model_id = model;
  options.sleep = no_sleep();

  std::cout << "user: " << input->text << "\n\n";
  const PipelineResult result =
      run_pipeline(cat, input->text, handlers, &responder, selector_backend, options);

  for (const auto& ev : result.trace)
    std::cout << "[" << iso8601_utc(ev.at) << "] " << stage_name(ev.stage) << ": " << ev.detail
              << "\n";
  std::cout << "\nyes_set:";
  for (const auto& name : result.parse.yes_set()) std::cout << " [" << name << "]";
  std::cout << "\n";
  if (result.response) std::cout << "\nresponse:\n" << *result.response << "\n";
  return result.ok() ? 0 : 1;
}

int cmd_run(const std::string& data_dir, const std::string& models_csv,
            const std::string& approaches_csv, const std::string& scenarios_csv,
            const std::string& variants_csv, int replications, int workers,
            const std::string& backend_kind, const std::string& script,
            const std::string& out_dir, int max_attempts, const LiveOptions& live) {
  const auto catalogs = load_catalog_dir(data_dir);
  const auto models = split_csv(models_csv);

  PlanFilter filter;
  for (const auto& a : split_csv(approaches_csv))
    filter.approaches.push_back(approach_from_name(a));
  filter.scenarios = split_csv(scenarios_csv);
  filter.variants = split_csv(variants_csv);

  const auto plan = plan_run(models, replications, catalogs, filter);
  auto backend = make_backend(backend_kind, live, catalogs, script, models);

  RunConfig config;
  config.out_dir = out_dir;
  config.workers = workers;
  config.policy.max_attempts = max_attempts;

  std::cerr << "running " << plan.size() << " trials (" << workers << " workers, backend "
            << backend->name() << ")...\n";
  const auto log_path = execute_run(plan, catalogs, *backend, config);

  const auto records = load_trial_log(log_path);
  long pass = 0, errored = 0;
  for (const auto& r : records) {
    if (r.errored())
      ++errored;
    else if (r.pass)
      ++pass;
  }
  const long gradable = static_cast<long>(records.size()) - errored;
  std::cout << "wrote " << records.size() << " records to " << log_path.string() << "\n";
  if (gradable > 0)
    std::cout << "accuracy " << pass << "/" << gradable << " = "
              << static_cast<double>(pass) / static_cast<double>(gradable) << "\n";
  if (errored > 0) std::cout << errored << " trial(s) errored — rerun or inspect the log\n";
  return 0;
}

int cmd_report(const std::string& in_path, const std::string& group_csv,
               const std::string& grain, const std::string& estimator,
               const std::string& format, const std::string& token_delta_spec) {
  const auto records = load_trial_log(in_path);

  GroupingSpec grouping;
  for (const auto& f : split_csv(group_csv))
    grouping.fields.push_back(normalize_group_field(f));
  if (grain == "cell")
    grouping.grain = VarianceGrain::cell;
  else if (grain == "model")
    grouping.grain = VarianceGrain::model;
  else if (!grain.empty())
    throw std::invalid_argument("unknown variance grain '" + grain + "' (want cell|model)");
  if (estimator == "sample")
    grouping.estimator = VarianceEstimator::sample;
  else if (estimator != "population")
    throw std::invalid_argument("unknown estimator '" + estimator +
                                "' (want population|sample)");

  const ReportFormat rf = format == "table" ? ReportFormat::table : ReportFormat::csv;
  std::cout << emit_report(records, grouping, rf);

  if (!token_delta_spec.empty()) {
    const auto parts = split_csv(token_delta_spec);
    auto colon = token_delta_spec.find(':');
    if (parts.size() != 1 || colon == std::string::npos)
      throw std::invalid_argument("--token-delta wants SUBJECT:BASELINE, e.g. nlt:structured");
    GroupFilter subject, baseline;
    subject.approach = token_delta_spec.substr(0, colon);
    baseline.approach = token_delta_spec.substr(colon + 1);
    const TokenDelta delta = token_delta(records, subject, baseline);
    char buf[160];
    if (rf == ReportFormat::csv) {
      std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f", delta.input_pct, delta.output_pct,
                    delta.total_pct);
      std::cout << "\ntoken_delta_subject,token_delta_baseline,input_pct,output_pct,total_pct\n"
                << *subject.approach << "," << *baseline.approach << "," << buf << "\n";
    } else {
      std::snprintf(buf, sizeof buf, "input %+.1f%%  output %+.1f%%  total %+.1f%%",
                    delta.input_pct, delta.output_pct, delta.total_pct);
      std::cout << "\ntoken delta (" << *subject.approach << " vs " << *baseline.approach
                << "): " << buf << "\n";
    }
  }
  return 0;
}

int cmd_perturb(const std::string& in_path, const std::string& out_dir,
                const std::string& backend_kind, const std::string& model,
                const std::string& instruction_file, const LiveOptions& live) {
  const ScenarioCatalog original = load_catalog_file(in_path);

  std::string instruction = kDefaultRewriteInstruction;
  if (!instruction_file.empty()) {
    std::ifstream f(instruction_file);
    if (!f) throw std::runtime_error("cannot open instruction profile " + instruction_file);
    std::ostringstream buf;
    buf << f.rdbuf();
    instruction = buf.str();
  }

  std::unique_ptr<ChatBackend> backend;
  if (backend_kind == "mock") {
    // Identity rewriter: deterministic, useful for wiring checks only.
    backend = std::make_unique<EchoBackend>();
  } else {
    backend = make_backend(backend_kind, live, {}, "", {});
  }

  const PerturbedCatalog result =
      perturb_catalog(original, *backend, model, instruction, RetryPolicy{}, real_sleep());

  std::filesystem::create_directories(out_dir);
  const std::filesystem::path catalog_path =
      std::filesystem::path(out_dir) / (original.scenario_id + "_perturbed.json");
  {
    std::ofstream f(catalog_path);
    f << catalog_to_json(result.catalog);
  }
  const std::filesystem::path findings_path =
      std::filesystem::path(out_dir) / (original.scenario_id + "_perturbed_findings.txt");
  {
    std::ofstream f(findings_path);
    int total = 0;
    for (const auto& [tool, findings] : result.findings) {
      if (findings.empty()) {
        f << tool << ": ok\n";
        continue;
      }
      for (const auto& finding : findings) {
        f << tool << ": " << finding_kind_name(finding.kind) << ": " << finding.detail << "\n";
        ++total;
      }
    }
    f << "total findings: " << total << "\n";
  }
  std::cout << "wrote " << catalog_path.string() << " and " << findings_path.string() << "\n";
  std::cout << "review the findings before trusting the rewritten catalog\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Natural-language tool selection: pipeline, experiment harness, and reports"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string data_dir = "data/catalogs";
  app.add_option("--data", data_dir, "Catalog directory")->capture_default_str();

  auto* validate = app.add_subcommand("validate", "Check every catalog invariant");

  auto* prompt = app.add_subcommand("prompt", "Print a rendered system prompt");
  std::string p_scenario, p_variant = "original", p_approach = "nlt";
  bool p_functions = false;
  prompt->add_option("--scenario", p_scenario, "Scenario id")->required();
  prompt->add_option("--variant", p_variant, "original|perturbed")->capture_default_str();
  prompt->add_option("--approach", p_approach, "nlt|structured")->capture_default_str();
  prompt->add_flag("--functions", p_functions, "Print the wire function definitions instead");

  auto* parse = app.add_subcommand("parse", "Parse a transcript from standard input");
  std::string a_scenario, a_variant = "original", a_approach = "nlt", a_mode = "strict";
  int a_input = 0;
  parse->add_option("--scenario", a_scenario, "Scenario id")->required();
  parse->add_option("--variant", a_variant, "original|perturbed")->capture_default_str();
  parse->add_option("--approach", a_approach, "nlt|structured (structured: one slug per line)")
      ->capture_default_str();
  parse->add_option("--mode", a_mode, "strict|lenient")->capture_default_str();
  parse->add_option("--input", a_input, "Also grade against this input id");

  auto* demo = app.add_subcommand("demo", "Run one input through the pipeline against the mock");
  std::string d_scenario = "alex", d_variant = "original";
  int d_input = 2;
  demo->add_option("--scenario", d_scenario, "Scenario id")->capture_default_str();
  demo->add_option("--variant", d_variant, "original|perturbed")->capture_default_str();
  demo->add_option("--input", d_input, "Input id")->capture_default_str();

  auto* run = app.add_subcommand("run", "Execute the factorial experiment");
  std::string r_models, r_approaches, r_scenarios, r_variants;
  std::string r_backend = "mock", r_script = "oracle-perfect", r_out;
  int r_replications = 5, r_workers = 8, r_max_attempts = 5;
  LiveOptions r_live;
  run->add_option("--models", r_models, "Comma-separated model ids")->required();
  run->add_option("--approaches", r_approaches, "Subset of nlt,structured (default both)");
  run->add_option("--scenarios", r_scenarios, "Scenario filter (default all)");
  run->add_option("--variants", r_variants, "Variant filter (default all)");
  run->add_option("--replications", r_replications, "Replications per trial point")
      ->capture_default_str();
  run->add_option("--workers", r_workers, "Concurrent trial workers")->capture_default_str();
  run->add_option("--backend", r_backend, "mock|live")->capture_default_str();
  run->add_option("--script", r_script, "Mock script: oracle-perfect, drop-one, or a file")
      ->capture_default_str();
  run->add_option("--out", r_out, "Output directory for trials.jsonl + manifest.json")
      ->required();
  run->add_option("--max-attempts", r_max_attempts, "Retry budget per trial")
      ->capture_default_str();
  run->add_option("--base-url", r_live.base_url, "Live backend base URL");
  run->add_option("--api-key-env", r_live.api_key_env, "Env var holding the API key")
      ->capture_default_str();

  auto* report = app.add_subcommand("report", "Aggregate a trial log");
  std::string t_in, t_group, t_grain, t_estimator = "population", t_format = "csv",
              t_token_delta;
  report->add_option("--in", t_in, "Trial log (jsonl)")->required();
  report->add_option("--group", t_group, "Comma-separated: model,approach,scenario,variant");
  report->add_option("--variance-grain", t_grain, "cell|model (default depends on grouping)");
  report->add_option("--estimator", t_estimator, "population|sample")->capture_default_str();
  report->add_option("--format", t_format, "csv|table")->capture_default_str();
  report->add_option("--token-delta", t_token_delta,
                     "Append token deltas, e.g. nlt:structured");

  auto* perturb = app.add_subcommand("perturb", "Rewrite a catalog into a perturbed variant");
  std::string x_in, x_out, x_backend = "mock", x_model = "rewriter", x_instruction;
  LiveOptions x_live;
  perturb->add_option("--in", x_in, "Source catalog file")->required();
  perturb->add_option("--out", x_out, "Output directory")->required();
  perturb->add_option("--backend", x_backend, "mock (identity rewrite)|live")
      ->capture_default_str();
  perturb->add_option("--model", x_model, "Rewriter model id")->capture_default_str();
  perturb->add_option("--instruction", x_instruction, "Instruction profile file");
  perturb->add_option("--base-url", x_live.base_url, "Live backend base URL");
  perturb->add_option("--api-key-env", x_live.api_key_env, "Env var holding the API key")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return cmd_validate(data_dir);
    if (prompt->parsed())
      return cmd_prompt(data_dir, p_scenario, p_variant, p_approach, p_functions);
    if (parse->parsed())
      return cmd_parse(data_dir, a_scenario, a_variant, a_approach, a_mode, a_input);
    if (demo->parsed()) return cmd_demo(data_dir, d_scenario, d_variant, d_input);
    if (run->parsed())
      return cmd_run(data_dir, r_models, r_approaches, r_scenarios, r_variants, r_replications,
                     r_workers, r_backend, r_script, r_out, r_max_attempts, r_live);
    if (report->parsed())
      return cmd_report(t_in, t_group, t_grain, t_estimator, t_format, t_token_delta);
    if (perturb->parsed())
      return cmd_perturb(x_in, x_out, x_backend, x_model, x_instruction, x_live);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
