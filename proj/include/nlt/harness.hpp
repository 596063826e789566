#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nlt/catalog.hpp"
#include "nlt/nlparse.hpp"
#include "nlt/provider.hpp"

namespace nlt {

enum class Approach { nlt, structured };
const char* approach_name(Approach approach);
Approach approach_from_name(const std::string& name);  // throws on unknown

// One point of the factorial design: model × approach × scenario × variant ×
// input × replication.
struct TrialSpec {
  std::string model_id;
  Approach approach = Approach::nlt;
  std::string scenario_id;
  std::string variant;
  int input_id = 0;
  int replication = 0;

  auto operator<=>(const TrialSpec&) const = default;
};

// One graded trial. `status` is "errored" when the provider gave up after
// retries — such records keep their coordinates and error but stay out of
// every accuracy denominator.
struct TrialRecord {
  TrialSpec spec;
  std::string status = "ok";  // "ok" | "errored"
  std::string raw_output;
  std::optional<std::vector<std::string>> tool_calls_raw;  // structured approach only
  std::optional<std::set<std::string>> parsed_yes;         // engaged iff parse succeeded
  std::optional<std::string> parse_failure;                // failure kind name otherwise
  std::set<std::string> expected;
  bool pass = false;
  std::optional<GradeReason> reason;  // disengaged for errored trials
  TokenUsage usage;
  int attempts = 0;
  double latency_ms = 0.0;
  std::string timestamp;
  std::string error;  // errored trials: kind plus message

  bool errored() const { return status == "errored"; }
};

struct PlanFilter {
  std::vector<Approach> approaches;    // empty = both
  std::vector<std::string> scenarios;  // empty = every scenario in the catalogs
  std::vector<std::string> variants;   // empty = every variant
  std::vector<int> input_ids;          // empty = every input
};

// Full cross product over the given models and the catalogs' coordinates,
// honoring the filter. Deterministic order: model (as given), approach (nlt
// first), scenario (lexicographic), variant (original first), input id,
// replication. Throws std::invalid_argument on an empty plan, empty models,
// or replications < 1.
std::vector<TrialSpec> plan_run(const std::vector<std::string>& models, int replications,
                                const std::vector<ScenarioCatalog>& catalogs,
                                const PlanFilter& filter = {});

// Grades one provider response against its trial coordinates: routes to
// parse_selector or parse_structured (strict mode), then exact-match grading.
// Never throws on bad model output — defects live in the record.
TrialRecord grade_trial(const TrialSpec& spec, const ProviderResponse& response,
                        const ScenarioCatalog& catalog);

struct RunConfig {
  std::filesystem::path out_dir;
  int workers = 8;
  RetryPolicy policy{};
  SleepFn sleep = real_sleep();
};

// Executes every planned trial against the backend with a pool of `workers`
// threads. Each trial is one fresh request (no shared context); completed
// records append to <out_dir>/trials.jsonl as they finish, and a manifest
// (plan hash, config, catalog checksums) lands alongside. Returns the log
// path. Trials whose retries exhaust become `errored` records, never gaps.
std::filesystem::path execute_run(const std::vector<TrialSpec>& plan,
                                  const std::vector<ScenarioCatalog>& catalogs,
                                  ChatBackend& backend, const RunConfig& config);

// JSONL (de)serialization of trial records; the line schema is the stable
// contract consumed by analytics and third parties.
std::string trial_record_to_json(const TrialRecord& record);
TrialRecord trial_record_from_json(const std::string& line);
std::vector<TrialRecord> load_trial_log(const std::filesystem::path& path);

// Canonical projection for comparing runs: everything except the wall-clock
// fields (timestamp, latency_ms). Two runs of the same plan over the same
// script produce permutation-equal multisets of these.
std::string record_identity(const TrialRecord& record);

// Stable fingerprint of a plan (order-sensitive).
std::uint64_t plan_hash(const std::vector<TrialSpec>& plan);

}  // namespace nlt
