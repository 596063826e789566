#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nlt/harness.hpp"

namespace nlt {

// Filter over the four grouping coordinates; a disengaged field matches
// everything. Doubles as the concrete key of a report row.
struct GroupFilter {
  std::optional<std::string> model_id;
  std::optional<std::string> approach;  // "nlt" | "structured"
  std::optional<std::string> scenario_id;
  std::optional<std::string> variant;

  bool matches(const TrialRecord& record) const;
};

// Pass fraction over matching records; errored trials are excluded from both
// numerator and denominator. Throws std::invalid_argument when no gradable
// record matches.
double accuracy(const std::vector<TrialRecord>& records, const GroupFilter& filter = {});

// Arithmetic mean. Throws on an empty list.
double mean_accuracy(const std::vector<double>& values);

enum class VarianceEstimator { population, sample };

// Standard variance. Requires n >= 1 (population) or n >= 2 (sample).
double variance(const std::vector<double>& values, VarianceEstimator estimator);

struct TokenReport {
  double mean_input = 0.0;
  double mean_output = 0.0;
  double mean_total = 0.0;
  long n = 0;  // fully usage-reporting records aggregated
};

// Means over records with full usage. Throws when none match.
TokenReport token_report(const std::vector<TrialRecord>& records, const GroupFilter& filter = {});

struct TokenDelta {
  double input_pct = 0.0;
  double output_pct = 0.0;
  double total_pct = 0.0;
};

// Percentage change of `subject` relative to `baseline`:
// (subject - baseline) / baseline * 100, per token column.
TokenDelta token_delta(const std::vector<TrialRecord>& records, const GroupFilter& subject,
                       const GroupFilter& baseline);

enum class VarianceGrain { cell, model };
const char* variance_grain_name(VarianceGrain grain);

enum class ReportFormat { table, csv };

struct GroupingSpec {
  // Any subset of {model_id, approach, scenario_id, variant}; empty = one
  // global row.
  std::vector<std::string> fields;
  // Row variance is taken over sub-accuracies at this grain: per full
  // (model × approach × scenario × variant) cell, or per model. When unset:
  // cell if the grouping includes model_id, else model.
  std::optional<VarianceGrain> grain;
  VarianceEstimator estimator = VarianceEstimator::population;
};

struct SummaryRow {
  // "*" marks a coordinate the row aggregates over.
  std::string model_id = "*";
  std::string approach = "*";
  std::string scenario_id = "*";
  std::string variant = "*";
  long n_trials = 0;  // gradable (non-errored)
  long n_pass = 0;
  long n_errored = 0;
  double accuracy = 0.0;
  std::optional<double> variance;  // absent when the grain yields too few values
  std::optional<double> sd;
  std::string variance_grain;
  long usage_n = 0;
  std::optional<double> mean_input_tokens;
  std::optional<double> mean_output_tokens;
  std::optional<double> mean_total_tokens;
};

struct SummaryReport {
  std::vector<SummaryRow> rows;  // lexicographic by key
  VarianceEstimator estimator = VarianceEstimator::population;
};

// Aggregates the log into one row per distinct key. Throws on an empty log or
// an unknown grouping field.
SummaryReport summarize(const std::vector<TrialRecord>& records, const GroupingSpec& grouping);

// CSV schema v1 header; documented in the README and kept stable.
extern const char* kReportCsvHeaderV1;

// Deterministic rendering of summarize(): same log + same grouping = byte
// identical document.
std::string emit_report(const std::vector<TrialRecord>& records, const GroupingSpec& grouping,
                        ReportFormat format);

}  // namespace nlt
