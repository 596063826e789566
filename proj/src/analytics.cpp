#include "nlt/analytics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

namespace nlt {

bool GroupFilter::matches(const TrialRecord& record) const {
  if (model_id && *model_id != record.spec.model_id) return false;
  if (approach && *approach != approach_name(record.spec.approach)) return false;
  if (scenario_id && *scenario_id != record.spec.scenario_id) return false;
  if (variant && *variant != record.spec.variant) return false;
  return true;
}

double accuracy(const std::vector<TrialRecord>& records, const GroupFilter& filter) {
  long n = 0, pass = 0;
  for (const auto& r : records) {
    if (r.errored() || !filter.matches(r)) continue;
    ++n;
    if (r.pass) ++pass;
  }
  if (n == 0) throw std::invalid_argument("accuracy: no gradable records match the group");
  return static_cast<double>(pass) / static_cast<double>(n);
}

double mean_accuracy(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("mean_accuracy: empty list");
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double variance(const std::vector<double>& values, VarianceEstimator estimator) {
  const std::size_t n = values.size();
  if (estimator == VarianceEstimator::population && n < 1)
    throw std::invalid_argument("variance: population estimator needs n >= 1");
  if (estimator == VarianceEstimator::sample && n < 2)
    throw std::invalid_argument("variance: sample estimator needs n >= 2");
  const double mean = mean_accuracy(values);
  double acc = 0.0;
  for (double v : values) acc += (v - mean) * (v - mean);
  const double denom =
      estimator == VarianceEstimator::population ? static_cast<double>(n)
                                                 : static_cast<double>(n - 1);
  return acc / denom;
}

TokenReport token_report(const std::vector<TrialRecord>& records, const GroupFilter& filter) {
  TokenReport rep;
  double in_sum = 0, out_sum = 0, total_sum = 0;
  for (const auto& r : records) {
    if (!filter.matches(r) || r.usage.state != TokenUsage::State::full) continue;
    ++rep.n;
    in_sum += static_cast<double>(r.usage.input_tokens);
    out_sum += static_cast<double>(r.usage.output_tokens);
    total_sum += static_cast<double>(r.usage.total_tokens);
  }
  if (rep.n == 0) throw std::invalid_argument("token_report: no usage data in group");
  rep.mean_input = in_sum / static_cast<double>(rep.n);
  rep.mean_output = out_sum / static_cast<double>(rep.n);
  rep.mean_total = total_sum / static_cast<double>(rep.n);
  return rep;
}

TokenDelta token_delta(const std::vector<TrialRecord>& records, const GroupFilter& subject,
                       const GroupFilter& baseline) {
  const TokenReport a = token_report(records, subject);
  const TokenReport b = token_report(records, baseline);
  auto pct = [](double now, double base) {
    if (base == 0.0) throw std::invalid_argument("token_delta: baseline mean is zero");
    return (now - base) / base * 100.0;
  };
  return {pct(a.mean_input, b.mean_input), pct(a.mean_output, b.mean_output),
          pct(a.mean_total, b.mean_total)};
}

const char* variance_grain_name(VarianceGrain grain) {
  return grain == VarianceGrain::cell ? "cell" : "model";
}

namespace {

constexpr std::array<const char*, 4> kGroupFields = {"model_id", "approach", "scenario_id",
                                                     "variant"};

std::string field_value(const TrialRecord& r, const std::string& field) {
  if (field == "model_id") return r.spec.model_id;
  if (field == "approach") return approach_name(r.spec.approach);
  if (field == "scenario_id") return r.spec.scenario_id;
  if (field == "variant") return r.spec.variant;
  throw std::invalid_argument("unknown grouping field '" + field + "'");
}

// Key in canonical coordinate order; "*" for ungrouped coordinates.
using RowKey = std::array<std::string, 4>;

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += "\"";
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return std::string(buf);
}

std::string opt_str(const std::optional<double>& v) { return v ? fmt_double(*v) : ""; }

}  // namespace

SummaryReport summarize(const std::vector<TrialRecord>& records, const GroupingSpec& grouping) {
  if (records.empty()) throw std::invalid_argument("summarize: empty log");
  for (const auto& f : grouping.fields) {
    if (std::find(kGroupFields.begin(), kGroupFields.end(), f) == kGroupFields.end())
      throw std::invalid_argument("unknown grouping field '" + f + "'");
    if (std::count(grouping.fields.begin(), grouping.fields.end(), f) != 1)
      throw std::invalid_argument("grouping field '" + f + "' repeated");
  }
  auto grouped = [&](const char* field) {
    return std::find(grouping.fields.begin(), grouping.fields.end(), field) !=
           grouping.fields.end();
  };

  const VarianceGrain grain = grouping.grain.value_or(
      grouped("model_id") ? VarianceGrain::cell : VarianceGrain::model);

  std::map<RowKey, std::vector<const TrialRecord*>> buckets;
  for (const auto& r : records) {
    RowKey key;
    for (std::size_t i = 0; i < kGroupFields.size(); ++i)
      key[i] = grouped(kGroupFields[i]) ? field_value(r, kGroupFields[i]) : "*";
    buckets[key].push_back(&r);
  }

  SummaryReport report;
  report.estimator = grouping.estimator;
  for (const auto& [key, rows] : buckets) {
    SummaryRow row;
    row.model_id = key[0];
    row.approach = key[1];
    row.scenario_id = key[2];
    row.variant = key[3];
    row.variance_grain = variance_grain_name(grain);

    double in_sum = 0, out_sum = 0, total_sum = 0;
    // Sub-accuracies at the variance grain, keyed by cell / model.
    std::map<RowKey, std::pair<long, long>> grain_counts;  // key -> (n, pass)
    for (const TrialRecord* r : rows) {
      if (r->usage.state == TokenUsage::State::full) {
        ++row.usage_n;
        in_sum += static_cast<double>(r->usage.input_tokens);
        out_sum += static_cast<double>(r->usage.output_tokens);
        total_sum += static_cast<double>(r->usage.total_tokens);
      }
      if (r->errored()) {
        ++row.n_errored;
        continue;
      }
      ++row.n_trials;
      if (r->pass) ++row.n_pass;
      RowKey gk{r->spec.model_id, "", "", ""};
      if (grain == VarianceGrain::cell)
        gk = {r->spec.model_id, approach_name(r->spec.approach), r->spec.scenario_id,
              r->spec.variant};
      auto& [gn, gp] = grain_counts[gk];
      ++gn;
      if (r->pass) ++gp;
    }
    if (row.n_trials > 0)
      row.accuracy = static_cast<double>(row.n_pass) / static_cast<double>(row.n_trials);

    std::vector<double> grain_acc;
    for (const auto& [gk, counts] : grain_counts)
      grain_acc.push_back(static_cast<double>(counts.second) /
                          static_cast<double>(counts.first));
    const std::size_t need = grouping.estimator == VarianceEstimator::sample ? 2 : 1;
    if (grain_acc.size() >= need) {
      row.variance = variance(grain_acc, grouping.estimator);
      row.sd = std::sqrt(*row.variance);
    }

    if (row.usage_n > 0) {
      row.mean_input_tokens = in_sum / static_cast<double>(row.usage_n);
      row.mean_output_tokens = out_sum / static_cast<double>(row.usage_n);
      row.mean_total_tokens = total_sum / static_cast<double>(row.usage_n);
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

const char* kReportCsvHeaderV1 =
    "model_id,approach,scenario_id,variant,n_trials,n_pass,n_errored,accuracy,variance,sd,"
    "variance_grain,usage_n,mean_input_tokens,mean_output_tokens,mean_total_tokens";

std::string emit_report(const std::vector<TrialRecord>& records, const GroupingSpec& grouping,
                        ReportFormat format) {
  const SummaryReport report = summarize(records, grouping);

  std::vector<std::array<std::string, 15>> cells;
  for (const auto& r : report.rows) {
    cells.push_back({r.model_id, r.approach, r.scenario_id, r.variant,
                     std::to_string(r.n_trials), std::to_string(r.n_pass),
                     std::to_string(r.n_errored),
                     r.n_trials > 0 ? fmt_double(r.accuracy) : std::string(),
                     opt_str(r.variance), opt_str(r.sd), r.variance_grain,
                     std::to_string(r.usage_n), opt_str(r.mean_input_tokens),
                     opt_str(r.mean_output_tokens), opt_str(r.mean_total_tokens)});
  }

  if (format == ReportFormat::csv) {
    std::string out = kReportCsvHeaderV1;
    out += "\n";
    for (const auto& row : cells) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ",";
        out += csv_escape(row[i]);
      }
      out += "\n";
    }
    return out;
  }

  // Plain aligned table.
  std::array<std::string, 15> header = {"model_id", "approach", "scenario_id", "variant",
                                        "n_trials", "n_pass", "n_errored", "accuracy",
                                        "variance", "sd", "grain", "usage_n", "mean_in",
                                        "mean_out", "mean_total"};
  std::array<std::size_t, 15> width{};
  for (std::size_t i = 0; i < header.size(); ++i) width[i] = header[i].size();
  for (const auto& row : cells)
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());

  auto emit_row = [&](const std::array<std::string, 15>& row) {
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) line += "  ";
      line += row[i];
      line.append(width[i] - row[i].size(), ' ');
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    return line + "\n";
  };

  std::string out = emit_row(header);
  std::string rule;
  for (std::size_t i = 0; i < width.size(); ++i) {
    if (i) rule += "  ";
    rule.append(width[i], '-');
  }
  out += rule + "\n";
  for (const auto& row : cells) out += emit_row(row);
  return out;
}

}  // namespace nlt
