#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mbounds/inference.hpp"
#include "mbounds/model.hpp"

namespace mbounds {

/// How a raw numeric column becomes 0/1.
struct DichotomizeRule {
  enum class Kind { none, median_gt, threshold };
  Kind kind = Kind::none;
  double threshold = 0.0;

  /// "none", "median-gt" or "threshold:<x>". Throws ConfigError.
  static DichotomizeRule parse(const std::string& text);
  std::string to_string() const;
};

/// Lower median (the smaller middle value for even counts). Requires a
/// nonempty input.
double lower_median(std::vector<double> values);

/// Applies `rule` to a column of non-missing values. median-gt maps a value to 1
/// when it is strictly greater than the column's lower median; threshold:x when
/// it is strictly greater than x; none requires values already 0 or 1
/// (DataError otherwise).
std::vector<int> dichotomize(const std::vector<double>& values, const DichotomizeRule& rule,
                             const std::string& column = {});

enum class OutputFormat { json, csv, plotdata };

struct RunConfig {
  std::string data_path;
  /// Direct cell counts instead of a data file, in the order
  /// n00a0, n01a0, n10a0, n11a0, n00a1, n01a1, n10a1, n11a1.
  std::optional<CellCounts> counts;
  std::string treatment;
  std::string outcome;
  std::vector<std::string> mediators;
  /// Applied to the outcome and mediators unless a column rule overrides it.
  DichotomizeRule default_rule;
  /// Per-column overrides; the treatment column only uses these.
  std::map<std::string, DichotomizeRule> column_rules;
  std::vector<Assumptions> assumptions{Assumptions::none};
  int reference = 1;
  int mediator_effect_sign = 1;
  InferenceConfig inference;
  OutputFormat format = OutputFormat::json;
  bool strict = false;

  /// Throws ConfigError.
  void validate() const;
  DichotomizeRule rule_for(const std::string& column, bool is_treatment) const;
};

/// Records for one mediator after dichotomization and missing-value filtering.
struct MediatorData {
  std::string name;
  std::vector<UnitRecord> records;
  std::size_t dropped_rows = 0;
};

/// Reads comma-delimited text with a header row. Medians are computed per column
/// over all non-missing values before any row is dropped. Empty cells and
/// NA / NaN / "." count as missing.
std::vector<MediatorData> ingest(std::istream& in, const RunConfig& config);
std::vector<MediatorData> ingest(const std::string& path, const RunConfig& config);

struct AssumptionAnalysis {
  EstimandSpec spec;
  std::optional<BoundsResult> closed_form;
  std::optional<BoundsResult> lp;
  std::optional<IntervalEstimate> inference;
  bool incompatible = false;
  std::vector<std::string> notes;
};

struct MediatorReport {
  std::string name;
  CellCounts counts;
  std::size_t dropped_rows = 0;
  ObservedDistribution distribution;
  WaldEstimate ate;
  WaldEstimate iot;
  std::vector<AssumptionAnalysis> analyses;
};

struct AnalysisReport {
  RunConfig config;
  std::vector<MediatorReport> mediators;

  bool any_incompatible() const noexcept;
};

/// Bounds, LP cross-check and inference for one mediator's records.
MediatorReport analyze_mediator(const MediatorData& data, const RunConfig& config);

/// Analyzes every mediator in `data`, in order.
AnalysisReport run(const std::vector<MediatorData>& data, const RunConfig& config);
/// Loads config.data_path (or config.counts) and analyzes it.
AnalysisReport run(const RunConfig& config);

struct PlotRow {
  std::string mediator;
  std::string method;  // iot | bounds-none | bounds-mmr | bounds-mmr-pos
  std::optional<double> point;
  std::optional<double> lo;
  std::optional<double> hi;
  std::optional<double> ci_lo;
  std::optional<double> ci_hi;
  double ate_reference_line = 0.0;
};

/// One row per mediator for the IOT, then one per mediator and assumption set
/// for the bounds. Bound rows carry the half-median-unbiased estimates in lo/hi.
std::vector<PlotRow> plot_rows(const AnalysisReport& report);

std::string emit_json(const AnalysisReport& report);
std::string emit_csv(const AnalysisReport& report);
std::string emit_plotdata(const AnalysisReport& report);
std::string emit(const AnalysisReport& report, OutputFormat format);

}  // namespace mbounds
