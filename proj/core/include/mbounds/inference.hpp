#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mbounds/model.hpp"

namespace mbounds {

/// Tuning for intersection-bounds inference.
struct InferenceConfig {
  /// Two-sided level; each side of the confidence interval uses alpha / 2.
  double alpha = 0.05;
  /// Monte Carlo draws for the critical values.
  std::size_t draws = 10000;
  std::uint64_t seed = 20240601;
  /// Multiplier on the preliminary critical value in the expression-selection step.
  double selection_slack = 2.0;

  void validate() const;
};

using CovarianceMatrix = std::array<std::array<double, kCells>, kCells>;

struct DistributionEstimate {
  ObservedDistribution distribution;
  CellCounts counts;
  /// Plug-in multinomial covariance of the cell frequencies, block diagonal by
  /// arm: (diag(p) - p p') / n_a within an arm, zero across arms.
  CovarianceMatrix covariance{};
};

/// Plug-in cell frequencies and their covariance. Requires at least two records
/// per arm (InsufficientDataError otherwise).
DistributionEstimate estimate_distribution(std::span<const UnitRecord> records);
DistributionEstimate estimate_distribution(const CellCounts& counts);

/// A difference in arm means with a two-sample binomial standard error and a
/// normal-approximation interval.
struct WaldEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  double level = 0.95;
};

/// Intermediate outcome test: the treatment effect on the mediator.
WaldEstimate iot_test(std::span<const UnitRecord> records, const InferenceConfig& config);
WaldEstimate iot_test(const CellCounts& counts, const InferenceConfig& config);

/// Treatment effect on the outcome, same construction as iot_test.
WaldEstimate ate_test(std::span<const UnitRecord> records, const InferenceConfig& config);
WaldEstimate ate_test(const CellCounts& counts, const InferenceConfig& config);

struct ExpressionEstimate {
  std::string label;
  bool upper_side = false;
  double estimate = 0.0;
  double standard_error = 0.0;
  bool selected = false;
  /// Zero standard error: evaluated as a point, excluded from the critical value.
  bool degenerate = false;
};

struct SideDiagnostics {
  /// False when the side came from the LP and no inference was run.
  bool inference = true;
  std::vector<int> selected;
  double k_selection = 0.0;
  double k_half = 0.0;
  double k_ci = 0.0;
};

/// Half-median-unbiased bound estimates and a confidence interval for delta(a).
struct IntervalEstimate {
  EstimandSpec spec{};
  double level = 0.95;

  double bound_lower_hmu = 0.0;
  double bound_upper_hmu = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  /// Plain plug-in bounds at the estimated distribution, for reference.
  double plugin_lower = 0.0;
  double plugin_upper = 0.0;

  std::vector<ExpressionEstimate> expression_estimates;
  SideDiagnostics lower;
  SideDiagnostics upper;

  bool crossed = false;
  bool assumption_incompatible = false;
  bool degenerate_covariance = false;
  std::vector<std::string> diagnostics;
};

/// Intersection-bounds estimates for delta(spec.reference).
///
/// Each bounding expression c_j'p is estimated with its delta-method standard
/// error. Critical values k(gamma) are quantiles of the maximum studentized
/// deviation over a preliminarily selected subset of expressions, computed from
/// one shared set of seeded normal draws. Each draw contributes its direction
/// within the span of the expressions; the chi-distributed radius is integrated
/// exactly. The upper estimate at level gamma is
/// min_j [c_j'p + k(gamma) se_j]; the lower side mirrors it. gamma = 1/2 gives
/// the half-median-unbiased estimate, gamma = 1 - alpha/2 the CI endpoint.
///
/// Sides without a closed-form expression list (signed mediator-effect bounds
/// where the LP is tighter, or specs with no closed form) report LP point bounds
/// with SideDiagnostics::inference = false.
IntervalEstimate clr_bounds(std::span<const UnitRecord> records, const EstimandSpec& spec,
                            const InferenceConfig& config);
IntervalEstimate clr_bounds(const CellCounts& counts, const EstimandSpec& spec,
                            const InferenceConfig& config);

/// Two-sided standard normal quantile helper, exposed for tests.
double normal_quantile(double p);

}  // namespace mbounds
