#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "mbounds/model.hpp"

namespace mbounds {

inline constexpr std::size_t kStrata = 16;

/// Flat index of the augmented stratum (y1, y0, m1, m0), lexicographic.
/// For reference arm r: y1 = Y(r, 1), y0 = Y(r, 0), m1 = M(1), m0 = M(0).
constexpr std::size_t stratum_index(int y1, int y0, int m1, int m0) noexcept {
  return static_cast<std::size_t>(8 * y1 + 4 * y0 + 2 * m1 + m0);
}

/// Joint distribution of the reference-arm potential outcomes and both
/// potential mediators.
class StrataDistribution16 {
 public:
  static constexpr double kSumTolerance = 1e-9;

  /// Validates nonnegativity and the unit sum. Throws ValidationError.
  StrataDistribution16(const std::array<double, kStrata>& psi, int reference);

  double operator()(int y1, int y0, int m1, int m0) const noexcept {
    return psi_[stratum_index(y1, y0, m1, m0)];
  }
  const std::array<double, kStrata>& values() const noexcept { return psi_; }
  int reference() const noexcept { return reference_; }

  /// Total mass on mechanism defiers (M(1) = 0, M(0) = 1).
  double defier_mass() const noexcept;

  /// E[Y(r, M(1 - r))], the cross-world mean the LP optimizes.
  double cross_world_mean() const noexcept;

 private:
  std::array<double, kStrata> psi_{};
  int reference_ = 1;
};

enum class LpSense { minimize, maximize };

struct LpRow {
  std::array<double, kStrata> coef{};
  double rhs = 0.0;
  std::string label;

  double evaluate(const std::array<double, kStrata>& psi) const noexcept;
};

/// Optimization of a cross-world mean over the 16 augmented strata.
/// Inequality rows mean coef'psi >= rhs.
struct LinearProgram {
  std::array<double, kStrata> objective{};
  std::vector<LpRow> equalities;
  std::vector<LpRow> inequalities;
  LpSense sense = LpSense::minimize;
  int reference = 1;
  Assumptions assumptions = Assumptions::none;
};

/// Builds the LP for E[Y(r, M(1 - r))], r = spec.reference. Rows, in order: the
/// simplex row, the four reference-arm cells p_{ym.r} (ym = 00, 01, 10, 11), the
/// opposite-arm mediator margin P(M=1 | A=1-r), then under MMR the four defier
/// rows, and under mmr_pos_mediator one signed mediator-effect inequality.
LinearProgram build_lp(const ObservedDistribution& dist, const EstimandSpec& spec, LpSense sense);

struct LpSolution {
  double value = 0.0;
  StrataDistribution16 witness;
  /// Multipliers for equalities then inequalities; dual objective equals value.
  std::vector<double> duals;
  double dual_objective = 0.0;
};

/// Solves with the dense simplex. Throws AssumptionIncompatible when the LP is
/// infeasible and std::logic_error if it is unbounded (impossible for a
/// well-formed program over a probability simplex).
LpSolution solve(const LinearProgram& lp);

/// Both LP endpoints for delta(spec.reference) with their witnesses.
struct LpBounds {
  BoundsResult bounds;
  /// Witness attaining bounds.lower and bounds.upper respectively.
  StrataDistribution16 lower_witness;
  StrataDistribution16 upper_witness;
};

LpBounds anie_bounds_lp_with_witness(const ObservedDistribution& dist, const EstimandSpec& spec);

/// LP bounds on delta(spec.reference); method tag is Method::lp.
/// Throws AssumptionIncompatible when the data contradict the assumptions.
BoundsResult anie_bounds_lp(const ObservedDistribution& dist, const EstimandSpec& spec);

/// Text dump: a header comment, the objective row, then one line per constraint,
/// columns in stratum_index order.
void write_lp_text(std::ostream& out, const LinearProgram& lp);
std::string to_lp_text(const LinearProgram& lp);

}  // namespace mbounds
