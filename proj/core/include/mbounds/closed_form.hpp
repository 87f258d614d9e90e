#pragma once

#include <array>
#include <string>
#include <vector>

#include "mbounds/model.hpp"

namespace mbounds {

/// A bounding expression c'p, linear in the eight cell probabilities
/// (coefficients in cell_index order).
struct LinearExpression {
  std::array<double, kCells> coef{};
  std::string label;

  double evaluate(const ObservedDistribution& dist) const noexcept;
  double evaluate(const std::array<double, kCells>& cells) const noexcept;
};

/// The lower bound is the max over `lower`, the upper bound the min over `upper`.
struct ExpressionSet {
  std::vector<LinearExpression> lower;
  std::vector<LinearExpression> upper;
};

/// Closed-form expression lists for delta(spec.reference). Available for none and
/// mmr at both reference levels, and for mmr_pos_mediator only at reference 1 with
/// a nonnegative mediator effect. Throws UnsupportedError otherwise.
ExpressionSet bounding_expressions(const EstimandSpec& spec);

bool has_closed_form(const EstimandSpec& spec) noexcept;

/// Sharp bounds on delta(reference) under randomization alone.
BoundsResult bounds_no_assumption(const ObservedDistribution& dist, int reference);

/// Sharp bounds under monotonic mediator response. A negative ATM sets
/// assumption_incompatible and returns the (possibly crossed) formulaic interval.
BoundsResult bounds_mmr(const ObservedDistribution& dist, int reference);

/// Bounds on delta(1) under MMR and E[Y(1,1) - Y(1,0)] >= 0 from the four-term
/// expression lists. Every call is checked against the LP engine; where the two
/// disagree by more than 1e-9 the LP endpoint is returned, the binding index is
/// set to kNoExpression and a diagnostic records both values.
BoundsResult bounds_mmr_pos_mediator(const ObservedDistribution& dist);

/// Dispatches on spec.assumptions. Throws UnsupportedError for specs that have
/// no closed form.
BoundsResult closed_form_bounds(const ObservedDistribution& dist, const EstimandSpec& spec);

/// Bounds on zeta(1 - a) from tau = delta(a) + zeta(1 - a).
/// Throws ConsistencyError if `anie` was computed on a different distribution.
BoundsResult ande_bounds(const ObservedDistribution& dist, int reference, const BoundsResult& anie);

}  // namespace mbounds
