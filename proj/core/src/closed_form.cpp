#include "mbounds/closed_form.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>

#include <fmt/format.h>

#include "mbounds/lp.hpp"

namespace mbounds {
namespace {

struct Term {
  double coef;
  int y;
  int m;
  int a;
};

std::string describe(const std::array<double, kCells>& coef) {
  std::string out;
  for (int a = 1; a >= 0; --a) {
    for (int y = 0; y < 2; ++y) {
      for (int m = 0; m < 2; ++m) {
        const double c = coef[cell_index(y, m, a)];
        if (c == 0.0) continue;
        if (c < 0.0) {
          out += out.empty() ? "-" : " - ";
        } else if (!out.empty()) {
          out += " + ";
        }
        if (std::abs(c) != 1.0) out += fmt::format("{:g}*", std::abs(c));
        out += fmt::format("p{}{}.{}", y, m, a);
      }
    }
  }
  return out.empty() ? "0" : out;
}

LinearExpression expr(std::initializer_list<Term> terms) {
  LinearExpression e;
  for (const auto& t : terms) e.coef[cell_index(t.y, t.m, t.a)] += t.coef;
  e.label = describe(e.coef);
  return e;
}

LinearExpression atm_expr(double sign) {
  LinearExpression e = expr({{sign, 0, 1, 1}, {sign, 1, 1, 1}, {-sign, 0, 1, 0}, {-sign, 1, 1, 0}});
  e.label = sign > 0 ? "ATM" : "-ATM";
  return e;
}

ExpressionSet no_assumption_set(int reference) {
  ExpressionSet s;
  if (reference == 0) {
    s.lower = {
        expr({{-1, 1, 0, 0}, {-1, 1, 1, 0}}),
        expr({{-1, 0, 1, 1}, {-1, 1, 1, 1}, {-1, 1, 1, 0}}),
        expr({{-1, 0, 0, 1}, {-1, 1, 0, 1}, {-1, 1, 0, 0}}),
    };
    s.upper = {
        expr({{1, 0, 0, 0}, {1, 0, 1, 0}}),
        expr({{1, 0, 1, 1}, {1, 1, 1, 1}, {1, 0, 1, 0}}),
        expr({{1, 0, 0, 0}, {1, 0, 0, 1}, {1, 1, 0, 1}}),
    };
  } else {
    s.lower = {
        expr({{-1, 0, 0, 1}, {-1, 0, 1, 1}}),
        expr({{-1, 0, 1, 1}, {-1, 0, 1, 0}, {-1, 1, 1, 0}}),
        expr({{-1, 0, 0, 0}, {-1, 0, 0, 1}, {-1, 1, 0, 0}}),
    };
    s.upper = {
        expr({{1, 1, 0, 1}, {1, 1, 1, 1}}),
        expr({{1, 0, 1, 0}, {1, 1, 1, 0}, {1, 1, 1, 1}}),
        expr({{1, 0, 0, 0}, {1, 1, 0, 0}, {1, 1, 0, 1}}),
    };
  }
  return s;
}

ExpressionSet mmr_set(int reference) {
  ExpressionSet s;
  if (reference == 0) {
    s.lower = {atm_expr(-1), expr({{-1, 1, 0, 0}})};
    s.upper = {atm_expr(+1), expr({{1, 0, 0, 0}})};
  } else {
    s.lower = {atm_expr(-1), expr({{-1, 0, 1, 1}})};
    s.upper = {atm_expr(+1), expr({{1, 1, 1, 1}})};
  }
  return s;
}

// delta(1) under MMR and E[Y(1,1) - Y(1,0)] >= 0, four terms per side. The third
// upper term repeats p00.1 in its published form and is kept that way; the LP
// cross-check in bounds_mmr_pos_mediator decides the reported endpoint.
ExpressionSet mmr_pos_mediator_set() {
  ExpressionSet s;
  s.lower = {
      atm_expr(-1),
      expr({{1, 1, 0, 1}, {-1, 1, 0, 0}, {-1, 0, 0, 0}}),
      expr({{-1, 1, 1, 1}, {-1, 0, 0, 1}, {-1, 1, 0, 0}}),
      expr({{-1, 0, 1, 1}}),
  };
  s.upper = {
      atm_expr(+1),
      expr({{1, 1, 1, 1}, {1, 1, 0, 0}, {1, 0, 0, 0}}),
      expr({{2, 1, 1, 1}, {1, 0, 0, 1}, {1, 0, 0, 1}}),
      expr({{1, 1, 1, 1}}),
  };
  return s;
}

double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

BoundsResult evaluate_set(const ExpressionSet& set, const ObservedDistribution& dist,
                          const EstimandSpec& spec) {
  BoundsResult r;
  r.spec = spec;
  r.method = Method::closed_form;
  r.fingerprint = dist.fingerprint();
  r.lower = -std::numeric_limits<double>::infinity();
  r.upper = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < set.lower.size(); ++j) {
    const double v = set.lower[j].evaluate(dist);
    if (v > r.lower) {
      r.lower = v;
      r.binding_lower = static_cast<int>(j);
    }
  }
  for (std::size_t j = 0; j < set.upper.size(); ++j) {
    const double v = set.upper[j].evaluate(dist);
    if (v < r.upper) {
      r.upper = v;
      r.binding_upper = static_cast<int>(j);
    }
  }
  r.lower = clamp_unit(r.lower);
  r.upper = clamp_unit(r.upper);
  return r;
}

void check_reference(int reference) {
  if (reference != 0 && reference != 1) {
    throw ValidationError("reference level must be 0 or 1, got " + std::to_string(reference));
  }
}

}  // namespace

double LinearExpression::evaluate(const std::array<double, kCells>& cells) const noexcept {
  double v = 0.0;
  for (std::size_t k = 0; k < kCells; ++k) v += coef[k] * cells[k];
  return v;
}

double LinearExpression::evaluate(const ObservedDistribution& dist) const noexcept {
  return evaluate(dist.cells());
}

bool has_closed_form(const EstimandSpec& spec) noexcept {
  switch (spec.assumptions) {
    case Assumptions::none:
    case Assumptions::mmr:
      return spec.reference == 0 || spec.reference == 1;
    case Assumptions::mmr_pos_mediator:
      return spec.reference == 1 && spec.mediator_effect_sign == 1;
  }
  return false;
}

ExpressionSet bounding_expressions(const EstimandSpec& spec) {
  spec.validate();
  switch (spec.assumptions) {
    case Assumptions::none:
      return no_assumption_set(spec.reference);
    case Assumptions::mmr:
      return mmr_set(spec.reference);
    case Assumptions::mmr_pos_mediator:
      if (!has_closed_form(spec)) {
        throw UnsupportedError(
            "no closed form for the signed mediator-effect bounds at reference " +
            std::to_string(spec.reference) + " with sign " +
            std::to_string(spec.mediator_effect_sign) + "; use anie_bounds_lp");
      }
      return mmr_pos_mediator_set();
  }
  throw UnsupportedError("unknown assumption set");
}

BoundsResult bounds_no_assumption(const ObservedDistribution& dist, int reference) {
  check_reference(reference);
  const EstimandSpec spec{reference, Assumptions::none, 1};
  return evaluate_set(no_assumption_set(reference), dist, spec);
}

BoundsResult bounds_mmr(const ObservedDistribution& dist, int reference) {
  check_reference(reference);
  const EstimandSpec spec{reference, Assumptions::mmr, 1};
  BoundsResult r = evaluate_set(mmr_set(reference), dist, spec);
  const double alpha = atm(dist);
  if (alpha < 0.0) {
    r.assumption_incompatible = true;
    r.diagnostics.push_back(
        fmt::format("ATM = {:.6g} < 0 contradicts monotonic mediator response", alpha));
  }
  return r;
}

BoundsResult bounds_mmr_pos_mediator(const ObservedDistribution& dist) {
  const EstimandSpec spec{1, Assumptions::mmr_pos_mediator, 1};
  BoundsResult r = evaluate_set(mmr_pos_mediator_set(), dist, spec);
  const double alpha = atm(dist);
  if (alpha < 0.0) {
    r.assumption_incompatible = true;
    r.diagnostics.push_back(
        fmt::format("ATM = {:.6g} < 0 contradicts monotonic mediator response", alpha));
    return r;
  }

  BoundsResult lp;
  try {
    lp = anie_bounds_lp(dist, spec);
  } catch (const AssumptionIncompatible& e) {
    r.assumption_incompatible = true;
    r.diagnostics.push_back(e.what());
    return r;
  }

  constexpr double kAgreement = 1e-9;
  if (std::abs(lp.lower - r.lower) > kAgreement) {
    r.diagnostics.push_back(fmt::format(
        "closed-form lower {:.12g} (expression {}) differs from LP lower {:.12g}; LP value reported",
        r.lower, r.binding_lower, lp.lower));
    r.lower = lp.lower;
    r.binding_lower = BoundsResult::kNoExpression;
    r.method = Method::lp;
  }
  if (std::abs(lp.upper - r.upper) > kAgreement) {
    r.diagnostics.push_back(fmt::format(
        "closed-form upper {:.12g} (expression {}) differs from LP upper {:.12g}; LP value reported",
        r.upper, r.binding_upper, lp.upper));
    r.upper = lp.upper;
    r.binding_upper = BoundsResult::kNoExpression;
    r.method = Method::lp;
  }
  return r;
}

BoundsResult closed_form_bounds(const ObservedDistribution& dist, const EstimandSpec& spec) {
  spec.validate();
  switch (spec.assumptions) {
    case Assumptions::none:
      return bounds_no_assumption(dist, spec.reference);
    case Assumptions::mmr:
      return bounds_mmr(dist, spec.reference);
    case Assumptions::mmr_pos_mediator:
      if (!has_closed_form(spec)) {
        throw UnsupportedError(
            "signed mediator-effect bounds have a closed form only for delta(1) with a "
            "nonnegative effect; use anie_bounds_lp");
      }
      return bounds_mmr_pos_mediator(dist);
  }
  throw UnsupportedError("unknown assumption set");
}

BoundsResult ande_bounds(const ObservedDistribution& dist, int reference, const BoundsResult& anie) {
  check_reference(reference);
  if (anie.fingerprint != dist.fingerprint()) {
    throw ConsistencyError("ANIE bounds were computed on a different distribution");
  }
  if (anie.estimand != Estimand::anie || anie.spec.reference != reference) {
    throw ConsistencyError("ANIE bounds do not match the requested reference level");
  }
  const double tau = ate(dist);
  BoundsResult r = anie;
  r.estimand = Estimand::ande;
  r.lower = clamp_unit(tau - anie.upper);
  r.upper = clamp_unit(tau - anie.lower);
  r.binding_lower = anie.binding_upper;
  r.binding_upper = anie.binding_lower;
  return r;
}

}  // namespace mbounds
