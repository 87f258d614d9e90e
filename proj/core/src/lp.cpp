#include "mbounds/lp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "mbounds/simplex.hpp"

namespace mbounds {
namespace {

template <typename Pred>
std::array<double, kStrata> indicator(Pred pred) {
  std::array<double, kStrata> row{};
  for (int y1 = 0; y1 < 2; ++y1)
    for (int y0 = 0; y0 < 2; ++y0)
      for (int m1 = 0; m1 < 2; ++m1)
        for (int m0 = 0; m0 < 2; ++m0)
          if (pred(y1, y0, m1, m0)) row[stratum_index(y1, y0, m1, m0)] = 1.0;
  return row;
}

// Y(r, M(1-r)) for a stratum, where M(1-r) is m0 when r = 1 and m1 when r = 0.
int cross_world_outcome(int reference, int y1, int y0, int m1, int m0) {
  const int m = reference == 1 ? m0 : m1;
  return m == 1 ? y1 : y0;
}

}  // namespace

StrataDistribution16::StrataDistribution16(const std::array<double, kStrata>& psi, int reference)
    : psi_(psi), reference_(reference) {
  if (reference != 0 && reference != 1) throw ValidationError("strata reference must be 0 or 1");
  double sum = 0.0;
  for (double& v : psi_) {
    if (!std::isfinite(v) || v < -kSumTolerance) {
      throw ValidationError("negative stratum probability " + std::to_string(v));
    }
    v = std::max(v, 0.0);
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw ValidationError("strata probabilities sum to " + std::to_string(sum));
  }
}

double StrataDistribution16::defier_mass() const noexcept {
  double s = 0.0;
  for (int y1 = 0; y1 < 2; ++y1)
    for (int y0 = 0; y0 < 2; ++y0) s += (*this)(y1, y0, 0, 1);
  return s;
}

double StrataDistribution16::cross_world_mean() const noexcept {
  double s = 0.0;
  for (int y1 = 0; y1 < 2; ++y1)
    for (int y0 = 0; y0 < 2; ++y0)
      for (int m1 = 0; m1 < 2; ++m1)
        for (int m0 = 0; m0 < 2; ++m0)
          if (cross_world_outcome(reference_, y1, y0, m1, m0) == 1) s += (*this)(y1, y0, m1, m0);
  return s;
}

double LpRow::evaluate(const std::array<double, kStrata>& psi) const noexcept {
  return std::inner_product(coef.begin(), coef.end(), psi.begin(), 0.0);
}

LinearProgram build_lp(const ObservedDistribution& dist, const EstimandSpec& spec, LpSense sense) {
  spec.validate();
  const int r = spec.reference;
  LinearProgram lp;
  lp.sense = sense;
  lp.reference = r;
  lp.assumptions = spec.assumptions;
  lp.objective = indicator([r](int y1, int y0, int m1, int m0) {
    return cross_world_outcome(r, y1, y0, m1, m0) == 1;
  });

  lp.equalities.push_back({indicator([](int, int, int, int) { return true; }), 1.0, "simplex"});

  // In arm r the observed mediator is M(r) and the observed outcome Y(r, M(r)).
  for (int y = 0; y < 2; ++y) {
    for (int m = 0; m < 2; ++m) {
      auto row = indicator([r, y, m](int y1, int y0, int m1, int m0) {
        const int observed_m = r == 1 ? m1 : m0;
        const int observed_y = observed_m == 1 ? y1 : y0;
        return observed_m == m && observed_y == y;
      });
      lp.equalities.push_back({row, dist.p(y, m, r), fmt::format("p{}{}.{}", y, m, r)});
    }
  }

  const int other = 1 - r;
  lp.equalities.push_back({indicator([other](int, int, int m1, int m0) {
                             return (other == 1 ? m1 : m0) == 1;
                           }),
                           dist.mediator_mean(other), fmt::format("P(M=1|A={})", other)});

  if (spec.assumptions != Assumptions::none) {
    for (int y1 = 0; y1 < 2; ++y1) {
      for (int y0 = 0; y0 < 2; ++y0) {
        LpRow row;
        row.coef[stratum_index(y1, y0, 0, 1)] = 1.0;
        row.rhs = 0.0;
        row.label = fmt::format("defier{}{}", y1, y0);
        lp.equalities.push_back(row);
      }
    }
  }

  if (spec.assumptions == Assumptions::mmr_pos_mediator) {
    const double s = spec.mediator_effect_sign;
    LpRow row;
    for (int m1 = 0; m1 < 2; ++m1) {
      for (int m0 = 0; m0 < 2; ++m0) {
        row.coef[stratum_index(1, 0, m1, m0)] = s;
        row.coef[stratum_index(0, 1, m1, m0)] = -s;
      }
    }
    row.rhs = 0.0;
    row.label = s > 0 ? "mediator-effect>=0" : "mediator-effect<=0";
    lp.inequalities.push_back(row);
  }
  return lp;
}

LpSolution solve(const LinearProgram& lp) {
  simplex::Problem p;
  p.objective.assign(lp.objective.begin(), lp.objective.end());
  p.sense = lp.sense == LpSense::maximize ? simplex::Sense::maximize : simplex::Sense::minimize;
  for (const auto& row : lp.equalities) {
    p.rows.push_back({{row.coef.begin(), row.coef.end()}, simplex::RowKind::equal, row.rhs});
  }
  for (const auto& row : lp.inequalities) {
    p.rows.push_back({{row.coef.begin(), row.coef.end()}, simplex::RowKind::greater_equal, row.rhs});
  }

  const simplex::Result res = simplex::solve(p);
  if (res.status == simplex::Status::infeasible) {
    const std::size_t i = res.violated_row;
    const std::string& label = i < lp.equalities.size()
                                   ? lp.equalities[i].label
                                   : lp.inequalities[i - lp.equalities.size()].label;
    throw AssumptionIncompatible(label, res.violation);
  }
  if (res.status == simplex::Status::unbounded) {
    throw std::logic_error("strata LP reported unbounded; the feasible set is a simplex");
  }

  std::array<double, kStrata> psi{};
  std::copy(res.x.begin(), res.x.end(), psi.begin());
  LpSolution sol{res.value, StrataDistribution16(psi, lp.reference), res.duals, 0.0};
  for (std::size_t i = 0; i < p.rows.size(); ++i) sol.dual_objective += p.rows[i].rhs * res.duals[i];
  return sol;
}

LpBounds anie_bounds_lp_with_witness(const ObservedDistribution& dist, const EstimandSpec& spec) {
  const LpSolution lo = solve(build_lp(dist, spec, LpSense::minimize));
  const LpSolution hi = solve(build_lp(dist, spec, LpSense::maximize));

  BoundsResult b;
  b.spec = spec;
  b.method = Method::lp;
  b.fingerprint = dist.fingerprint();
  const int r = spec.reference;
  const double identified = dist.outcome_mean(r);
  // delta(1) = E[Y(1,M(1))] - E[Y(1,M(0))]; delta(0) = E[Y(0,M(1))] - E[Y(0,M(0))].
  if (r == 1) {
    b.lower = std::clamp(identified - hi.value, -1.0, 1.0);
    b.upper = std::clamp(identified - lo.value, -1.0, 1.0);
    return {b, hi.witness, lo.witness};
  }
  b.lower = std::clamp(lo.value - identified, -1.0, 1.0);
  b.upper = std::clamp(hi.value - identified, -1.0, 1.0);
  return {b, lo.witness, hi.witness};
}

BoundsResult anie_bounds_lp(const ObservedDistribution& dist, const EstimandSpec& spec) {
  return anie_bounds_lp_with_witness(dist, spec).bounds;
}

void write_lp_text(std::ostream& out, const LinearProgram& lp) {
  auto row_text = [](const std::array<double, kStrata>& coef) {
    std::string s;
    for (std::size_t j = 0; j < kStrata; ++j) {
      if (j) s += ' ';
      s += fmt::format("{:g}", coef[j] == 0.0 ? 0.0 : coef[j]);
    }
    return s;
  };
  out << fmt::format("# strata LP reference={} assumptions={} columns=psi[y1 y0 m1 m0] lexicographic\n",
                     lp.reference, to_string(lp.assumptions));
  out << (lp.sense == LpSense::maximize ? "max" : "min") << " objective: " << row_text(lp.objective)
      << '\n';
  for (const auto& row : lp.equalities) {
    out << "eq " << row.label << ": " << row_text(row.coef) << fmt::format(" = {:.12g}\n", row.rhs);
  }
  for (const auto& row : lp.inequalities) {
    out << "ge " << row.label << ": " << row_text(row.coef) << fmt::format(" >= {:.12g}\n", row.rhs);
  }
}

std::string to_lp_text(const LinearProgram& lp) {
  std::ostringstream os;
  write_lp_text(os, lp);
  return os.str();
}

}  // namespace mbounds
