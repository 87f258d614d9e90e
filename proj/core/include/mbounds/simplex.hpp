#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace mbounds::simplex {

// Dense two-phase tableau simplex with Bland's rule. Sized for problems with a
// few dozen variables; no sparsity, no presolve, no perturbation.

enum class Sense { minimize, maximize };
enum class RowKind { equal, greater_equal, less_equal };

struct Constraint {
  std::vector<double> coef;
  RowKind kind = RowKind::equal;
  double rhs = 0.0;
};

/// optimize objective'x subject to rows, x >= 0.
struct Problem {
  std::vector<double> objective;
  Sense sense = Sense::minimize;
  std::vector<Constraint> rows;
};

enum class Status { optimal, infeasible, unbounded };

struct Result {
  Status status = Status::infeasible;
  double value = 0.0;
  std::vector<double> x;
  /// One multiplier per row in the problem's own sign convention, so that at an
  /// optimum value == sum_i rows[i].rhs * duals[i].
  std::vector<double> duals;
  /// For infeasible problems: the row whose phase-one artificial variable stayed
  /// largest, and that remaining amount.
  std::size_t violated_row = 0;
  double violation = 0.0;
  std::size_t pivots = 0;
};

struct Options {
  double pivot_tolerance = 1e-12;
  double feasibility_tolerance = 1e-9;
  std::size_t max_pivots = 100000;
};

Result solve(const Problem& problem, const Options& options = {});

std::string to_string(Status status);

}  // namespace mbounds::simplex
