#include "mbounds/simplex.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mbounds::simplex {
namespace {

class Tableau {
 public:
  Tableau(const Problem& p, double eps) : eps_(eps) {
    m_ = p.rows.size();
    n_ = p.objective.size();
    for (const auto& r : p.rows) {
      if (r.coef.size() != n_) throw std::invalid_argument("constraint width does not match objective");
      if (r.kind != RowKind::equal) ++slacks_;
    }
    cols_ = n_ + slacks_ + m_;
    a_.assign(m_ * cols_, 0.0);
    b_.assign(m_, 0.0);
    flipped_.assign(m_, false);
    basis_.assign(m_, 0);

    std::size_t slack = n_;
    for (std::size_t i = 0; i < m_; ++i) {
      const auto& r = p.rows[i];
      for (std::size_t j = 0; j < n_; ++j) at(i, j) = r.coef[j];
      if (r.kind == RowKind::greater_equal) at(i, slack++) = -1.0;
      if (r.kind == RowKind::less_equal) at(i, slack++) = 1.0;
      b_[i] = r.rhs;
      if (b_[i] < 0.0) {
        for (std::size_t j = 0; j < n_ + slacks_; ++j) at(i, j) = -at(i, j);
        b_[i] = -b_[i];
        flipped_[i] = true;
      }
      at(i, artificial(i)) = 1.0;
      basis_[i] = artificial(i);
    }
  }

  std::size_t artificial(std::size_t row) const { return n_ + slacks_ + row; }
  bool is_artificial(std::size_t col) const { return col >= n_ + slacks_; }

  // Minimizes cost'x over the current basis; columns with allowed[j] == false never enter.
  // Returns false if unbounded.
  bool optimize(const std::vector<double>& cost, bool artificials_allowed, std::size_t& pivots,
                std::size_t max_pivots) {
    price(cost);
    while (true) {
      std::size_t enter = cols_;
      for (std::size_t j = 0; j < cols_; ++j) {
        if (!artificials_allowed && is_artificial(j)) continue;
        if (d_[j] < -eps_) {
          enter = j;
          break;
        }
      }
      if (enter == cols_) return true;

      std::size_t leave = m_;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m_; ++i) {
        const double coef = at(i, enter);
        if (coef <= eps_) continue;
        const double ratio = b_[i] / coef;
        if (ratio < best - eps_ || (std::abs(ratio - best) <= eps_ && basis_[i] < basis_[leave])) {
          best = ratio;
          leave = i;
        }
      }
      if (leave == m_) return false;
      pivot(leave, enter);
      if (++pivots > max_pivots) throw std::logic_error("simplex pivot limit exceeded");
    }
  }

  void pivot(std::size_t row, std::size_t col) {
    const double piv = at(row, col);
    for (std::size_t j = 0; j < cols_; ++j) at(row, j) /= piv;
    b_[row] /= piv;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == row) continue;
      const double f = at(i, col);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < cols_; ++j) at(i, j) -= f * at(row, j);
      b_[i] -= f * b_[row];
      if (std::abs(b_[i]) < 1e-15) b_[i] = 0.0;
    }
    const double f = d_.empty() ? 0.0 : d_[col];
    if (f != 0.0) {
      for (std::size_t j = 0; j < cols_; ++j) d_[j] -= f * at(row, j);
    }
    basis_[row] = col;
  }

  // Pivots basic artificials (at zero level) out wherever a structural or slack
  // column has a usable entry. Rows with none are redundant and stay as they are.
  void expel_artificials() {
    for (std::size_t i = 0; i < m_; ++i) {
      if (!is_artificial(basis_[i])) continue;
      std::size_t best = cols_;
      double mag = eps_ * 1e3;
      for (std::size_t j = 0; j < n_ + slacks_; ++j) {
        if (std::abs(at(i, j)) > mag) {
          mag = std::abs(at(i, j));
          best = j;
        }
      }
      if (best != cols_) pivot(i, best);
    }
  }

  double artificial_mass(std::size_t& worst_row, double& worst) const {
    double total = 0.0;
    worst = 0.0;
    worst_row = 0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (!is_artificial(basis_[i])) continue;
      total += b_[i];
      if (b_[i] > worst) {
        worst = b_[i];
        worst_row = basis_[i] - (n_ + slacks_);
      }
    }
    return total;
  }

  std::vector<double> primal() const {
    std::vector<double> x(n_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      if (basis_[i] < n_) x[basis_[i]] = std::max(b_[i], 0.0);
    }
    return x;
  }

  // Row multipliers of the normalized system: reduced cost of artificial k is -y_k.
  std::vector<double> normalized_duals() const {
    std::vector<double> y(m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) y[i] = -d_[artificial(i)];
    return y;
  }

  bool flipped(std::size_t row) const { return flipped_[row]; }
  std::size_t columns() const { return cols_; }
  std::size_t structural() const { return n_; }

 private:
  double& at(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  double at(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

  void price(const std::vector<double>& cost) {
    d_ = cost;
    for (std::size_t i = 0; i < m_; ++i) {
      const double cb = cost[basis_[i]];
      if (cb == 0.0) continue;
      for (std::size_t j = 0; j < cols_; ++j) d_[j] -= cb * at(i, j);
    }
  }

  double eps_;
  std::size_t m_ = 0, n_ = 0, slacks_ = 0, cols_ = 0;
  std::vector<double> a_, b_, d_;
  std::vector<bool> flipped_;
  std::vector<std::size_t> basis_;
};

}  // namespace

Result solve(const Problem& problem, const Options& options) {
  Tableau t(problem, options.pivot_tolerance);
  Result result;

  std::vector<double> phase1(t.columns(), 0.0);
  for (std::size_t i = 0; i < problem.rows.size(); ++i) phase1[t.artificial(i)] = 1.0;
  t.optimize(phase1, true, result.pivots, options.max_pivots);

  std::size_t worst_row = 0;
  double worst = 0.0;
  if (t.artificial_mass(worst_row, worst) > options.feasibility_tolerance) {
    result.status = Status::infeasible;
    result.violated_row = worst_row;
    result.violation = worst;
    return result;
  }
  t.expel_artificials();

  const double sign = problem.sense == Sense::maximize ? -1.0 : 1.0;
  std::vector<double> phase2(t.columns(), 0.0);
  for (std::size_t j = 0; j < t.structural(); ++j) phase2[j] = sign * problem.objective[j];
  if (!t.optimize(phase2, false, result.pivots, options.max_pivots)) {
    result.status = Status::unbounded;
    return result;
  }

  result.status = Status::optimal;
  result.x = t.primal();
  result.value = 0.0;
  for (std::size_t j = 0; j < result.x.size(); ++j) result.value += problem.objective[j] * result.x[j];

  result.duals = t.normalized_duals();
  for (std::size_t i = 0; i < result.duals.size(); ++i) {
    if (t.flipped(i)) result.duals[i] = -result.duals[i];
    result.duals[i] *= sign;
  }
  return result;
}

std::string to_string(Status status) {
  switch (status) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
  }
  return "unknown";
}

}  // namespace mbounds::simplex
