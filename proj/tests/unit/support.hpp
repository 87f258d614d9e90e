#pragma once

// Shared fixtures and independent oracles for the test suites.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "mbounds/model.hpp"
#include "mbounds/rng.hpp"

namespace mbounds::test {

using Cells = std::array<double, kCells>;

inline ObservedDistribution arms(std::array<double, 4> arm0, std::array<double, 4> arm1) {
  return ObservedDistribution::analytic(arm0, arm1);
}

// Arm vectors are (p00, p01, p10, p11) for that arm.
inline ObservedDistribution uniform_dist() { return arms({.25, .25, .25, .25}, {.25, .25, .25, .25}); }
inline ObservedDistribution e1_dist() { return arms({.4, .3, .2, .1}, {.1, .2, .3, .4}); }

inline std::array<double, 4> dirichlet4(Rng& rng) {
  std::array<double, 4> g{};
  double s = 0.0;
  for (auto& x : g) s += (x = rng.exponential());
  for (auto& x : g) x /= s;
  // Exact unit sum: push the residue onto the largest cell.
  double t = 0.0;
  for (double x : g) t += x;
  *std::max_element(g.begin(), g.end()) += 1.0 - t;
  return g;
}

inline ObservedDistribution random_dist(Rng& rng) {
  const auto a0 = dirichlet4(rng);
  const auto a1 = dirichlet4(rng);
  return ObservedDistribution::analytic(a0, a1);
}

// Random distribution with ATM >= 0 by rejection.
inline ObservedDistribution random_mmr_dist(Rng& rng) {
  for (;;) {
    auto d = random_dist(rng);
    if (atm(d) >= 0.0) return d;
  }
}

// Random distribution with some zero cells, to exercise degenerate vertices.
inline ObservedDistribution random_sparse_dist(Rng& rng) {
  auto arm = [&] {
    std::array<double, 4> g{};
    double s = 0.0;
    for (auto& x : g) {
      x = rng.uniform() < 0.35 ? 0.0 : rng.exponential();
      s += x;
    }
    if (s == 0.0) {
      g[rng.bits() % 4] = 1.0;
      return g;
    }
    for (auto& x : g) x /= s;
    double t = 0.0;
    for (double x : g) t += x;
    *std::max_element(g.begin(), g.end()) += 1.0 - t;
    return g;
  };
  const auto a0 = arm();
  const auto a1 = arm();
  return ObservedDistribution::analytic(a0, a1);
}

// Distribution with ATM exactly zero: both arms share the mediator margin.
inline ObservedDistribution random_zero_atm_dist(Rng& rng) {
  const double pm = std::round(rng.uniform() * 64.0) / 64.0;
  auto arm = [&] {
    const double s1 = std::round(rng.uniform() * 64.0) / 64.0;  // P(Y=1 | M=1)
    const double s0 = std::round(rng.uniform() * 64.0) / 64.0;  // P(Y=1 | M=0)
    return std::array<double, 4>{(1 - s0) * (1 - pm), (1 - s1) * pm, s0 * (1 - pm), s1 * pm};
  };
  const auto a0 = arm();
  const auto a1 = arm();
  return ObservedDistribution::analytic(a0, a1);
}

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  bool feasible = false;
};

// Sharp interval for delta(reference) by exhaustive enumeration of the basic
// solutions of the strata system. Rows: the four reference-arm cells and the
// opposite-arm mediator margin. Defier columns are dropped under MMR; the signed
// mediator-effect constraint becomes an equality with a slack column.
inline Interval vertex_oracle(const ObservedDistribution& d, int r, Assumptions as, int sign = 1) {
  struct Col {
    int y1, y0, m1, m0;
    bool slack;
  };
  std::vector<Col> cols;
  for (int y1 = 0; y1 < 2; ++y1)
    for (int y0 = 0; y0 < 2; ++y0)
      for (int m1 = 0; m1 < 2; ++m1)
        for (int m0 = 0; m0 < 2; ++m0) {
          if (as != Assumptions::none && m1 == 0 && m0 == 1) continue;
          cols.push_back({y1, y0, m1, m0, false});
        }
  const bool signed_row = as == Assumptions::mmr_pos_mediator;
  if (signed_row) cols.push_back({0, 0, 0, 0, true});

  const int rows = signed_row ? 6 : 5;
  const int n = static_cast<int>(cols.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, n);
  Eigen::VectorXd b(rows);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) {
    const Col& k = cols[j];
    if (k.slack) {
      A(5, j) = -1.0;
      continue;
    }
    const int m_ref = r == 1 ? k.m1 : k.m0;
    const int m_opp = r == 1 ? k.m0 : k.m1;
    const int y_obs = m_ref == 1 ? k.y1 : k.y0;
    A(2 * y_obs + m_ref, j) = 1.0;
    A(4, j) = m_opp;
    if (signed_row) A(5, j) = sign * (k.y1 - k.y0);
    c(j) = m_opp == 1 ? k.y1 : k.y0;
  }
  for (int y = 0; y < 2; ++y)
    for (int m = 0; m < 2; ++m) b(2 * y + m) = d.p(y, m, r);
  b(4) = d.p(0, 1, 1 - r) + d.p(1, 1, 1 - r);
  if (signed_row) b(5) = 0.0;

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  std::vector<int> pick(rows);
  // Enumerate subsets of size `rows` in lexicographic order.
  for (int i = 0; i < rows; ++i) pick[i] = i;
  for (;;) {
    Eigen::MatrixXd B(rows, rows);
    for (int i = 0; i < rows; ++i) B.col(i) = A.col(pick[i]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
    if (lu.isInvertible()) {
      const Eigen::VectorXd x = lu.solve(b);
      if ((B * x - b).cwiseAbs().maxCoeff() < 1e-10 && x.minCoeff() > -1e-11) {
        double v = 0.0;
        for (int i = 0; i < rows; ++i) v += c(pick[i]) * x(i);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    int i = rows - 1;
    while (i >= 0 && pick[i] == n - rows + i) --i;
    if (i < 0) break;
    ++pick[i];
    for (int k = i + 1; k < rows; ++k) pick[k] = pick[k - 1] + 1;
  }
  if (!(lo <= hi)) return {};
  if (r == 1) {
    const double ey = d.outcome_mean(1);
    return {ey - hi, ey - lo, true};
  }
  const double ey = d.outcome_mean(0);
  return {lo - ey, hi - ey, true};
}

// Test-side closed form for the signed-effect lower bound at reference 1.
inline double mmr_pos_lower_oracle(const ObservedDistribution& d) {
  const double t = atm(d);
  const double c = std::min(t, d.p(0, 1, 1));
  return std::max(-c, t - c - d.p(1, 1, 1) - d.p(0, 0, 1));
}

}  // namespace mbounds::test
