#include "mbounds/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <fmt/format.h>

#include "mbounds/closed_form.hpp"
#include "mbounds/lp.hpp"
#include "mbounds/rng.hpp"

namespace mbounds {
namespace {

constexpr double kDegenerateSe = 1e-12;
constexpr double kLpAgreement = 1e-9;

void require_two_per_arm(const CellCounts& counts) {
  for (int a = 0; a < 2; ++a) {
    if (counts.arm_total(a) < 2) {
      throw InsufficientDataError("treatment arm " + std::to_string(a) + " has " +
                                  std::to_string(counts.arm_total(a)) +
                                  " records; at least 2 are required");
    }
  }
}

CovarianceMatrix multinomial_covariance(const std::array<double, kCells>& p,
                                        const CellCounts& counts) {
  CovarianceMatrix cov{};
  for (int a = 0; a < 2; ++a) {
    const double n = static_cast<double>(counts.arm_total(a));
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 4; ++j) {
        const std::size_t ii = 4 * static_cast<std::size_t>(a) + i;
        const std::size_t jj = 4 * static_cast<std::size_t>(a) + j;
        cov[ii][jj] = ((i == j ? p[ii] : 0.0) - p[ii] * p[jj]) / n;
      }
    }
  }
  return cov;
}

// Covariance used for standard errors: arms containing an empty cell are
// smoothed by adding one half to every cell count.
CovarianceMatrix smoothed_covariance(const CellCounts& counts, bool& smoothed) {
  std::array<double, kCells> p{};
  smoothed = false;
  for (int a = 0; a < 2; ++a) {
    bool has_zero = false;
    for (std::size_t k = 0; k < 4; ++k) has_zero |= counts.n[4 * a + k] == 0;
    smoothed |= has_zero;
    const double n = static_cast<double>(counts.arm_total(a));
    for (std::size_t k = 0; k < 4; ++k) {
      const double c = static_cast<double>(counts.n[4 * a + k]);
      p[4 * a + k] = has_zero ? (c + 0.5) / (n + 2.0) : c / n;
    }
  }
  return multinomial_covariance(p, counts);
}

Eigen::Matrix<double, 8, 8> to_eigen(const CovarianceMatrix& cov) {
  Eigen::Matrix<double, 8, 8> m;
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) m(i, j) = cov[i][j];
  return m;
}

// Symmetric square root of a PSD matrix, negative eigenvalues clipped.
Eigen::Matrix<double, 8, 8> psd_sqrt(const Eigen::Matrix<double, 8, 8>& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 8, 8>> es(m);
  Eigen::Matrix<double, 8, 1> root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

WaldEstimate difference_in_means(double q1, double q0, double n1, double n0, double alpha) {
  WaldEstimate w;
  w.level = 1.0 - alpha;
  w.estimate = q1 - q0;
  w.standard_error = std::sqrt(q1 * (1.0 - q1) / n1 + q0 * (1.0 - q0) / n0);
  const double z = normal_quantile(1.0 - alpha / 2.0);
  w.ci_lower = w.estimate - z * w.standard_error;
  w.ci_upper = w.estimate + z * w.standard_error;
  return w;
}

// Shared normal sample: draw r uses its own substream so the sample does not
// depend on evaluation order.
std::vector<Eigen::Matrix<double, 8, 1>> draw_normals(std::size_t draws, std::uint64_t seed) {
  std::vector<Eigen::Matrix<double, 8, 1>> out(draws);
  for (std::size_t r = 0; r < draws; ++r) {
    Rng rng(seed, r);
    for (int k = 0; k < 8; ++k) out[r](k) = rng.normal();
  }
  return out;
}

// P(chi_q <= t) for t >= 0.
double chi_cdf(int q, double t) {
  const double h = 0.5 * t * t;
  switch (q) {
    case 1: return std::erf(t / std::numbers::sqrt2);
    case 2: return -std::expm1(-h);
    case 3: return std::erf(t / std::numbers::sqrt2) - std::sqrt(2.0 / std::numbers::pi) * t * std::exp(-h);
    case 4: return -std::expm1(-h) - h * std::exp(-h);
    default: return boost::math::gamma_p(0.5 * q, h);
  }
}

// Direction values g = max_j b_j'u, u = w / |w| uniform on the q-sphere, for the
// maximum of unit-variance normals b_j'w with w standard normal in R^q.
struct Directions {
  int q = 0;
  std::vector<double> g;
};

// gamma-quantile of max_j b_j'w. The radius |w| ~ chi_q is integrated exactly
// given each direction.
double radial_quantile(const Directions& d, double gamma) {
  if (d.g.empty()) return 0.0;
  auto cdf = [&](double k) {
    double s = 0.0;
    for (double x : d.g) {
      if (k >= 0.0) {
        s += x <= 0.0 ? 1.0 : chi_cdf(d.q, k / x);
      } else if (x < 0.0) {
        s += 1.0 - chi_cdf(d.q, k / x);
      }
    }
    return s / static_cast<double>(d.g.size());
  };
  double lo = -1.0;
  double hi = 1.0;
  while (cdf(lo) > gamma && lo > -64.0) lo *= 2.0;
  while (cdf(hi) < gamma && hi < 64.0) hi *= 2.0;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < gamma ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct SideInput {
  std::vector<std::array<double, kCells>> coef;  // oriented so the bound is a min
  std::vector<double> estimate;
  std::vector<double> se;
};

struct SideOutput {
  double hmu = 0.0;
  double ci = 0.0;
  double plugin = 0.0;
  SideDiagnostics diag;
  std::vector<bool> selected;
};

// Studentized deviations of the expressions in `members` span a q-dimensional
// subspace; each draw is projected onto it and reduced to its direction.
Directions max_deviation(const SideInput& side, const std::vector<std::size_t>& members,
                         const Eigen::Matrix<double, 8, 8>& root,
                         const std::vector<Eigen::Matrix<double, 8, 1>>& normals) {
  Directions out;
  if (members.empty()) return out;
  Eigen::MatrixXd A(8, static_cast<Eigen::Index>(members.size()));
  for (std::size_t i = 0; i < members.size(); ++i) {
    Eigen::Matrix<double, 8, 1> c;
    for (int k = 0; k < 8; ++k) c(k) = side.coef[members[i]][static_cast<std::size_t>(k)];
    A.col(static_cast<Eigen::Index>(i)) = root * c / side.se[members[i]];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  qr.setThreshold(1e-10);
  out.q = static_cast<int>(qr.rank());
  const Eigen::MatrixXd Q = Eigen::MatrixXd(qr.householderQ()).leftCols(out.q);
  const Eigen::MatrixXd B = Q.transpose() * A;
  out.g.reserve(normals.size());
  for (const auto& z : normals) {
    const Eigen::VectorXd w = Q.transpose() * z;
    const double radius = w.norm();
    if (radius == 0.0) {
      out.g.push_back(0.0);
      continue;
    }
    out.g.push_back((B.transpose() * w).maxCoeff() / radius);
  }
  return out;
}

SideOutput min_side(const SideInput& side, const Eigen::Matrix<double, 8, 8>& root,
                    const std::vector<Eigen::Matrix<double, 8, 1>>& normals,
                    double alpha, double selection_slack, double total_n) {
  const std::size_t J = side.coef.size();
  std::vector<std::size_t> active;
  for (std::size_t j = 0; j < J; ++j)
    if (side.se[j] > kDegenerateSe) active.push_back(j);

  SideOutput out;
  out.plugin = *std::min_element(side.estimate.begin(), side.estimate.end());

  const double gamma0 = 1.0 - 1.0 / std::log(total_n);
  out.diag.k_selection = std::max(0.0, radial_quantile(max_deviation(side, active, root, normals), gamma0));

  double threshold = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < J; ++j) {
    threshold = std::min(threshold, side.estimate[j] + selection_slack * out.diag.k_selection * side.se[j]);
  }
  out.selected.assign(J, false);
  std::vector<std::size_t> selected_active;
  for (std::size_t j = 0; j < J; ++j) {
    if (side.estimate[j] <= threshold) {
      out.selected[j] = true;
      out.diag.selected.push_back(static_cast<int>(j));
      if (side.se[j] > kDegenerateSe) selected_active.push_back(j);
    }
  }

  const Directions dev = max_deviation(side, selected_active, root, normals);
  out.diag.k_half = std::max(0.0, radial_quantile(dev, 0.5));
  out.diag.k_ci = std::max(out.diag.k_half, radial_quantile(dev, 1.0 - alpha / 2.0));

  out.hmu = std::numeric_limits<double>::infinity();
  out.ci = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < J; ++j) {
    out.hmu = std::min(out.hmu, side.estimate[j] + out.diag.k_half * side.se[j]);
    out.ci = std::min(out.ci, side.estimate[j] + out.diag.k_ci * side.se[j]);
  }
  return out;
}

double quadratic_form(const std::array<double, kCells>& c, const CovarianceMatrix& cov) {
  double v = 0.0;
  for (std::size_t i = 0; i < kCells; ++i)
    for (std::size_t j = 0; j < kCells; ++j) v += c[i] * cov[i][j] * c[j];
  return std::max(v, 0.0);
}

}  // namespace

void InferenceConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  if (draws < 100) throw ValidationError("at least 100 critical-value draws are required");
  if (!(selection_slack >= 0.0)) throw ValidationError("selection slack must be nonnegative");
}

double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

DistributionEstimate estimate_distribution(const CellCounts& counts) {
  require_two_per_arm(counts);
  ObservedDistribution dist = from_counts(counts);
  return {dist, counts, multinomial_covariance(dist.cells(), counts)};
}

DistributionEstimate estimate_distribution(std::span<const UnitRecord> records) {
  return estimate_distribution(tabulate(records));
}

WaldEstimate iot_test(const CellCounts& counts, const InferenceConfig& config) {
  config.validate();
  require_two_per_arm(counts);
  const ObservedDistribution d = from_counts(counts);
  return difference_in_means(d.mediator_mean(1), d.mediator_mean(0),
                             static_cast<double>(d.n(1)), static_cast<double>(d.n(0)), config.alpha);
}

WaldEstimate iot_test(std::span<const UnitRecord> records, const InferenceConfig& config) {
  return iot_test(tabulate(records), config);
}

WaldEstimate ate_test(const CellCounts& counts, const InferenceConfig& config) {
  config.validate();
  require_two_per_arm(counts);
  const ObservedDistribution d = from_counts(counts);
  return difference_in_means(d.outcome_mean(1), d.outcome_mean(0),
                             static_cast<double>(d.n(1)), static_cast<double>(d.n(0)), config.alpha);
}

WaldEstimate ate_test(std::span<const UnitRecord> records, const InferenceConfig& config) {
  return ate_test(tabulate(records), config);
}

IntervalEstimate clr_bounds(std::span<const UnitRecord> records, const EstimandSpec& spec,
                            const InferenceConfig& config) {
  return clr_bounds(tabulate(records), spec, config);
}

IntervalEstimate clr_bounds(const CellCounts& counts, const EstimandSpec& spec,
                            const InferenceConfig& config) {
  spec.validate();
  config.validate();
  const DistributionEstimate est = estimate_distribution(counts);
  const ObservedDistribution& dist = est.distribution;

  IntervalEstimate out;
  out.spec = spec;
  out.level = 1.0 - config.alpha;

  // Which sides can use closed-form expressions. For the signed mediator-effect
  // case the printed lists are only used on a side where they match the LP here.
  bool lower_closed = has_closed_form(spec);
  bool upper_closed = lower_closed;
  double lp_lower = std::numeric_limits<double>::quiet_NaN();
  double lp_upper = std::numeric_limits<double>::quiet_NaN();
  if (spec.assumptions == Assumptions::mmr_pos_mediator) {
    try {
      const BoundsResult lp = anie_bounds_lp(dist, spec);
      lp_lower = lp.lower;
      lp_upper = lp.upper;
    } catch (const AssumptionIncompatible& e) {
      out.assumption_incompatible = true;
      out.diagnostics.push_back(e.what());
    }
    if (lower_closed && !out.assumption_incompatible) {
      const ExpressionSet printed = bounding_expressions(spec);
      double cf_lower = -std::numeric_limits<double>::infinity();
      double cf_upper = std::numeric_limits<double>::infinity();
      for (const auto& e : printed.lower) cf_lower = std::max(cf_lower, e.evaluate(dist));
      for (const auto& e : printed.upper) cf_upper = std::min(cf_upper, e.evaluate(dist));
      lower_closed = std::abs(cf_lower - lp_lower) <= kLpAgreement;
      upper_closed = std::abs(cf_upper - lp_upper) <= kLpAgreement;
    }
  }
  if (spec.assumptions != Assumptions::none && atm(dist) < 0.0) {
    out.assumption_incompatible = true;
    out.diagnostics.push_back(fmt::format(
        "estimated ATM {:.6g} < 0 contradicts monotonic mediator response", atm(dist)));
  }

  bool smoothed = false;
  const CovarianceMatrix cov = smoothed_covariance(counts, smoothed);
  if (smoothed) {
    out.diagnostics.push_back("empty cell(s): standard errors use add-half smoothed frequencies");
  }

  const Eigen::Matrix<double, 8, 8> root = psd_sqrt(to_eigen(cov));
  std::vector<Eigen::Matrix<double, 8, 1>> normals;
  auto shared_normals = [&]() -> const std::vector<Eigen::Matrix<double, 8, 1>>& {
    if (normals.empty()) normals = draw_normals(config.draws, config.seed);
    return normals;
  };
  const double total_n = static_cast<double>(counts.arm_total(0) + counts.arm_total(1));

  ExpressionSet set;
  if (lower_closed || upper_closed) set = bounding_expressions(spec);

  auto run_side = [&](const std::vector<LinearExpression>& exprs, bool is_upper) {
    SideInput in;
    const double orient = is_upper ? 1.0 : -1.0;
    for (const auto& e : exprs) {
      std::array<double, kCells> c{};
      for (std::size_t k = 0; k < kCells; ++k) c[k] = orient * e.coef[k];
      in.coef.push_back(c);
      in.estimate.push_back(orient * e.evaluate(dist));
      in.se.push_back(std::sqrt(quadratic_form(c, cov)));
    }
    SideOutput res = min_side(in, root, shared_normals(), config.alpha, config.selection_slack, total_n);
    for (std::size_t j = 0; j < exprs.size(); ++j) {
      const bool degenerate = in.se[j] <= kDegenerateSe;
      if (degenerate) {
        out.degenerate_covariance = true;
        out.diagnostics.push_back("zero standard error for '" + exprs[j].label +
                                  "': evaluated as a point");
      }
      out.expression_estimates.push_back(
          {exprs[j].label, is_upper, orient * in.estimate[j], in.se[j], res.selected[j], degenerate});
    }
    res.hmu *= orient;
    res.ci *= orient;
    res.plugin *= orient;
    return res;
  };

  auto no_inference = [&](double value, SideDiagnostics& diag, double& hmu, double& ci,
                          double& plugin, const char* side) {
    diag.inference = false;
    hmu = ci = plugin = value;
    out.diagnostics.push_back(fmt::format("{} bound from LP only: no inference", side));
  };

  if (lower_closed) {
    SideOutput lo = run_side(set.lower, false);
    out.bound_lower_hmu = std::clamp(lo.hmu, -1.0, 1.0);
    out.ci_lower = std::clamp(lo.ci, -1.0, 1.0);
    out.plugin_lower = std::clamp(lo.plugin, -1.0, 1.0);
    out.lower = lo.diag;
  } else {
    no_inference(lp_lower, out.lower, out.bound_lower_hmu, out.ci_lower, out.plugin_lower, "lower");
  }
  if (upper_closed) {
    SideOutput hi = run_side(set.upper, true);
    out.bound_upper_hmu = std::clamp(hi.hmu, -1.0, 1.0);
    out.ci_upper = std::clamp(hi.ci, -1.0, 1.0);
    out.plugin_upper = std::clamp(hi.plugin, -1.0, 1.0);
    out.upper = hi.diag;
  } else {
    no_inference(lp_upper, out.upper, out.bound_upper_hmu, out.ci_upper, out.plugin_upper, "upper");
  }

  out.crossed = out.bound_lower_hmu > out.bound_upper_hmu + 1e-9;
  if (out.crossed) out.diagnostics.push_back("half-median-unbiased bounds cross");
  return out;
}

}  // namespace mbounds
