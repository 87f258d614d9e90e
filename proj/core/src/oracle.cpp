#include "mbounds/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <numeric>

#include <fmt/format.h>

#include "mbounds/closed_form.hpp"

namespace mbounds {
namespace {

template <typename F>
void for_each_stratum(F&& f) {
  for (int y11 = 0; y11 < 2; ++y11)
    for (int y10 = 0; y10 < 2; ++y10)
      for (int y01 = 0; y01 < 2; ++y01)
        for (int y00 = 0; y00 < 2; ++y00)
          for (int m1 = 0; m1 < 2; ++m1)
            for (int m0 = 0; m0 < 2; ++m0) f(y11, y10, y01, y00, m1, m0);
}

// Y(a, m) for a stratum.
int potential_outcome(int a, int m, int y11, int y10, int y01, int y00) {
  if (a == 1) return m == 1 ? y11 : y10;
  return m == 1 ? y01 : y00;
}

constexpr double kCheckTolerance = 1e-9;

}  // namespace

FullPopulation64::FullPopulation64(const std::array<double, kJointStrata>& q) : q_(q) {
  double sum = 0.0;
  for (double& v : q_) {
    if (!std::isfinite(v) || v < 0.0) {
      throw ValidationError("population stratum probability must be nonnegative, got " +
                            std::to_string(v));
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw ValidationError("population probabilities sum to " + std::to_string(sum));
  }
}

FullPopulation64 FullPopulation64::point_mass(int y11, int y10, int y01, int y00, int m1, int m0) {
  std::array<double, kJointStrata> q{};
  q[joint_index(y11, y10, y01, y00, m1, m0)] = 1.0;
  return FullPopulation64(q);
}

std::array<std::array<double, 2>, 2> FullPopulation64::strata_proportions() const noexcept {
  std::array<std::array<double, 2>, 2> rho{};
  for_each_stratum([&](int y11, int y10, int y01, int y00, int m1, int m0) {
    rho[m1][m0] += (*this)(y11, y10, y01, y00, m1, m0);
  });
  return rho;
}

StrataDistribution16 FullPopulation64::marginalize(int reference) const {
  std::array<double, kStrata> psi{};
  for_each_stratum([&](int y11, int y10, int y01, int y00, int m1, int m0) {
    const int ya1 = potential_outcome(reference, 1, y11, y10, y01, y00);
    const int ya0 = potential_outcome(reference, 0, y11, y10, y01, y00);
    psi[stratum_index(ya1, ya0, m1, m0)] += (*this)(y11, y10, y01, y00, m1, m0);
  });
  return StrataDistribution16(psi, reference);
}

double FullPopulation64::mediator_effect(int a) const noexcept {
  double s = 0.0;
  for_each_stratum([&](int y11, int y10, int y01, int y00, int m1, int m0) {
    const double w = (*this)(y11, y10, y01, y00, m1, m0);
    s += w * (potential_outcome(a, 1, y11, y10, y01, y00) - potential_outcome(a, 0, y11, y10, y01, y00));
  });
  return s;
}

bool FullPopulation64::satisfies_mmr(double tol) const noexcept {
  return strata_proportions()[0][1] <= tol;
}

bool FullPopulation64::satisfies(const EstimandSpec& spec, double tol) const noexcept {
  switch (spec.assumptions) {
    case Assumptions::none:
      return true;
    case Assumptions::mmr:
      return satisfies_mmr(tol);
    case Assumptions::mmr_pos_mediator:
      return satisfies_mmr(tol) &&
             spec.mediator_effect_sign * mediator_effect(spec.reference) >= -tol;
  }
  return false;
}

TrueEstimands true_estimands(const FullPopulation64& pop) noexcept {
  TrueEstimands t;
  for_each_stratum([&](int y11, int y10, int y01, int y00, int m1, int m0) {
    const double w = pop(y11, y10, y01, y00, m1, m0);
    if (w == 0.0) return;
    auto Y = [&](int a, int m) { return potential_outcome(a, m, y11, y10, y01, y00); };
    t.tau += w * (Y(1, m1) - Y(0, m0));
    t.alpha += w * (m1 - m0);
    t.delta1 += w * (Y(1, m1) - Y(1, m0));
    t.delta0 += w * (Y(0, m1) - Y(0, m0));
    t.zeta1 += w * (Y(1, m1) - Y(0, m1));
    t.zeta0 += w * (Y(1, m0) - Y(0, m0));
  });
  return t;
}

ObservedDistribution observed_from_population(const FullPopulation64& pop) {
  std::array<double, kCells> cells{};
  for_each_stratum([&](int y11, int y10, int y01, int y00, int m1, int m0) {
    const double w = pop(y11, y10, y01, y00, m1, m0);
    cells[cell_index(potential_outcome(1, m1, y11, y10, y01, y00), m1, 1)] += w;
    cells[cell_index(potential_outcome(0, m0, y11, y10, y01, y00), m0, 0)] += w;
  });
  // Summation order can leave the arm total a few ulps away from 1.
  for (int a = 0; a < 2; ++a) {
    const double s = cells[4 * a] + cells[4 * a + 1] + cells[4 * a + 2] + cells[4 * a + 3];
    for (int k = 0; k < 4; ++k) cells[4 * a + k] = std::clamp(cells[4 * a + k] / s, 0.0, 1.0);
  }
  return ObservedDistribution::analytic(cells);
}

double anie_strata_expansion(const FullPopulation64& pop, int a) noexcept {
  // Sum over compliers and defiers of the mediator effect, signed by stratum.
  double complier_effect = 0.0;  // E[Y(a,1) - Y(a,0) | complier] * rho10
  double defier_effect = 0.0;    // E[Y(a,1) - Y(a,0) | defier] * rho01
  for_each_stratum([&](int y11, int y10, int y01, int y00, int m1, int m0) {
    const double w = pop(y11, y10, y01, y00, m1, m0);
    const int effect = potential_outcome(a, 1, y11, y10, y01, y00) - potential_outcome(a, 0, y11, y10, y01, y00);
    if (m1 == 1 && m0 == 0) complier_effect += w * effect;
    if (m1 == 0 && m0 == 1) defier_effect += w * effect;
  });
  return complier_effect - defier_effect;
}

double anie_product_form(const FullPopulation64& pop, int a) noexcept {
  const auto rho = pop.strata_proportions();
  if (rho[1][0] == 0.0) return 0.0;
  double complier_effect = 0.0;
  for_each_stratum([&](int y11, int y10, int y01, int y00, int m1, int m0) {
    if (m1 == 1 && m0 == 0) {
      complier_effect += pop(y11, y10, y01, y00, m1, m0) *
                         (potential_outcome(a, 1, y11, y10, y01, y00) - potential_outcome(a, 0, y11, y10, y01, y00));
    }
  });
  const double atm_value = rho[1][0] - rho[0][1];
  return complier_effect / rho[1][0] * atm_value;
}

FullPopulation64 random_population(Rng& rng, PopulationSupport support) {
  std::array<double, kJointStrata> q{};
  double sum = 0.0;
  for_each_stratum([&](int y11, int y10, int y01, int y00, int m1, int m0) {
    if (support == PopulationSupport::mmr_strata && m1 == 0 && m0 == 1) return;
    const double g = rng.exponential();
    q[joint_index(y11, y10, y01, y00, m1, m0)] = g;
    sum += g;
  });
  for (double& v : q) v /= sum;
  // Push any rounding residue onto the largest cell so the sum is exact to 1e-12.
  const double residue = 1.0 - std::accumulate(q.begin(), q.end(), 0.0);
  *std::max_element(q.begin(), q.end()) += residue;
  return FullPopulation64(q);
}

FullPopulation64 random_population(Rng& rng, const EstimandSpec& spec) {
  const PopulationSupport support =
      spec.assumptions == Assumptions::none ? PopulationSupport::all_strata : PopulationSupport::mmr_strata;
  while (true) {
    FullPopulation64 pop = random_population(rng, support);
    if (pop.satisfies(spec)) return pop;
  }
}

FullPopulation64 iot_insufficiency_population() {
  std::array<double, kJointStrata> q{};
  // Compliers whose outcome rises with the mediator.
  q[joint_index(1, 0, 0, 0, 1, 0)] = 0.25;
  // Defiers whose outcome falls with the mediator.
  q[joint_index(0, 1, 0, 0, 0, 1)] = 0.25;
  // Never-takers with no outcome either way.
  q[joint_index(0, 0, 0, 0, 0, 0)] = 0.5;
  return FullPopulation64(q);
}

SoundnessReport soundness_check(const FullPopulation64& pop, const EstimandSpec& spec) {
  SoundnessReport report;
  report.assumptions_hold = pop.satisfies(spec, 1e-12);
  report.truth = true_estimands(pop).delta(spec.reference);
  const ObservedDistribution dist = observed_from_population(pop);
  try {
    report.bounds = has_closed_form(spec) ? closed_form_bounds(dist, spec) : anie_bounds_lp(dist, spec);
  } catch (const AssumptionIncompatible& e) {
    report.bounds.assumption_incompatible = true;
    report.bounds.diagnostics.push_back(e.what());
    report.pass = false;
    return report;
  }
  report.pass = report.bounds.contains(report.truth, kCheckTolerance);
  return report;
}

FullPopulation64 extend_witness(const StrataDistribution16& psi, const ObservedDistribution& dist) {
  const int r = psi.reference();
  const int other = 1 - r;
  // P(Y(other, m) = 1), independent of everything else.
  std::array<double, 2> p_one{};
  for (int m = 0; m < 2; ++m) {
    const double margin = dist.p(0, m, other) + dist.p(1, m, other);
    p_one[m] = margin > 0.0 ? dist.p(1, m, other) / margin : 0.0;
  }
  std::array<double, kJointStrata> q{};
  for_each_stratum([&](int y11, int y10, int y01, int y00, int m1, int m0) {
    // Reference-arm outcomes come from psi, the other arm's from the product law.
    const int yr1 = r == 1 ? y11 : y01;
    const int yr0 = r == 1 ? y10 : y00;
    const int yo1 = r == 1 ? y01 : y11;
    const int yo0 = r == 1 ? y00 : y10;
    const double f1 = yo1 == 1 ? p_one[1] : 1.0 - p_one[1];
    const double f0 = yo0 == 1 ? p_one[0] : 1.0 - p_one[0];
    q[joint_index(y11, y10, y01, y00, m1, m0)] = psi(yr1, yr0, m1, m0) * f1 * f0;
  });
  const double sum = std::accumulate(q.begin(), q.end(), 0.0);
  for (double& v : q) v /= sum;
  return FullPopulation64(q);
}

SharpnessReport sharpness_check(const ObservedDistribution& dist, const EstimandSpec& spec) {
  SharpnessReport report;
  std::optional<LpBounds> lp;
  try {
    lp = anie_bounds_lp_with_witness(dist, spec);
  } catch (const AssumptionIncompatible& e) {
    report.incompatible = true;
    report.message = e.what();
    return report;
  }

  auto check = [&](double endpoint, const StrataDistribution16& witness) {
    EndpointCheck c;
    c.endpoint = endpoint;
    const FullPopulation64 pop = extend_witness(witness, dist);
    c.attained = true_estimands(pop).delta(spec.reference);
    const ObservedDistribution obs = observed_from_population(pop);
    for (std::size_t k = 0; k < kCells; ++k) {
      c.observed_residual = std::max(c.observed_residual, std::abs(obs.cells()[k] - dist.cells()[k]));
    }
    c.pass = std::abs(c.attained - endpoint) <= kCheckTolerance &&
             c.observed_residual <= kCheckTolerance && pop.satisfies(spec, kCheckTolerance);
    return c;
  };
  report.lower = check(lp->bounds.lower, lp->lower_witness);
  report.upper = check(lp->bounds.upper, lp->upper_witness);
  report.pass = report.lower->pass && report.upper->pass;
  if (!report.pass) {
    report.message = fmt::format("lower: endpoint {:.12g} attained {:.12g} residual {:.3g}; "
                                 "upper: endpoint {:.12g} attained {:.12g} residual {:.3g}",
                                 report.lower->endpoint, report.lower->attained,
                                 report.lower->observed_residual, report.upper->endpoint,
                                 report.upper->attained, report.upper->observed_residual);
  }
  return report;
}

std::vector<UnitRecord> sample_records(const FullPopulation64& pop, std::size_t n_per_arm,
                                       std::uint64_t seed) {
  if (n_per_arm == 0) throw ValidationError("n_per_arm must be at least 1");
  std::array<double, kJointStrata> cdf{};
  std::partial_sum(pop.values().begin(), pop.values().end(), cdf.begin());

  Rng rng(seed);
  std::vector<UnitRecord> out;
  out.reserve(2 * n_per_arm);
  for (int a : {1, 0}) {
    for (std::size_t i = 0; i < n_per_arm; ++i) {
      const double u = rng.uniform() * cdf.back();
      // First stratum whose cumulative mass exceeds u; never a zero-mass stratum.
      const auto k = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      const int y11 = (k >> 5) & 1, y10 = (k >> 4) & 1, y01 = (k >> 3) & 1, y00 = (k >> 2) & 1;
      const int m1 = (k >> 1) & 1, m0 = k & 1;
      const int m = a == 1 ? m1 : m0;
      out.push_back({a, m, potential_outcome(a, m, y11, y10, y01, y00)});
    }
  }
  return out;
}

}  // namespace mbounds
