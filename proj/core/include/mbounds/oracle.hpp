#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mbounds/lp.hpp"
#include "mbounds/model.hpp"
#include "mbounds/rng.hpp"

namespace mbounds {

inline constexpr std::size_t kJointStrata = 64;

/// Flat index of the joint stratum (Y(1,1), Y(1,0), Y(0,1), Y(0,0), M(1), M(0)).
constexpr std::size_t joint_index(int y11, int y10, int y01, int y00, int m1, int m0) noexcept {
  return static_cast<std::size_t>(32 * y11 + 16 * y10 + 8 * y01 + 4 * y00 + 2 * m1 + m0);
}

/// A full potential-outcome population: the ground truth every bound is
/// checked against.
class FullPopulation64 {
 public:
  static constexpr double kSumTolerance = 1e-12;

  /// Validates nonnegativity and the unit sum; throws ValidationError.
  explicit FullPopulation64(const std::array<double, kJointStrata>& q);

  static FullPopulation64 point_mass(int y11, int y10, int y01, int y00, int m1, int m0);

  double operator()(int y11, int y10, int y01, int y00, int m1, int m0) const noexcept {
    return q_[joint_index(y11, y10, y01, y00, m1, m0)];
  }
  const std::array<double, kJointStrata>& values() const noexcept { return q_; }

  /// Principal strata proportions rho[s][t] = P(M(1) = s, M(0) = t).
  std::array<std::array<double, 2>, 2> strata_proportions() const noexcept;

  /// Marginal over the augmented strata of reference arm r: (Y(r,1), Y(r,0), M(1), M(0)).
  StrataDistribution16 marginalize(int reference) const;

  /// E[Y(a, 1) - Y(a, 0)], the average mediator effect at treatment level a.
  double mediator_effect(int a) const noexcept;

  /// True when no mass sits on mechanism defiers (tolerance `tol`).
  bool satisfies_mmr(double tol = 0.0) const noexcept;
  /// True when the population meets every assumption in `spec`.
  bool satisfies(const EstimandSpec& spec, double tol = 0.0) const noexcept;

 private:
  std::array<double, kJointStrata> q_{};
};

struct TrueEstimands {
  double tau = 0.0;
  double alpha = 0.0;
  double delta0 = 0.0;
  double delta1 = 0.0;
  double zeta0 = 0.0;
  double zeta1 = 0.0;

  double delta(int a) const noexcept { return a == 1 ? delta1 : delta0; }
  double zeta(int a) const noexcept { return a == 1 ? zeta1 : zeta0; }
};

/// Exact expectations by summation over the 64 strata.
TrueEstimands true_estimands(const FullPopulation64& pop) noexcept;

/// The observed distribution under randomized treatment and consistency.
/// Arm sizes are zero (analytic distribution).
ObservedDistribution observed_from_population(const FullPopulation64& pop);

/// delta(a) from the complier/defier expansion: complier mediator effect times
/// rho10 minus defier mediator effect times rho01.
double anie_strata_expansion(const FullPopulation64& pop, int a) noexcept;

/// delta(a) as complier mediator effect times the ATM; equals delta(a) when
/// there are no defiers.
double anie_product_form(const FullPopulation64& pop, int a) noexcept;

enum class PopulationSupport { all_strata, mmr_strata };

/// Dirichlet(1, ..., 1) over the 64 strata or over the 32 without defiers.
FullPopulation64 random_population(Rng& rng, PopulationSupport support);

/// Random population satisfying `spec`'s assumptions (rejection sampling for
/// the signed mediator effect).
FullPopulation64 random_population(Rng& rng, const EstimandSpec& spec);

/// Compliers and defiers in equal measure with opposite mediator effects: the
/// ATM is exactly zero while delta(1) = 0.5.
FullPopulation64 iot_insufficiency_population();

struct SoundnessReport {
  bool pass = false;
  /// False when the population breaks the assumptions; a failure is then an
  /// assumption-violation demonstration rather than a defect.
  bool assumptions_hold = true;
  double truth = 0.0;
  BoundsResult bounds;
};

/// Is the true delta(spec.reference) inside the bounds computed from the
/// population's observed distribution? Uses the closed form where one exists and
/// the LP otherwise.
SoundnessReport soundness_check(const FullPopulation64& pop, const EstimandSpec& spec);

struct EndpointCheck {
  double endpoint = 0.0;
  /// True delta(reference) of the reconstructed population.
  double attained = 0.0;
  /// Largest absolute difference between the reconstructed population's observed
  /// cells and the input distribution.
  double observed_residual = 0.0;
  bool pass = false;
};

struct SharpnessReport {
  bool pass = false;
  bool incompatible = false;
  std::string message;
  std::optional<EndpointCheck> lower;
  std::optional<EndpointCheck> upper;
};

/// Completes a 16-strata witness to a full population. The potential outcomes of
/// the opposite arm are drawn independently of everything else with
/// P(Y(1-r, m) = 1) equal to the observed P(Y = 1 | M = m, A = 1-r).
FullPopulation64 extend_witness(const StrataDistribution16& psi, const ObservedDistribution& dist);

/// Rebuilds a population for each LP endpoint and verifies it reproduces `dist`
/// and attains the endpoint within 1e-9.
SharpnessReport sharpness_check(const ObservedDistribution& dist, const EstimandSpec& spec);

/// n_per_arm treated units followed by n_per_arm controls, strata drawn i.i.d.
/// from `pop`, observed values by consistency. Deterministic in `seed`.
std::vector<UnitRecord> sample_records(const FullPopulation64& pop, std::size_t n_per_arm,
                                       std::uint64_t seed);

}  // namespace mbounds
