#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mbounds/errors.hpp"

namespace mbounds {

/// One observed unit: treatment, mediator and outcome, each coded 0/1.
struct UnitRecord {
  int a = 0;
  int m = 0;
  int y = 0;

  bool is_binary() const noexcept {
    return (a == 0 || a == 1) && (m == 0 || m == 1) && (y == 0 || y == 1);
  }
  friend bool operator==(const UnitRecord&, const UnitRecord&) = default;
};

/// Flat index of cell (y, m) in arm a. Arm 0 occupies 0..3, arm 1 occupies 4..7,
/// and within an arm the order is 00, 01, 10, 11 in (y, m).
constexpr std::size_t cell_index(int y, int m, int a) noexcept {
  return static_cast<std::size_t>(4 * a + 2 * y + m);
}

inline constexpr std::size_t kCells = 8;

/// Cross-tabulated counts n_{ym,a} in cell_index order.
struct CellCounts {
  std::array<std::uint64_t, kCells> n{};

  std::uint64_t& operator()(int y, int m, int a) noexcept { return n[cell_index(y, m, a)]; }
  std::uint64_t operator()(int y, int m, int a) const noexcept { return n[cell_index(y, m, a)]; }
  std::uint64_t arm_total(int a) const noexcept;

  friend bool operator==(const CellCounts&, const CellCounts&) = default;
};

CellCounts tabulate(std::span<const UnitRecord> records);

/// The eight conditional probabilities p_{ym.a} = P(Y=y, M=m | A=a) plus the arm
/// sizes they were estimated from. Immutable once built.
class ObservedDistribution {
 public:
  /// Tolerance on the per-arm simplex sum for analytic inputs.
  static constexpr double kSumTolerance = 1e-12;

  /// Builds a distribution from given probabilities with zero arm sizes. Intended
  /// for analytic work and the simulation oracle; inference refuses these.
  /// Each arm is (p00, p01, p10, p11) in (y, m) order.
  static ObservedDistribution analytic(const std::array<double, 4>& arm0,
                                       const std::array<double, 4>& arm1);
  static ObservedDistribution analytic(const std::array<double, kCells>& cells);

  double p(int y, int m, int a) const noexcept { return cells_[cell_index(y, m, a)]; }
  const std::array<double, kCells>& cells() const noexcept { return cells_; }

  std::uint64_t n(int a) const noexcept { return a == 1 ? n1_ : n0_; }
  bool has_sample_sizes() const noexcept { return n0_ > 0 && n1_ > 0; }

  /// P(Y=1 | A=a)
  double outcome_mean(int a) const noexcept { return p(1, 0, a) + p(1, 1, a); }
  /// P(M=1 | A=a)
  double mediator_mean(int a) const noexcept { return p(0, 1, a) + p(1, 1, a); }

  /// Hash of the cell probabilities and arm sizes; equal distributions share it.
  std::uint64_t fingerprint() const noexcept;

  friend bool operator==(const ObservedDistribution&, const ObservedDistribution&) = default;

 private:
  ObservedDistribution(const std::array<double, kCells>& cells, std::uint64_t n0, std::uint64_t n1);
  friend ObservedDistribution from_counts(const CellCounts& counts);

  std::array<double, kCells> cells_{};
  std::uint64_t n0_ = 0;
  std::uint64_t n1_ = 0;
};

/// Normalizes counts within each arm. Throws EmptyArmError if an arm is all zero.
ObservedDistribution from_counts(const CellCounts& counts);

/// Cross-tabulates unit records then normalizes. Throws ValidationError on a
/// non-binary field and EmptyArmError when an arm has no records.
ObservedDistribution from_units(std::span<const UnitRecord> records);

/// Average treatment effect on the outcome.
double ate(const ObservedDistribution& dist) noexcept;
/// Average treatment effect on the mediator.
double atm(const ObservedDistribution& dist) noexcept;

enum class Assumptions {
  none,             // randomization only
  mmr,              // monotonic mediator response: M(1) >= M(0)
  mmr_pos_mediator  // MMR plus a signed average mediator->outcome effect
};

std::string_view to_string(Assumptions assumptions) noexcept;
/// Accepts "none", "mmr", "mmr-pos-mediator". Throws ValidationError otherwise.
Assumptions parse_assumptions(std::string_view text);

/// Which indirect effect to bound and under what assumptions.
///
/// `mediator_effect_sign` only matters for Assumptions::mmr_pos_mediator, where
/// it fixes the sign of E[Y(a_ref, 1) - Y(a_ref, 0)].
struct EstimandSpec {
  int reference = 1;
  Assumptions assumptions = Assumptions::none;
  int mediator_effect_sign = +1;

  void validate() const;
  friend bool operator==(const EstimandSpec&, const EstimandSpec&) = default;
};

enum class Method { closed_form, lp };
enum class Estimand { anie, ande };

std::string_view to_string(Method method) noexcept;

/// Identified interval for delta(reference) (or, for Estimand::ande, for
/// zeta(1 - reference)).
struct BoundsResult {
  /// Sentinel for an endpoint whose value came from the LP rather than a
  /// closed-form expression.
  static constexpr int kNoExpression = -1;

  double lower = 0.0;
  double upper = 0.0;
  int binding_lower = kNoExpression;
  int binding_upper = kNoExpression;
  EstimandSpec spec{};
  Method method = Method::closed_form;
  Estimand estimand = Estimand::anie;
  /// Set when the data contradict the assumptions (e.g. negative ATM under MMR).
  /// The interval may then be crossed.
  bool assumption_incompatible = false;
  std::uint64_t fingerprint = 0;
  std::vector<std::string> diagnostics;

  bool crossed() const noexcept { return lower > upper + 1e-9; }
  bool contains(double value, double tol = 1e-9) const noexcept {
    return value >= lower - tol && value <= upper + tol;
  }
  double width() const noexcept { return upper - lower; }
};

}  // namespace mbounds
