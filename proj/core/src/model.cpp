#include "mbounds/model.hpp"

#include <bit>
#include <cmath>
#include <numeric>

namespace mbounds {

std::uint64_t CellCounts::arm_total(int a) const noexcept {
  std::uint64_t total = 0;
  for (int y = 0; y < 2; ++y) {
    for (int m = 0; m < 2; ++m) total += (*this)(y, m, a);
  }
  return total;
}

CellCounts tabulate(std::span<const UnitRecord> records) {
  CellCounts counts;
  std::size_t row = 0;
  for (const auto& r : records) {
    if (!r.is_binary()) {
      throw ValidationError("record " + std::to_string(row) + " has a non-binary field (a=" +
                            std::to_string(r.a) + ", m=" + std::to_string(r.m) +
                            ", y=" + std::to_string(r.y) + ")");
    }
    ++counts(r.y, r.m, r.a);
    ++row;
  }
  return counts;
}

ObservedDistribution::ObservedDistribution(const std::array<double, kCells>& cells,
                                           std::uint64_t n0, std::uint64_t n1)
    : cells_(cells), n0_(n0), n1_(n1) {}

ObservedDistribution ObservedDistribution::analytic(const std::array<double, kCells>& cells) {
  for (int a = 0; a < 2; ++a) {
    double sum = 0.0;
    for (int k = 0; k < 4; ++k) {
      const double v = cells[static_cast<std::size_t>(4 * a + k)];
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        throw ValidationError("cell probability outside [0,1]: " + std::to_string(v));
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > kSumTolerance) {
      throw ValidationError("arm " + std::to_string(a) + " probabilities sum to " +
                            std::to_string(sum) + ", expected 1");
    }
  }
  return ObservedDistribution(cells, 0, 0);
}

ObservedDistribution ObservedDistribution::analytic(const std::array<double, 4>& arm0,
                                                    const std::array<double, 4>& arm1) {
  std::array<double, kCells> cells{};
  for (std::size_t k = 0; k < 4; ++k) {
    cells[k] = arm0[k];
    cells[4 + k] = arm1[k];
  }
  return analytic(cells);
}

std::uint64_t ObservedDistribution::fingerprint() const noexcept {
  // FNV-1a over the raw bytes of every field.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t word) {
    for (int i = 0; i < 8; ++i) {
      h ^= (word >> (8 * i)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  for (double v : cells_) mix(std::bit_cast<std::uint64_t>(v));
  mix(n0_);
  mix(n1_);
  return h;
}

ObservedDistribution from_counts(const CellCounts& counts) {
  std::array<double, kCells> cells{};
  for (int a = 0; a < 2; ++a) {
    const std::uint64_t total = counts.arm_total(a);
    if (total == 0) {
      throw EmptyArmError("treatment arm " + std::to_string(a) + " has no observations");
    }
    for (int y = 0; y < 2; ++y) {
      for (int m = 0; m < 2; ++m) {
        cells[cell_index(y, m, a)] =
            static_cast<double>(counts(y, m, a)) / static_cast<double>(total);
      }
    }
  }
  return ObservedDistribution(cells, counts.arm_total(0), counts.arm_total(1));
}

ObservedDistribution from_units(std::span<const UnitRecord> records) {
  return from_counts(tabulate(records));
}

double ate(const ObservedDistribution& dist) noexcept {
  return dist.outcome_mean(1) - dist.outcome_mean(0);
}

double atm(const ObservedDistribution& dist) noexcept {
  return dist.mediator_mean(1) - dist.mediator_mean(0);
}

std::string_view to_string(Assumptions assumptions) noexcept {
  switch (assumptions) {
    case Assumptions::none: return "none";
    case Assumptions::mmr: return "mmr";
    case Assumptions::mmr_pos_mediator: return "mmr-pos-mediator";
  }
  return "unknown";
}

Assumptions parse_assumptions(std::string_view text) {
  if (text == "none") return Assumptions::none;
  if (text == "mmr") return Assumptions::mmr;
  if (text == "mmr-pos-mediator") return Assumptions::mmr_pos_mediator;
  throw ValidationError("unknown assumption set '" + std::string(text) +
                        "' (expected none, mmr or mmr-pos-mediator)");
}

std::string_view to_string(Method method) noexcept {
  return method == Method::lp ? "lp" : "closed-form";
}

void EstimandSpec::validate() const {
  if (reference != 0 && reference != 1) {
    throw ValidationError("reference level must be 0 or 1, got " + std::to_string(reference));
  }
  if (mediator_effect_sign != 1 && mediator_effect_sign != -1) {
    throw ValidationError("mediator effect sign must be +1 or -1");
  }
}

}  // namespace mbounds
