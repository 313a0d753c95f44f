#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "censorlab/types.hpp"

namespace censorlab {

// One-hot discretized encoding: each covariate maps to 6 indicator columns
// for bin index ceil(5x) in {0..5}.
struct Encoder {
  int d = 0;
  static constexpr int kBinsPerDim = 6;

  int feature_count() const { return kBinsPerDim * d; }

  // Bin indices, one byte per dimension. Throws on components outside [0,1].
  std::vector<std::uint8_t> bins(std::span<const double> x) const;

  // Length-6d one-hot block vector.
  std::vector<double> encode(std::span<const double> x) const;
};

// gamma = 1 / (feature count * population variance of all matrix entries).
// Throws std::domain_error on zero variance.
double auto_gamma(const std::vector<std::vector<double>>& matrix);

}  // namespace censorlab
