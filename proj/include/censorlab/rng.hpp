#pragma once

#include <cstdint>

namespace censorlab {

// Finalizer from splitmix64 (Steele, Lea & Flood; Vigna's fixed-increment
// variant). Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// Deterministic, injective for any pair of distinct indices: the increment
// is odd, so seed + kGolden*(index+1) never collides mod 2^64, and mix64 is
// a bijection. Independent of every other config field by construction.
constexpr std::uint64_t derive_realization_seed(std::uint64_t master_seed,
                                                std::uint64_t realization_index) {
  return mix64(master_seed + kGolden * (realization_index + 1));
}

// Counter-based splitmix64 stream. Single-owner; cheap to fork into
// statistically independent substreams, which is how per-patient draws stay
// identical across configs that share a realization seed.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : state_(key) {}

  // Child stream for a tagged index (patient id, purpose tag, ...).
  Rng child(std::uint64_t index) const {
    return Rng(mix64(state_ + kGolden * (index + 0x632BE59BD9B4E019ULL)));
  }

  std::uint64_t next_u64() {
    state_ += kGolden;
    return mix64(state_);
  }

  // Uniform on (0, 1); never returns an endpoint.
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  bool next_bernoulli(double p) { return next_uniform() < p; }

  // Standard normal via the inverse CDF, so one draw consumes exactly one
  // counter step (no rejection).
  double next_gaussian();

 private:
  std::uint64_t state_;
};

// Inverse standard-normal CDF (Wichura's algorithm AS241, double precision).
double inverse_normal_cdf(double p);

// Standard normal CDF.
double normal_cdf(double z);

}  // namespace censorlab
