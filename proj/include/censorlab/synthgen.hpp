#pragma once

#include <optional>
#include <span>
#include <vector>

#include "censorlab/rng.hpp"
#include "censorlab/types.hpp"

namespace censorlab {

// Margin used for score-vs-threshold comparisons. Scores live on a 0.2 grid
// and thresholds are specified to one decimal, so this never flips a
// mathematically strict comparison.
constexpr double kScoreCmpEps = 1e-9;

// Bin index ⌈5x⌉ with a relative 1e-12 nudge so values that are exact
// multiples of 0.2 up to representation error land in the lower bin.
long ceil_bin(double x);

// Separable ground-truth risk: s(x) = (1/5) Σ ⌈5 x_i⌉. Accepts inputs
// outside [0,1] (rotated coordinates may leave the unit box); bins then
// exceed {0..5} but the sum stays well-defined.
double staircase_score(std::span<const double> x);

struct RotationSpec {
  double phi_degrees = 0.0;
  int d_rot = 0;                // even; first d_rot dimensions, paired (0,1),(2,3),...
  std::vector<double> center;  // empty means 0.4 in every dimension

  static RotationSpec uniform_center(double phi_degrees, int d_rot, int d,
                                     double center_value = 0.4);
};

// Block-diagonal R(-phi) on consecutive pairs of the first d_rot dimensions
// about the center; identity elsewhere.
std::vector<double> rotate(std::span<const double> x, const RotationSpec& spec);

// One clipped-Gaussian covariate vector: max(0, min(1, N(mu_a 1, sigma^2 I))).
std::vector<double> sample_covariates(Rng& rng, GroupId group, const SimulationConfig& cfg);

// Threshold-censored cohort generation. Group 0 takes the extra patient when n is
// odd. The testing decision always thresholds the unrotated score; group 1's
// label score is rotated when phi != 0 and d_rot > 0, which is what makes the
// censorship and decision boundaries non-parallel in the conditional-shift
// setting.
Cohort generate_cohort(const SimulationConfig& cfg, long n, Rng& rng);

// Fraction of y=1 patients with y_obs=0 in the slice (whole cohort when no
// group given). Throws if the slice has no true positives.
double missed_positive_rate(const Cohort& cohort, std::optional<GroupId> group = std::nullopt);

// P_a(t = 0): fraction of untested patients in the group.
double censorship_rate(const Cohort& cohort, GroupId group);

// P_a(t = 1).
double testing_rate(const Cohort& cohort, GroupId group);

}  // namespace censorlab
