#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "censorlab/types.hpp"

namespace censorlab {

// Aligned per-group testing-probability curves over a sorted risk grid.
struct RiskProfile {
  std::vector<double> risk_grid;
  std::vector<double> p_test_0;
  std::vector<double> p_test_1;
};

// Trapezoidal integral of max(0, P0(t|r) - P1(t|r)): the one-sided
// undertesting measure for group 1 relative to group 0. Swap curves for the
// other direction.
double undertesting_level(const RiskProfile& profile);

// Step curves P_a(t|r) = 1 for r > tau_a, else c.
RiskProfile threshold_profile(double tau0, double tau1, double c,
                              std::span<const double> grid);

// Closed form for the threshold model: max(0, (1-c)(tau1 - tau0)).
double threshold_undertesting(double tau0, double tau1, double c);

// Score-distribution hypotheses of the marginal-difference theorem.
struct GaussianMarginals {
  double mu0 = 0.0;
  double mu1 = 0.0;
  double sigma2 = 1.0;
  double p_a = 0.5;  // P(A = 0)
  double c = 0.05;

  void validate() const;
};

// Sigmoid argument of the middle branch:
// g(z) = log(p_a / ((1-p_a)(1-c))) + (2z - mu0 - mu1)(mu0 - mu1) / (2 sigma^2).
double flip_sigmoid_argument(double z, const GaussianMarginals& g);

// Piecewise flip probability of a positive label: 1-c below tau1, the
// sigmoid middle branch (clamped to 1-c so the range post holds for every
// tau1) on [tau1, tau0), 0 at and above tau0. Requires tau1 <= tau0.
double flip_probability(double z, const GaussianMarginals& g, double tau0, double tau1);

// Binding threshold: sigma(g(bound)) = 1-c exactly; the middle branch stays
// at or below 1-c for tau1 at or above this value. Requires mu0 != mu1;
// +infinity in the c -> 1 limit with mu1 > mu0.
double tau1_bound(const GaussianMarginals& g);

// Scalar-input noise model: scorer maps inputs to scores, eta is the class
// probability of the input, f0/f1 are flip probabilities over scores.
struct NoiseModel {
  std::function<double(double)> f0;
  std::function<double(double)> f1;
  std::function<double(double)> scorer;
  std::function<double(double)> eta;
};

// The marginal-difference construction as a NoiseModel (scores are the
// inputs; eta is the decision-threshold indicator).
NoiseModel theorem_noise_model(const GaussianMarginals& g, double b, double tau0,
                               double tau1);

enum class BcnCondition {
  feasible_ranking,
  piecewise_monotonicity,
  flip_monotonicity,
  noise_mass,
};

std::string bcn_condition_name(BcnCondition c);

struct BcnVerdict {
  bool admissible = true;
  BcnCondition violated = BcnCondition::feasible_ranking;
  double location = 0.0;  // grid input where the violation was found

  std::string to_json() const;
};

// Grid scan of the four admissibility conditions, reported in definition
// order; first violation wins.
BcnVerdict check_bcn_admissible(const NoiseModel& model, std::span<const double> grid);

struct LinearBoundaries {
  std::vector<double> censor_theta;
  double censor_offset = 0.0;
  std::vector<double> theta0;
  double offset0 = 0.0;
  std::vector<double> theta1;
  double offset1 = 0.0;
};

struct ParallelVerdict {
  bool parallel = false;
  double delta0 = 0.0;
  double delta1 = 0.0;
  int offending_group = -1;

  std::string to_json() const;
};

// theta_a = delta_a * theta with delta_a > 0 within relative tolerance, per
// group. Collinearity via the normalized cross residual.
ParallelVerdict check_parallel_boundaries(const LinearBoundaries& lb, double tol);

// ||mu1 - mu0||^2 / (2 sigma^2) for equal isotropic covariances.
double marginal_kl(std::span<const double> mu0, std::span<const double> mu1,
                   double sigma2);

}  // namespace censorlab
