#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "censorlab/encoder.hpp"
#include "censorlab/types.hpp"

namespace censorlab {

enum class LabelSource { true_y, observed };

struct TrainConfig {
  double C = 1.0;
  double tol = 1e-3;
  long max_iter = 2000000;
  bool platt = false;
  // Append the group indicator as one extra feature column. Used for the
  // conditional-shift setting, where the outcome law differs by group.
  bool include_group = false;
  double gamma = 0.0;  // 0 means derive from the encoded training matrix
  // Kernel rows kept resident; 0 means the full matrix.
  std::size_t kernel_cache_rows = 0;
  // Record the dual objective after every working-set update (debug aid;
  // quadratic cost, keep to small problems).
  bool track_objective = false;
};

struct SvmConvergenceError : std::runtime_error {
  SvmConvergenceError(const std::string& msg, double violation)
      : std::runtime_error(msg), kkt_violation(violation) {}
  double kkt_violation;
};

struct PlattParams {
  double a = 0.0;
  double b = 0.0;
};

// RBF-kernel SVM in dual form over the one-hot encoding.
struct TrainedScorer {
  Encoder encoder;
  bool include_group = false;
  double gamma = 0.0;
  double C = 1.0;
  double bias = 0.0;
  std::vector<std::vector<std::uint8_t>> sv_bins;
  std::vector<std::uint8_t> sv_group;
  std::vector<double> sv_alpha_y;  // alpha_i * y_i
  std::optional<PlattParams> platt;

  // Diagnostics from training.
  long iterations = 0;
  double final_kkt_violation = 0.0;
  std::vector<double> objective_trace;  // filled when track_objective

  double decision_value(std::span<const double> x, GroupId group) const;
  // Platt probability when calibrated, raw decision value otherwise.
  double score(std::span<const double> x, GroupId group) const;

  std::string to_json() const;
  static TrainedScorer from_json(const std::string& text);
};

// SMO with maximal-KKT-violating pair selection and lowest-index tie
// breaking; stops when the violation drops to config.tol. Throws
// std::domain_error when only one label class is present and
// SvmConvergenceError past max_iter.
TrainedScorer train_svm(const Cohort& cohort, LabelSource labels, const TrainConfig& config);

// Negative log-likelihood of the Platt sigmoid p = 1/(1+exp(a*f+b)) with the
// smoothed targets, plus its analytic gradient. Exposed for the
// finite-difference check.
struct PlattObjective {
  double value;
  double grad_a;
  double grad_b;
};
PlattObjective platt_objective(std::span<const double> decision_values,
                               const std::vector<bool>& labels, double a, double b);

// Regularized maximum-likelihood sigmoid fit (Newton with backtracking).
PlattParams fit_platt(std::span<const double> decision_values, const std::vector<bool>& labels);

}  // namespace censorlab
