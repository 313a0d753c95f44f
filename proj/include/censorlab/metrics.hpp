#pragma once

#include <span>
#include <string>
#include <vector>

#include "censorlab/types.hpp"

namespace censorlab {

// Mann–Whitney AUC with half credit for ties, computed via mid-rank sums.
// Throws std::domain_error unless both classes are present.
double auc(std::span<const double> scores, const std::vector<bool>& labels);

// P(pos > neg) + 0.5 P(pos == neg) over all cross pairs; exact pair
// semantics (ties are bit-identical doubles).
double xauc(std::span<const double> scores_pos, std::span<const double> scores_neg);

struct GapReport {
  double auc_overall = 0.0;
  double auc_0 = 0.0;
  double auc_1 = 0.0;
  double xauc_01 = 0.0;  // positives from group 0 vs negatives from group 1
  double xauc_10 = 0.0;
  double delta_auc = 0.0;
  double delta_xauc = 0.0;
  // All rates as fractions.
  double missed_positive_rate_0 = 0.0;
  double missed_positive_rate_1 = 0.0;
  double missed_positive_rate_overall = 0.0;
  double censorship_rate_0 = 0.0;
  double censorship_rate_1 = 0.0;

  std::string to_json() const;
};

// Evaluates patient.score against the true labels y (never y_obs). Throws
// std::domain_error naming the group and class when a group lacks positives
// or negatives.
GapReport gap_report(const Cohort& cohort);

// P(A = a | Y = y) weights for the overall-AUC decomposition.
struct ClassGroupWeights {
  double pos_g0 = 0.0;  // p_1(0)
  double pos_g1 = 0.0;  // p_1(1)
  double neg_g0 = 0.0;  // p_0(0)
  double neg_g1 = 0.0;  // p_0(1)
};

ClassGroupWeights class_group_weights(const Cohort& cohort);

// |overall AUC - weighted combination of within-group AUCs and xAUCs|.
// Throws if either class's weights do not sum to 1.
double decomposition_residual(const GapReport& report, const ClassGroupWeights& w);

struct CiSummary {
  double median = 0.0;
  double lo = 0.0;  // 2.5th percentile
  double hi = 0.0;  // 97.5th percentile
};

// Median and 2.5/97.5 percentiles with linear interpolation between order
// statistics (position q*(n-1)). Throws on empty input.
CiSummary empirical_ci(std::span<const double> values);

}  // namespace censorlab
