#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "censorlab/theory.hpp"
#include "censorlab/types.hpp"

namespace censorlab {

struct ZTestResult {
  std::string test_name;
  double p0 = 0.0;
  double p1 = 0.0;
  long n0 = 0;
  long n1 = 0;
  double z = 0.0;
  double p_value = 1.0;
  bool significant = false;
};

// Two-sided two-sample z-test for equality of proportions with unpooled
// variance. p0 = p1 with zero variance on both sides degenerates to z = 0,
// p = 1.
ZTestResult two_proportion_ztest(double p0, long n0, double p1, long n1);

// alpha / m.
double bonferroni(double alpha, long m);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Sup-distance between empirical CDFs; asymptotic p-value from the
// Kolmogorov distribution at effective size n0*n1/(n0+n1).
KsResult ks_two_sample(std::span<const double> sample0, std::span<const double> sample1);

struct ThresholdEstimate {
  double tau_hat = 0.0;
  double c_hat = 0.0;
  double log_likelihood = 0.0;
  // Fit of the constant-rate alternative P(t=1) = mean(t), for flagging a
  // misspecified threshold law via the likelihood ratio.
  double constant_rate_log_likelihood = 0.0;
  bool boundary = false;  // estimate landed on a grid edge
};

// Grid MLE for the testing law P(t=1|s) = 1 if s > tau else c. Ties break
// toward smaller tau, then smaller c.
ThresholdEstimate estimate_threshold(std::span<const double> scores,
                                     const std::vector<bool>& tested,
                                     std::span<const double> c_grid,
                                     std::span<const double> tau_grid);

// Admission-level testing records.
struct TestingRecordTable {
  std::vector<std::string> test_names;
  struct Row {
    std::string admission_id;
    GroupId group = GroupId::g0;
    std::vector<std::uint8_t> tested;  // aligned with test_names
  };
  std::vector<Row> rows;

  // Header: admission_id,group,<test_1>,...,<test_k>; binary cells. Schema
  // violations are reported with row numbers.
  static TestingRecordTable read_csv(const std::filesystem::path& path);

  long count(GroupId g) const;
  // Testing proportion of one test column in one group.
  double proportion(std::size_t test_index, GroupId g) const;
};

// One z-test per requested test name (all columns when names is empty),
// significance at bonferroni(alpha, #tests).
std::vector<ZTestResult> detect_disparate_censorship(const TestingRecordTable& table,
                                                     double alpha,
                                                     std::span<const std::string> names = {});

std::string ztest_results_to_csv(std::span<const ZTestResult> results);
std::string ztest_results_to_json(std::span<const ZTestResult> results, double alpha,
                                  double corrected_alpha);

// ---- Audit decision tree -------------------------------------------------

struct CovariateSample {
  std::string name;
  std::vector<double> group0;
  std::vector<double> group1;
};

struct GroupScores {
  std::vector<double> scores;
  std::vector<bool> tested;
};

struct AuditOptions {
  double alpha = 0.01;
  std::optional<GroupId> high_risk_group;            // override for condition 2
  std::optional<LinearBoundaries> boundaries;        // simulation-mode ground truth
  std::vector<double> tau_grid;                      // defaults filled when empty
  std::vector<double> c_grid;
  double parallel_tol = 1e-6;
};

enum class AuditOutcome { no_gap_expected, gap_risk, inconclusive };

struct AuditReport {
  AuditOutcome outcome = AuditOutcome::inconclusive;
  std::string reason;
  std::vector<int> unresolved_conditions;  // 1-based condition numbers

  // Condition 1 detail.
  bool condition1_resolved = false;
  bool marginal_differs = false;
  double corrected_alpha = 0.0;
  std::vector<std::pair<std::string, KsResult>> ks_results;

  // Condition 2 detail.
  bool condition2_resolved = false;
  bool high_risk_undertested = false;
  int high_risk_group = -1;
  std::array<ThresholdEstimate, 2> thresholds{};

  // Conditions 3 and 4 detail (simulation mode only).
  bool condition34_resolved = false;
  bool conditional_differs = false;
  std::optional<ParallelVerdict> parallel;

  std::string to_json() const;
};

// Walks the four audit conditions: (1) per-covariate KS tests at the
// corrected level, (2) group-wise censorship-threshold estimates against the
// high-risk group, (3)/(4) resolved only when ground-truth boundaries are
// supplied, otherwise reported as requiring domain knowledge.
AuditReport audit(std::span<const CovariateSample> covariates,
                  const std::optional<std::array<GroupScores, 2>>& scores,
                  const AuditOptions& options);

// Convenience wrapper: covariate samples and score/tested slices from a
// scored cohort.
AuditReport audit_cohort(const Cohort& cohort, const AuditOptions& options);

}  // namespace censorlab
