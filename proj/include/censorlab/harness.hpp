#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "censorlab/metrics.hpp"
#include "censorlab/svm.hpp"
#include "censorlab/types.hpp"

namespace censorlab {

enum class TrainLabels { true_y, observed, both };

struct ExperimentSpec {
  int setting = 2;
  std::vector<double> tau0_values{5.0};
  std::vector<double> tau1_values{5.0};
  std::vector<double> phi_values;       // setting 3 axes
  std::vector<int> d_rot_values;
  std::vector<double> delta_mu_values;  // setting 2 variant: mu0+mu1 fixed at 0.9
  std::vector<double> sigma2_values;
  long realizations = 100;
  long n_train = 2000;
  long n_test = 20000;
  std::uint64_t master_seed = 0;
  TrainLabels train_labels = TrainLabels::both;
  double c = 0.05;
  double b = 5.0;
  int d = 10;

  void validate() const;
  std::string to_json() const;
  static ExperimentSpec from_json(const std::string& text);
};

struct CellCoord {
  double tau0 = 5.0;
  double tau1 = 5.0;
  double phi = 0.0;
  int d_rot = 0;
  double delta_mu = 0.0;
  double sigma2 = 0.1;
};

struct CellSpec {
  CellCoord coord;
  SimulationConfig config;  // seed = master seed; per-realization seeds derived
};

// Cartesian grid in fixed axis order (tau0, tau1, phi, d_rot, delta_mu,
// sigma2); group means per setting, shifted by delta_mu around 0.9/2 for the
// marginal-distance variant.
std::vector<CellSpec> expand_grid(const ExperimentSpec& spec);

struct RealizationOutcome {
  long realization = 0;
  std::optional<GapReport> oracle;
  std::optional<GapReport> censored;
  std::string error;  // nonempty on failure, carries the realization index
};

// One grid cell: per realization, generate train/test cohorts from derived
// seeds, fit the requested model(s), score the test cohort and evaluate
// against true y. The group indicator joins the features only in setting 3,
// where the outcome law is group-dependent.
RealizationOutcome run_realization(const SimulationConfig& config, int setting,
                                   TrainLabels labels, long realization_index);

std::vector<RealizationOutcome> run_cell(const SimulationConfig& config, int setting,
                                         TrainLabels labels,
                                         std::vector<long> realization_indices);

struct MetricAggregate {
  std::string metric;
  CiSummary ci;
  double mean = 0.0;
  long samples = 0;
};

struct CellAggregate {
  CellCoord coord;
  double mu0 = 0.0;
  double mu1 = 0.0;
  // Keyed by label kind: "true" and/or "observed".
  std::vector<std::pair<std::string, std::vector<MetricAggregate>>> by_labels;
  long failures = 0;
};

struct SweepResult {
  ExperimentSpec spec;
  std::vector<CellAggregate> cells;
  bool any_failure = false;
};

using ProgressFn = std::function<void(std::size_t cell_index, std::size_t cell_count,
                                      const CellCoord& coord)>;

// Work unit = (cell, realization); results reduce keyed by realization index
// so output is byte-identical for any worker count.
SweepResult run_sweep(const ExperimentSpec& spec, int jobs,
                      const ProgressFn& progress = nullptr);

// Long-format table: config columns + labels + metric + median/ci/mean +
// failure count. AUC-family metrics are emitted in percentage points, rates
// as fractions.
std::string sweep_table_csv(const SweepResult& result);

struct HeatmapCsv {
  std::string long_format;
  std::string wide_format;
};

// x_axis names a grid axis ("phi", "tau1", ...). y_axis may name a grid axis
// or "p1_censorship" (rows keyed by tau1, labeled with the empirical mean
// P1(t=0) of the row). Throws when the metric or axis is absent.
HeatmapCsv emit_heatmap(const SweepResult& result, const std::string& metric,
                        const std::string& x_axis, const std::string& y_axis,
                        const std::string& labels_kind = "observed");

// Fixed emission order of per-realization metrics.
std::vector<std::pair<std::string, double>> metric_values(const GapReport& report);
bool metric_in_percent(const std::string& name);

}  // namespace censorlab
