#include "censorlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "censorlab/io.hpp"
#include "censorlab/rng.hpp"
#include "censorlab/synthgen.hpp"

namespace censorlab {

namespace {

TrainLabels train_labels_from_string(const std::string& s) {
  if (s == "true") return TrainLabels::true_y;
  if (s == "observed") return TrainLabels::observed;
  if (s == "both") return TrainLabels::both;
  throw std::invalid_argument("train_labels must be one of true/observed/both, got '" + s + "'");
}

std::string train_labels_to_string(TrainLabels t) {
  switch (t) {
    case TrainLabels::true_y: return "true";
    case TrainLabels::observed: return "observed";
    case TrainLabels::both: return "both";
  }
  return "both";
}

}  // namespace

void ExperimentSpec::validate() const {
  if (setting < 1 || setting > 3)
    throw std::invalid_argument("setting must be 1, 2 or 3");
  if (tau0_values.empty() || tau1_values.empty())
    throw std::invalid_argument("tau axes must be nonempty");
  if (setting == 3 && (phi_values.empty() || d_rot_values.empty()))
    throw std::invalid_argument("setting 3 requires phi and d_rot axis values");
  if (realizations < 1) throw std::invalid_argument("realizations must be >= 1");
  if (n_train < 2 || n_test < 2)
    throw std::invalid_argument("cohort sizes must be >= 2");
  if (!(c > 0.0 && c <= 1.0)) throw std::invalid_argument("c must lie in (0,1]");
  if (d < 1) throw std::invalid_argument("d must be >= 1");
  for (int dr : d_rot_values)
    if (dr < 0 || dr > d || dr % 2 != 0)
      throw std::invalid_argument("d_rot values must be even and within [0,d]");
  for (double s2 : sigma2_values)
    if (!(s2 > 0.0)) throw std::invalid_argument("sigma2 values must be > 0");
  for (double p : phi_values)
    if (!(p >= 0.0 && p < 360.0))
      throw std::invalid_argument("phi values must lie in [0,360)");
}

std::string ExperimentSpec::to_json() const {
  nlohmann::json j;
  j["setting"] = setting;
  j["tau0"] = tau0_values;
  j["tau1"] = tau1_values;
  if (!phi_values.empty()) j["phi"] = phi_values;
  if (!d_rot_values.empty()) j["d_rot"] = d_rot_values;
  if (!delta_mu_values.empty()) j["delta_mu"] = delta_mu_values;
  if (!sigma2_values.empty()) j["sigma2"] = sigma2_values;
  j["realizations"] = realizations;
  j["n_train"] = n_train;
  j["n_test"] = n_test;
  j["master_seed"] = master_seed;
  j["train_labels"] = train_labels_to_string(train_labels);
  j["c"] = c;
  j["b"] = b;
  j["d"] = d;
  return j.dump(2);
}

ExperimentSpec ExperimentSpec::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("spec is not valid JSON: ") + e.what());
  }
  ExperimentSpec s;
  try {
    s.setting = j.at("setting").get<int>();
    if (j.contains("tau0")) s.tau0_values = j.at("tau0").get<std::vector<double>>();
    if (j.contains("tau1")) s.tau1_values = j.at("tau1").get<std::vector<double>>();
    if (j.contains("phi")) s.phi_values = j.at("phi").get<std::vector<double>>();
    if (j.contains("d_rot")) s.d_rot_values = j.at("d_rot").get<std::vector<int>>();
    if (j.contains("delta_mu"))
      s.delta_mu_values = j.at("delta_mu").get<std::vector<double>>();
    if (j.contains("sigma2")) s.sigma2_values = j.at("sigma2").get<std::vector<double>>();
    if (j.contains("realizations")) s.realizations = j.at("realizations").get<long>();
    if (j.contains("n_train")) s.n_train = j.at("n_train").get<long>();
    if (j.contains("n_test")) s.n_test = j.at("n_test").get<long>();
    s.master_seed = j.at("master_seed").get<std::uint64_t>();
    if (j.contains("train_labels"))
      s.train_labels = train_labels_from_string(j.at("train_labels").get<std::string>());
    if (j.contains("c")) s.c = j.at("c").get<double>();
    if (j.contains("b")) s.b = j.at("b").get<double>();
    if (j.contains("d")) s.d = j.at("d").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("spec field error: ") + e.what());
  }
  s.validate();
  return s;
}

namespace {

void setting_means(int setting, double& mu0, double& mu1) {
  switch (setting) {
    case 1:
    case 3:
      mu0 = mu1 = 0.45;
      break;
    case 2:
      mu0 = 0.35;
      mu1 = 0.55;
      break;
    default:
      throw std::invalid_argument("unknown setting");
  }
}

}  // namespace

std::vector<CellSpec> expand_grid(const ExperimentSpec& spec) {
  spec.validate();
  const std::vector<double> phis = spec.phi_values.empty() ? std::vector<double>{0.0}
                                                           : spec.phi_values;
  const std::vector<int> d_rots = spec.d_rot_values.empty() ? std::vector<int>{0}
                                                            : spec.d_rot_values;
  const bool has_delta_mu = !spec.delta_mu_values.empty();
  const std::vector<double> deltas =
      has_delta_mu ? spec.delta_mu_values : std::vector<double>{std::nan("")};
  const std::vector<double> sigmas = spec.sigma2_values.empty()
                                         ? std::vector<double>{0.1}
                                         : spec.sigma2_values;

  std::vector<CellSpec> cells;
  for (double tau0 : spec.tau0_values)
    for (double tau1 : spec.tau1_values)
      for (double phi : phis)
        for (int d_rot : d_rots)
          for (double delta : deltas)
            for (double sigma2 : sigmas) {
              CellSpec cell;
              cell.coord = CellCoord{tau0, tau1, phi, d_rot,
                                     has_delta_mu ? delta : 0.0, sigma2};
              SimulationConfig cfg;
              if (has_delta_mu) {
                // F.3 variant: fix mu0 + mu1 = 0.9.
                cfg.mu0 = (0.9 - delta) / 2.0;
                cfg.mu1 = (0.9 + delta) / 2.0;
              } else {
                setting_means(spec.setting, cfg.mu0, cfg.mu1);
              }
              cfg.sigma2 = sigma2;
              cfg.tau0 = tau0;
              cfg.tau1 = tau1;
              cfg.c = spec.c;
              cfg.b = spec.b;
              cfg.phi = spec.setting == 3 ? phi : 0.0;
              cfg.d_rot = spec.setting == 3 ? d_rot : 0;
              cfg.d = spec.d;
              cfg.n_train = spec.n_train;
              cfg.n_test = spec.n_test;
              cfg.seed = spec.master_seed;
              cfg.validate();
              cell.config = cfg;
              cells.push_back(std::move(cell));
            }
  if (cells.empty()) throw std::invalid_argument("empty sweep grid");
  return cells;
}

RealizationOutcome run_realization(const SimulationConfig& config, int setting,
                                   TrainLabels labels, long realization_index) {
  RealizationOutcome out;
  out.realization = realization_index;
  try {
    const std::uint64_t seed =
        derive_realization_seed(config.seed, static_cast<std::uint64_t>(realization_index));
    Rng base(seed);
    Rng train_rng = base.child(0);
    Rng test_rng = base.child(1);
    const Cohort train = generate_cohort(config, config.n_train, train_rng);
    Cohort test = generate_cohort(config, config.n_test, test_rng);

    TrainConfig tc;
    tc.include_group = setting == 3;

    auto evaluate = [&](LabelSource source) {
      const TrainedScorer model = train_svm(train, source, tc);
      Cohort scored = test;
      for (auto& p : scored.patients)
        p.score = model.decision_value(p.covariates, p.group);
      return gap_report(scored);
    };

    if (labels == TrainLabels::true_y || labels == TrainLabels::both)
      out.oracle = evaluate(LabelSource::true_y);
    if (labels == TrainLabels::observed || labels == TrainLabels::both)
      out.censored = evaluate(LabelSource::observed);
  } catch (const std::exception& e) {
    out.error = "realization " + std::to_string(realization_index) + ": " + e.what();
  }
  return out;
}

std::vector<RealizationOutcome> run_cell(const SimulationConfig& config, int setting,
                                         TrainLabels labels,
                                         std::vector<long> realization_indices) {
  std::vector<RealizationOutcome> outcomes;
  outcomes.reserve(realization_indices.size());
  for (long r : realization_indices)
    outcomes.push_back(run_realization(config, setting, labels, r));
  return outcomes;
}

std::vector<std::pair<std::string, double>> metric_values(const GapReport& r) {
  return {{"auc_overall", r.auc_overall},
          {"auc_0", r.auc_0},
          {"auc_1", r.auc_1},
          {"xauc_01", r.xauc_01},
          {"xauc_10", r.xauc_10},
          {"delta_auc", r.delta_auc},
          {"delta_xauc", r.delta_xauc},
          {"missed_positive_rate_0", r.missed_positive_rate_0},
          {"missed_positive_rate_1", r.missed_positive_rate_1},
          {"missed_positive_rate_overall", r.missed_positive_rate_overall},
          {"censorship_rate_0", r.censorship_rate_0},
          {"censorship_rate_1", r.censorship_rate_1}};
}

bool metric_in_percent(const std::string& name) {
  return name.rfind("auc", 0) == 0 || name.rfind("xauc", 0) == 0 ||
         name.rfind("delta", 0) == 0;
}

namespace {

std::vector<MetricAggregate> aggregate_reports(
    const std::vector<const GapReport*>& reports) {
  std::vector<MetricAggregate> out;
  if (reports.empty()) {
    const GapReport dummy;
    for (const auto& [name, _] : metric_values(dummy)) {
      MetricAggregate agg;
      agg.metric = name;
      const double nan = std::numeric_limits<double>::quiet_NaN();
      agg.ci = CiSummary{nan, nan, nan};
      agg.mean = nan;
      agg.samples = 0;
      out.push_back(std::move(agg));
    }
    return out;
  }
  const auto names = metric_values(*reports.front());
  for (std::size_t m = 0; m < names.size(); ++m) {
    std::vector<double> values;
    values.reserve(reports.size());
    for (const GapReport* r : reports) values.push_back(metric_values(*r)[m].second);
    MetricAggregate agg;
    agg.metric = names[m].first;
    agg.ci = empirical_ci(values);
    double sum = 0.0;
    for (double v : values) sum += v;
    agg.mean = sum / static_cast<double>(values.size());
    agg.samples = static_cast<long>(values.size());
    out.push_back(std::move(agg));
  }
  return out;
}

}  // namespace

SweepResult run_sweep(const ExperimentSpec& spec, int jobs, const ProgressFn& progress) {
  spec.validate();
  const std::vector<CellSpec> cells = expand_grid(spec);
  const std::size_t n_cells = cells.size();
  const std::size_t n_real = static_cast<std::size_t>(spec.realizations);

  std::vector<std::vector<RealizationOutcome>> outcomes(n_cells);
  for (auto& v : outcomes) v.resize(n_real);

  struct WorkItem {
    std::size_t cell;
    long realization;
  };
  std::vector<WorkItem> items;
  items.reserve(n_cells * n_real);
  for (std::size_t ci = 0; ci < n_cells; ++ci)
    for (std::size_t r = 0; r < n_real; ++r)
      items.push_back({ci, static_cast<long>(r)});

  std::atomic<std::size_t> next{0};
  std::vector<std::atomic<long>> remaining(n_cells);
  for (auto& r : remaining) r.store(static_cast<long>(n_real));
  std::mutex progress_mutex;

  auto worker = [&]() {
    while (true) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= items.size()) break;
      const WorkItem item = items[idx];
      outcomes[item.cell][static_cast<std::size_t>(item.realization)] = run_realization(
          cells[item.cell].config, spec.setting, spec.train_labels, item.realization);
      if (remaining[item.cell].fetch_sub(1) == 1 && progress) {
        std::lock_guard<std::mutex> lock(progress_mutex);
        progress(item.cell, n_cells, cells[item.cell].coord);
      }
    }
  };

  const int thread_count = std::max(1, jobs);
  if (thread_count == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(thread_count));
    for (int t = 0; t < thread_count; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  SweepResult result;
  result.spec = spec;
  for (std::size_t ci = 0; ci < n_cells; ++ci) {
    CellAggregate agg;
    agg.coord = cells[ci].coord;
    agg.mu0 = cells[ci].config.mu0;
    agg.mu1 = cells[ci].config.mu1;
    std::vector<const GapReport*> oracle_reports;
    std::vector<const GapReport*> censored_reports;
    for (const auto& o : outcomes[ci]) {
      if (!o.error.empty()) {
        ++agg.failures;
        result.any_failure = true;
        continue;
      }
      if (o.oracle) oracle_reports.push_back(&*o.oracle);
      if (o.censored) censored_reports.push_back(&*o.censored);
    }
    if (spec.train_labels == TrainLabels::true_y || spec.train_labels == TrainLabels::both)
      agg.by_labels.emplace_back("true", aggregate_reports(oracle_reports));
    if (spec.train_labels == TrainLabels::observed || spec.train_labels == TrainLabels::both)
      agg.by_labels.emplace_back("observed", aggregate_reports(censored_reports));
    result.cells.push_back(std::move(agg));
  }
  return result;
}

namespace {
std::string csv_value(const std::string& metric, double v) {
  const double scaled = metric_in_percent(metric) ? 100.0 * v : v;
  return format_double(scaled);
}
}  // namespace

std::string sweep_table_csv(const SweepResult& result) {
  std::ostringstream out;
  out << "setting,mu0,mu1,sigma2,tau0,tau1,phi,d_rot,labels,metric,median,ci_lo,ci_hi,mean,samples,failures\n";
  for (const auto& cell : result.cells) {
    for (const auto& [labels, aggs] : cell.by_labels) {
      for (const auto& agg : aggs) {
        out << result.spec.setting << ',' << format_double(cell.mu0) << ','
            << format_double(cell.mu1) << ',' << format_double(cell.coord.sigma2) << ','
            << format_double(cell.coord.tau0) << ',' << format_double(cell.coord.tau1)
            << ',' << format_double(cell.coord.phi) << ',' << cell.coord.d_rot << ','
            << labels << ',' << agg.metric << ',' << csv_value(agg.metric, agg.ci.median)
            << ',' << csv_value(agg.metric, agg.ci.lo) << ','
            << csv_value(agg.metric, agg.ci.hi) << ',' << csv_value(agg.metric, agg.mean)
            << ',' << agg.samples << ',' << cell.failures << "\n";
      }
    }
  }
  return out.str();
}

namespace {

double coord_axis_value(const CellCoord& c, const std::string& axis) {
  if (axis == "tau0") return c.tau0;
  if (axis == "tau1") return c.tau1;
  if (axis == "phi") return c.phi;
  if (axis == "d_rot") return c.d_rot;
  if (axis == "delta_mu") return c.delta_mu;
  if (axis == "sigma2") return c.sigma2;
  throw std::invalid_argument("unknown axis: " + axis);
}

const MetricAggregate& find_metric(const CellAggregate& cell, const std::string& labels,
                                   const std::string& metric) {
  for (const auto& [kind, aggs] : cell.by_labels) {
    if (kind != labels) continue;
    for (const auto& agg : aggs)
      if (agg.metric == metric) return agg;
  }
  throw std::invalid_argument("metric '" + metric + "' with labels '" + labels +
                              "' absent from sweep result");
}

}  // namespace

HeatmapCsv emit_heatmap(const SweepResult& result, const std::string& metric,
                        const std::string& x_axis, const std::string& y_axis,
                        const std::string& labels_kind) {
  const bool empirical_y = y_axis == "p1_censorship";
  const std::string y_key_axis = empirical_y ? "tau1" : y_axis;

  std::vector<double> xs, ys;
  for (const auto& cell : result.cells) {
    const double x = coord_axis_value(cell.coord, x_axis);
    const double y = coord_axis_value(cell.coord, y_key_axis);
    if (std::find(xs.begin(), xs.end(), x) == xs.end()) xs.push_back(x);
    if (std::find(ys.begin(), ys.end(), y) == ys.end()) ys.push_back(y);
  }

  // Median of the metric and, when requested, the empirical row label.
  std::vector<std::vector<double>> grid(ys.size(),
                                        std::vector<double>(xs.size(),
                                                            std::numeric_limits<double>::quiet_NaN()));
  std::vector<double> row_label(ys.size(), 0.0);
  std::vector<long> row_count(ys.size(), 0);
  for (const auto& cell : result.cells) {
    const double x = coord_axis_value(cell.coord, x_axis);
    const double y = coord_axis_value(cell.coord, y_key_axis);
    const std::size_t xi =
        static_cast<std::size_t>(std::find(xs.begin(), xs.end(), x) - xs.begin());
    const std::size_t yi =
        static_cast<std::size_t>(std::find(ys.begin(), ys.end(), y) - ys.begin());
    const MetricAggregate& agg = find_metric(cell, labels_kind, metric);
    grid[yi][xi] = metric_in_percent(metric) ? 100.0 * agg.ci.median : agg.ci.median;
    if (empirical_y) {
      row_label[yi] += find_metric(cell, labels_kind, "censorship_rate_1").mean;
      ++row_count[yi];
    }
  }
  for (std::size_t yi = 0; yi < ys.size(); ++yi) {
    if (empirical_y && row_count[yi] > 0)
      row_label[yi] /= static_cast<double>(row_count[yi]);
    else if (!empirical_y)
      row_label[yi] = ys[yi];
  }

  const std::string y_name = empirical_y ? "p1_censorship" : y_axis;
  std::ostringstream longf;
  longf << x_axis << ',' << y_name << ',' << metric << "\n";
  for (std::size_t yi = 0; yi < ys.size(); ++yi)
    for (std::size_t xi = 0; xi < xs.size(); ++xi)
      longf << format_double(xs[xi]) << ',' << format_double(row_label[yi]) << ','
            << format_double(grid[yi][xi]) << "\n";

  std::ostringstream widef;
  widef << y_name;
  for (double x : xs) widef << ',' << format_double(x);
  widef << "\n";
  for (std::size_t yi = 0; yi < ys.size(); ++yi) {
    widef << format_double(row_label[yi]);
    for (std::size_t xi = 0; xi < xs.size(); ++xi)
      widef << ',' << format_double(grid[yi][xi]);
    widef << "\n";
  }
  return HeatmapCsv{longf.str(), widef.str()};
}

}  // namespace censorlab
