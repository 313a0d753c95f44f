#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "censorlab/detect.hpp"
#include "censorlab/harness.hpp"
#include "censorlab/io.hpp"
#include "censorlab/metrics.hpp"
#include "censorlab/rng.hpp"
#include "censorlab/synthgen.hpp"
#include "censorlab/theory.hpp"
#include "censorlab/types.hpp"

namespace fs = std::filesystem;
using namespace censorlab;

namespace {

constexpr const char* kVersion = "0.1.0";

struct ManifestWriter {
  fs::path out_dir;
  std::string command;
  nlohmann::json extra = nlohmann::json::object();
  std::vector<std::string> outputs;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void write() {
    nlohmann::json j;
    j["command"] = command;
    j["version"] = kVersion;
    j["outputs"] = outputs;
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    j["wall_time_seconds"] = secs;
    for (auto& [k, v] : extra.items()) j[k] = v;
    write_text_file(out_dir / "manifest.json", j.dump(2) + "\n");
  }
};

fs::path ensure_out_dir(const std::string& out) {
  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw std::runtime_error("cannot create output directory: " + out);
  return dir;
}

int default_jobs() {
  if (const char* env = std::getenv("CENSORLAB_JOBS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  return 1;
}

int run_simulate(const std::string& config_path, const std::string& out,
                 std::optional<long> n, std::optional<std::uint64_t> seed) {
  SimulationConfig cfg = SimulationConfig::from_json(read_text_file(config_path));
  if (seed) cfg.seed = *seed;
  const long count = n.value_or(cfg.n_train);
  if (count < 2) throw CLI::ValidationError("--n must be >= 2");

  const fs::path dir = ensure_out_dir(out);
  ManifestWriter manifest{dir, "simulate"};
  manifest.extra["seed"] = cfg.seed;
  manifest.extra["config_hash"] = fnv1a_hex(cfg.to_json());

  Rng rng(derive_realization_seed(cfg.seed, 0));
  const Cohort cohort = generate_cohort(cfg, count, rng);
  write_cohort_csv(dir / "cohort.csv", cohort);
  manifest.outputs.push_back("cohort.csv");

  nlohmann::json summary;
  summary["n"] = count;
  summary["testing_rate_0"] = testing_rate(cohort, GroupId::g0);
  summary["testing_rate_1"] = testing_rate(cohort, GroupId::g1);
  summary["censorship_rate_0"] = censorship_rate(cohort, GroupId::g0);
  summary["censorship_rate_1"] = censorship_rate(cohort, GroupId::g1);
  auto rate_or_null = [&](std::optional<GroupId> g) -> nlohmann::json {
    try {
      return missed_positive_rate(cohort, g);
    } catch (const std::domain_error&) {
      return nullptr;
    }
  };
  summary["missed_positive_rate_0"] = rate_or_null(GroupId::g0);
  summary["missed_positive_rate_1"] = rate_or_null(GroupId::g1);
  summary["missed_positive_rate_overall"] = rate_or_null(std::nullopt);
  summary["undertesting_level_group1"] = threshold_undertesting(cfg.tau0, cfg.tau1, cfg.c);
  summary["undertesting_level_group0"] = threshold_undertesting(cfg.tau1, cfg.tau0, cfg.c);
  write_text_file(dir / "summary.json", summary.dump(2) + "\n");
  manifest.outputs.push_back("summary.json");
  manifest.write();
  return 0;
}

int run_sweep_cmd(const std::string& spec_path, const std::string& out, int jobs,
                  std::optional<long> realizations) {
  const std::string spec_text = read_text_file(spec_path);
  ExperimentSpec spec = ExperimentSpec::from_json(spec_text);
  if (realizations) {
    spec.realizations = *realizations;
    spec.validate();
  }

  const fs::path dir = ensure_out_dir(out);
  ManifestWriter manifest{dir, "sweep"};
  manifest.extra["spec_hash"] = fnv1a_hex(spec.to_json());
  manifest.extra["master_seed"] = spec.master_seed;
  manifest.extra["jobs"] = jobs;
  manifest.extra["realizations"] = spec.realizations;

  const SweepResult result = run_sweep(
      spec, jobs, [](std::size_t cell, std::size_t total, const CellCoord& coord) {
        std::cerr << "cell " << (cell + 1) << "/" << total << " done (tau0=" << coord.tau0
                  << " tau1=" << coord.tau1 << " phi=" << coord.phi
                  << " d_rot=" << coord.d_rot << ")\n";
      });

  write_text_file(dir / "table.csv", sweep_table_csv(result));
  manifest.outputs.push_back("table.csv");

  const std::string labels_kind =
      spec.train_labels == TrainLabels::true_y ? "true" : "observed";
  if (spec.setting == 3 && spec.phi_values.size() > 1) {
    for (const std::string metric : {"delta_auc", "delta_xauc"}) {
      const HeatmapCsv heat = emit_heatmap(result, metric, "phi", "p1_censorship", labels_kind);
      write_text_file(dir / ("heatmap_" + metric + ".csv"), heat.long_format);
      write_text_file(dir / ("heatmap_" + metric + "_wide.csv"), heat.wide_format);
      manifest.outputs.push_back("heatmap_" + metric + ".csv");
      manifest.outputs.push_back("heatmap_" + metric + "_wide.csv");
    }
  }
  manifest.write();
  if (result.any_failure) {
    std::cerr << "sweep finished with failed realizations; see table.csv failure column\n";
    return 1;
  }
  return 0;
}

int run_metrics(const std::string& cohort_path, const std::string& out) {
  const Cohort cohort = read_cohort_csv(cohort_path);
  const GapReport report = gap_report(cohort);
  const fs::path dir = ensure_out_dir(out);
  ManifestWriter manifest{dir, "metrics"};
  write_text_file(dir / "gap_report.json", report.to_json() + "\n");
  manifest.outputs.push_back("gap_report.json");
  manifest.write();
  return 0;
}

int run_detect(const std::string& records_path, double alpha,
               const std::string& tests_csv, const std::string& out) {
  const TestingRecordTable table = TestingRecordTable::read_csv(records_path);
  std::vector<std::string> names;
  if (!tests_csv.empty()) {
    std::string cur;
    for (char ch : tests_csv + ",") {
      if (ch == ',') {
        if (!cur.empty()) names.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(ch);
      }
    }
  }
  const auto results = detect_disparate_censorship(table, alpha, names);
  const double corrected =
      bonferroni(alpha, static_cast<long>(results.size()));

  const fs::path dir = ensure_out_dir(out);
  ManifestWriter manifest{dir, "detect"};
  manifest.extra["alpha"] = alpha;
  manifest.extra["corrected_alpha"] = corrected;
  write_text_file(dir / "ztests.csv", ztest_results_to_csv(results));
  write_text_file(dir / "ztests.json", ztest_results_to_json(results, alpha, corrected) + "\n");
  manifest.outputs.push_back("ztests.csv");
  manifest.outputs.push_back("ztests.json");
  manifest.write();
  return 0;
}

LinearBoundaries boundaries_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  LinearBoundaries lb;
  lb.censor_theta = j.at("censor_theta").get<std::vector<double>>();
  lb.censor_offset = j.at("censor_offset").get<double>();
  lb.theta0 = j.at("theta0").get<std::vector<double>>();
  lb.offset0 = j.at("offset0").get<double>();
  lb.theta1 = j.at("theta1").get<std::vector<double>>();
  lb.offset1 = j.at("offset1").get<double>();
  return lb;
}

int run_audit(const std::string& cohort_path, const std::string& records_path,
              double alpha, const std::string& boundaries_path,
              std::optional<int> high_risk, const std::string& out) {
  AuditOptions options;
  options.alpha = alpha;
  if (high_risk) options.high_risk_group = group_from_int(*high_risk);
  if (!boundaries_path.empty())
    options.boundaries = boundaries_from_json(read_text_file(boundaries_path));

  AuditReport report;
  if (!cohort_path.empty()) {
    report = audit_cohort(read_cohort_csv(cohort_path), options);
  } else {
    // Records carry tested flags only; covariate and score inputs are absent,
    // so the walk can resolve none of the four conditions.
    const TestingRecordTable table = TestingRecordTable::read_csv(records_path);
    if (table.count(GroupId::g0) == 0 || table.count(GroupId::g1) == 0)
      throw std::runtime_error("audit: records must contain both groups");
    report = audit({}, std::nullopt, options);
  }

  const fs::path dir = ensure_out_dir(out);
  ManifestWriter manifest{dir, "audit"};
  write_text_file(dir / "audit.json", report.to_json() + "\n");
  manifest.outputs.push_back("audit.json");
  manifest.write();
  std::cout << report.to_json() << std::endl;
  return 0;
}

int run_theory(bool check_bcn, bool bound_only, std::optional<double> flip_z,
               std::optional<double> kl_delta_mu, double mu0, double mu1, double sigma2,
               double c, double p_a, double tau0, double tau1, double b, long grid_points,
               int kl_dims, const std::string& out) {
  GaussianMarginals g{mu0, mu1, sigma2, p_a, c};
  nlohmann::json j;
  if (check_bcn) {
    const NoiseModel model = theorem_noise_model(g, b, tau0, tau1);
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(grid_points));
    const double lo = std::min({tau1, mu0, b}) - 3.0 * std::sqrt(sigma2);
    const double hi = std::max({tau0, mu1, b}) + 3.0 * std::sqrt(sigma2);
    for (long i = 0; i < grid_points; ++i)
      grid.push_back(lo + (hi - lo) * static_cast<double>(i) /
                              static_cast<double>(grid_points - 1));
    const BcnVerdict verdict = check_bcn_admissible(model, grid);
    j["bcn"] = nlohmann::json::parse(verdict.to_json());
    std::cout << (verdict.admissible ? "admissible" : "violated(" +
                                                          bcn_condition_name(verdict.violated) +
                                                          ")")
              << std::endl;
  }
  if (bound_only) {
    const double bound = tau1_bound(g);
    j["tau1_bound"] = bound;
    std::cout << "tau1_bound " << format_double(bound) << std::endl;
  }
  if (flip_z) {
    const double f = flip_probability(*flip_z, g, tau0, tau1);
    j["flip_probability"] = f;
    std::cout << "flip_probability(" << *flip_z << ") = " << format_double(f) << std::endl;
  }
  if (kl_delta_mu) {
    std::vector<double> m0(static_cast<std::size_t>(kl_dims), 0.0);
    std::vector<double> m1(static_cast<std::size_t>(kl_dims), *kl_delta_mu);
    const double kl = marginal_kl(m0, m1, sigma2);
    j["marginal_kl"] = kl;
    std::cout << "marginal_kl = " << format_double(kl) << std::endl;
  }
  if (!out.empty()) {
    const fs::path dir = ensure_out_dir(out);
    ManifestWriter manifest{dir, "theory"};
    write_text_file(dir / "theory.json", j.dump(2) + "\n");
    manifest.outputs.push_back("theory.json");
    manifest.write();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"disparate-censorship simulation and audit toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate one synthetic cohort");
  std::string sim_config, sim_out = ".";
  long sim_n = -1;
  std::uint64_t sim_seed = 0;
  bool sim_seed_set = false;
  sim->add_option("--config", sim_config, "simulation config JSON")->required();
  sim->add_option("--out", sim_out, "output directory")->required();
  sim->add_option("--n", sim_n, "cohort size (default: config n_train)");
  sim->add_option("--seed", sim_seed, "master seed override")->each([&](const std::string&) {
    sim_seed_set = true;
  });

  // sweep
  auto* sweep = app.add_subcommand("sweep", "run an experiment grid");
  std::string sweep_spec, sweep_out = ".";
  int sweep_jobs = default_jobs();
  long sweep_realizations = -1;
  sweep->add_option("--spec", sweep_spec, "experiment spec JSON")->required();
  sweep->add_option("--out", sweep_out, "output directory")->required();
  sweep->add_option("--jobs", sweep_jobs, "worker threads (env CENSORLAB_JOBS)");
  sweep->add_option("--realizations", sweep_realizations, "override realization count");

  // metrics
  auto* met = app.add_subcommand("metrics", "gap report for a scored cohort CSV");
  std::string met_cohort, met_out = ".";
  met->add_option("--cohort", met_cohort, "cohort CSV with score column")->required();
  met->add_option("--out", met_out, "output directory");

  // detect
  auto* det = app.add_subcommand("detect", "testing-rate z-tests on records");
  std::string det_records, det_tests, det_out = ".";
  double det_alpha = 0.01;
  det->add_option("--records", det_records, "testing records CSV")->required();
  det->add_option("--alpha", det_alpha, "uncorrected significance level");
  det->add_option("--tests", det_tests, "comma-separated test subset");
  det->add_option("--out", det_out, "output directory");

  // audit
  auto* aud = app.add_subcommand("audit", "walk the censorship audit conditions");
  std::string aud_cohort, aud_records, aud_boundaries, aud_out = ".";
  double aud_alpha = 0.01;
  int aud_high_risk = -1;
  aud->add_option("--cohort", aud_cohort, "scored cohort CSV");
  aud->add_option("--records", aud_records, "testing records CSV");
  aud->add_option("--alpha", aud_alpha, "significance level");
  aud->add_option("--boundaries", aud_boundaries, "ground-truth boundaries JSON");
  aud->add_option("--high-risk-group", aud_high_risk, "override high-risk group (0/1)");
  aud->add_option("--out", aud_out, "output directory");

  // theory
  auto* theo = app.add_subcommand("theory", "evaluate theoretical checkers");
  bool theo_bcn = false, theo_bound = false;
  double theo_mu0 = 4.6, theo_mu1 = 5.4, theo_sigma2 = 0.25, theo_c = 0.05,
         theo_pa = 0.5, theo_tau0 = 7.0, theo_tau1 = 5.0, theo_b = 5.0;
  long theo_grid = 10000;
  double theo_flip_z = 0.0, theo_kl = 0.0;
  bool theo_flip_set = false, theo_kl_set = false;
  int theo_kl_dims = 10;
  std::string theo_out;
  theo->add_flag("--check-bcn", theo_bcn, "check BCN admissibility of the threshold construction");
  theo->add_flag("--tau1-bound", theo_bound, "print the binding tau1 bound");
  theo->add_option("--flip-prob", theo_flip_z, "evaluate flip probability at score z")
      ->each([&](const std::string&) { theo_flip_set = true; });
  theo->add_option("--marginal-kl", theo_kl, "KL for per-dimension mean difference")
      ->each([&](const std::string&) { theo_kl_set = true; });
  theo->add_option("--kl-dims", theo_kl_dims, "dimensions for --marginal-kl");
  theo->add_option("--mu0", theo_mu0, "group-0 score mean");
  theo->add_option("--mu1", theo_mu1, "group-1 score mean");
  theo->add_option("--sigma2", theo_sigma2, "score variance");
  theo->add_option("--c", theo_c, "floor testing probability");
  theo->add_option("--p-a", theo_pa, "P(A=0)");
  theo->add_option("--tau0", theo_tau0, "group-0 censorship threshold");
  theo->add_option("--tau1", theo_tau1, "group-1 censorship threshold");
  theo->add_option("--b", theo_b, "decision threshold");
  theo->add_option("--grid-points", theo_grid, "grid resolution");
  theo->add_option("--out", theo_out, "output directory (optional)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*sim) {
      return run_simulate(sim_config, sim_out,
                          sim_n >= 0 ? std::optional<long>(sim_n) : std::nullopt,
                          sim_seed_set ? std::optional<std::uint64_t>(sim_seed)
                                       : std::nullopt);
    }
    if (*sweep) {
      return run_sweep_cmd(sweep_spec, sweep_out, sweep_jobs,
                           sweep_realizations >= 0
                               ? std::optional<long>(sweep_realizations)
                               : std::nullopt);
    }
    if (*met) return run_metrics(met_cohort, met_out);
    if (*det) return run_detect(det_records, det_alpha, det_tests, det_out);
    if (*aud) {
      if (aud_cohort.empty() && aud_records.empty())
        throw CLI::ValidationError("audit needs --cohort or --records");
      return run_audit(aud_cohort, aud_records, aud_alpha, aud_boundaries,
                       aud_high_risk >= 0 ? std::optional<int>(aud_high_risk)
                                          : std::nullopt,
                       aud_out);
    }
    if (*theo) {
      return run_theory(theo_bcn, theo_bound,
                        theo_flip_set ? std::optional<double>(theo_flip_z) : std::nullopt,
                        theo_kl_set ? std::optional<double>(theo_kl) : std::nullopt,
                        theo_mu0, theo_mu1, theo_sigma2, theo_c, theo_pa, theo_tau0,
                        theo_tau1, theo_b, theo_grid, theo_kl_dims, theo_out);
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
