#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "censorlab/io.hpp"

using namespace censorlab;
namespace fs = std::filesystem;

namespace {

std::string binary_path() {
  const char* env = std::getenv("CENSORLAB_BIN");
  REQUIRE_MESSAGE(env != nullptr, "CENSORLAB_BIN must point at the CLI binary");
  return env;
}

int run(const std::string& args) {
  const std::string cmd = binary_path() + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

fs::path work_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "censorlab_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string setting2_config(double tau1) {
  nlohmann::json j{{"mu0", 0.35}, {"mu1", 0.55}, {"sigma2", 0.1}, {"tau0", 5.0},
                   {"tau1", tau1}, {"c", 0.05},  {"seed", 11},    {"n_train", 400},
                   {"n_test", 400}};
  return j.dump(2);
}

}  // namespace

TEST_CASE("simulate writes a cohort, a summary and a manifest") {
  const fs::path dir = work_dir("simulate");
  const fs::path cfg = dir / "config.json";
  write_text_file(cfg, setting2_config(7.0));

  const int rc = run("simulate --config " + cfg.string() + " --out " + dir.string() +
                     " --n 500");
  CHECK(rc == 0);
  REQUIRE(fs::exists(dir / "cohort.csv"));
  REQUIRE(fs::exists(dir / "summary.json"));
  REQUIRE(fs::exists(dir / "manifest.json"));

  const auto manifest = nlohmann::json::parse(read_text_file(dir / "manifest.json"));
  CHECK(manifest.at("command") == "simulate");
  CHECK(manifest.contains("version"));
  CHECK(manifest.at("wall_time_seconds").get<double>() >= 0.0);
  CHECK(manifest.contains("config_hash"));
  CHECK(manifest.at("outputs").size() == 2);

  const auto summary = nlohmann::json::parse(read_text_file(dir / "summary.json"));
  CHECK(summary.at("n") == 500);
  // tau1 > tau0: group 0 tested more often.
  CHECK(summary.at("testing_rate_0").get<double>() >
        summary.at("testing_rate_1").get<double>());
  CHECK(summary.at("undertesting_level_group1").get<double>() ==
        doctest::Approx(0.95 * 2.0));

  std::ifstream csv(dir / "cohort.csv");
  std::string line;
  std::getline(csv, line);
  CHECK(line == "group,y,t,y_obs,score,x1,x2,x3,x4,x5,x6,x7,x8,x9,x10");
  long rows = 0;
  while (std::getline(csv, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 500);
}

TEST_CASE("simulate is idempotent given the same seed") {
  const fs::path dir_a = work_dir("sim_a");
  const fs::path dir_b = work_dir("sim_b");
  const fs::path cfg = dir_a / "config.json";
  write_text_file(cfg, setting2_config(6.6));

  CHECK(run("simulate --config " + cfg.string() + " --out " + dir_a.string()) == 0);
  CHECK(run("simulate --config " + cfg.string() + " --out " + dir_b.string()) == 0);
  CHECK(read_text_file(dir_a / "cohort.csv") == read_text_file(dir_b / "cohort.csv"));
  CHECK(read_text_file(dir_a / "summary.json") == read_text_file(dir_b / "summary.json"));
}

TEST_CASE("simulate rejects degenerate sizes with a usage error") {
  const fs::path dir = work_dir("sim_bad");
  const fs::path cfg = dir / "config.json";
  write_text_file(cfg, setting2_config(6.6));
  CHECK(run("simulate --config " + cfg.string() + " --out " + dir.string() + " --n 0") == 2);
}

TEST_CASE("sweep runs a grid and is scheduling-independent") {
  const fs::path dir1 = work_dir("sweep_j1");
  const fs::path dir8 = work_dir("sweep_j8");
  nlohmann::json spec{{"setting", 2},
                      {"tau0", {5.0}},
                      {"tau1", {5.0, 6.6}},
                      {"realizations", 2},
                      {"n_train", 150},
                      {"n_test", 300},
                      {"master_seed", 7},
                      {"train_labels", "both"}};
  const fs::path spec_path = dir1 / "spec.json";
  write_text_file(spec_path, spec.dump(2));

  CHECK(run("sweep --spec " + spec_path.string() + " --out " + dir1.string() +
            " --jobs 1") == 0);
  CHECK(run("sweep --spec " + spec_path.string() + " --out " + dir8.string() +
            " --jobs 8") == 0);
  REQUIRE(fs::exists(dir1 / "table.csv"));
  REQUIRE(fs::exists(dir1 / "manifest.json"));
  const auto manifest = nlohmann::json::parse(read_text_file(dir1 / "manifest.json"));
  CHECK(manifest.at("command") == "sweep");
  CHECK(manifest.contains("spec_hash"));
  CHECK(manifest.at("master_seed").get<long>() == 7);
  CHECK(manifest.at("jobs").get<int>() == 1);
  CHECK(read_text_file(dir1 / "table.csv") == read_text_file(dir8 / "table.csv"));
}

TEST_CASE("sweep rejects malformed specs with exit code 2") {
  const fs::path dir = work_dir("sweep_bad");
  const fs::path spec_path = dir / "spec.json";
  write_text_file(spec_path, "{\"setting\": 2");
  CHECK(run("sweep --spec " + spec_path.string() + " --out " + dir.string()) == 2);

  write_text_file(spec_path, "{\"setting\": 2, \"tau1\": []}");
  CHECK(run("sweep --spec " + spec_path.string() + " --out " + dir.string()) == 2);
}

TEST_CASE("metrics command evaluates a scored cohort") {
  const fs::path dir = work_dir("metrics");
  const fs::path cfg = dir / "config.json";
  write_text_file(cfg, setting2_config(6.6));
  REQUIRE(run("simulate --config " + cfg.string() + " --out " + dir.string() +
              " --n 2000") == 0);
  CHECK(run("metrics --cohort " + (dir / "cohort.csv").string() + " --out " +
            dir.string()) == 0);
  const auto report = nlohmann::json::parse(read_text_file(dir / "gap_report.json"));
  // The stored score is the ground-truth risk: a perfect ranker.
  CHECK(report.at("auc_overall").get<double>() == 1.0);
  CHECK(report.at("delta_auc").get<double>() == 0.0);
}

TEST_CASE("detect reproduces an engineered z-value end to end") {
  const fs::path dir = work_dir("detect");
  const fs::path records = dir / "records.csv";
  std::ofstream out(records);
  out << "admission_id,group,cbc,abg\n";
  long id = 0;
  for (long i = 0; i < 10000; ++i)
    out << "w" << id++ << ",0," << (i < 7371 ? 1 : 0) << ',' << (i < 1375 ? 1 : 0) << "\n";
  for (long i = 0; i < 8000; ++i)
    out << "b" << id++ << ",1," << (i < 5456 ? 1 : 0) << ',' << (i < 834 ? 1 : 0) << "\n";
  out.close();

  CHECK(run("detect --records " + records.string() + " --alpha 0.01 --out " +
            dir.string()) == 0);
  const auto j = nlohmann::json::parse(read_text_file(dir / "ztests.json"));
  REQUIRE(j.at("tests").size() == 2);
  CHECK(j.at("corrected_alpha").get<double>() == doctest::Approx(0.005));
  CHECK(j.at("tests")[0].at("test") == "cbc");
  CHECK(j.at("tests")[0].at("significant").get<bool>());

  // Restricting --tests to one column changes the correction.
  CHECK(run("detect --records " + records.string() + " --alpha 0.01 --tests cbc --out " +
            dir.string()) == 0);
  const auto j2 = nlohmann::json::parse(read_text_file(dir / "ztests.json"));
  CHECK(j2.at("tests").size() == 1);
  CHECK(j2.at("corrected_alpha").get<double>() == doctest::Approx(0.01));

  const fs::path bad = dir / "bad.csv";
  write_text_file(bad, "admission_id,cbc\nx,1\n");
  CHECK(run("detect --records " + bad.string() + " --out " + dir.string()) == 1);
}

TEST_CASE("audit command flags the undertested high-risk group") {
  const fs::path dir = work_dir("audit");
  const fs::path cfg = dir / "config.json";
  write_text_file(cfg, setting2_config(7.0));
  REQUIRE(run("simulate --config " + cfg.string() + " --out " + dir.string() +
              " --n 20000") == 0);
  CHECK(run("audit --cohort " + (dir / "cohort.csv").string() + " --out " +
            dir.string()) == 0);
  const auto j = nlohmann::json::parse(read_text_file(dir / "audit.json"));
  CHECK(j.at("verdict") == "gap-risk");
  CHECK(j.at("reason") == "high-risk group undertested");
}

TEST_CASE("theory command reports the construction admissible") {
  const fs::path dir = work_dir("theory");
  const std::string cmd = binary_path() +
                          " theory --check-bcn --mu0 4.6 --mu1 5.4 --sigma2 0.25"
                          " --c 0.05 --p-a 0.5 --tau0 7 --tau1 5.2 --out " +
                          dir.string() + " > " + (dir / "stdout.txt").string() + " 2>&1";
  fs::create_directories(dir);
  CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  const std::string stdout_text = read_text_file(dir / "stdout.txt");
  CHECK(stdout_text.find("admissible") != std::string::npos);
  const auto j = nlohmann::json::parse(read_text_file(dir / "theory.json"));
  CHECK(j.at("bcn").at("admissible").get<bool>());
}

TEST_CASE("CENSORLAB_JOBS provides the default worker count") {
  const fs::path dir_env = work_dir("sweep_envjobs");
  const fs::path dir_one = work_dir("sweep_envjobs_ref");
  nlohmann::json spec{{"setting", 2},     {"tau0", {5.0}},   {"tau1", {6.6}},
                      {"realizations", 2}, {"n_train", 120},  {"n_test", 240},
                      {"master_seed", 3},  {"train_labels", "observed"}};
  const fs::path spec_path = dir_env / "spec.json";
  write_text_file(spec_path, spec.dump(2));

  const std::string env_cmd = "CENSORLAB_JOBS=3 " + binary_path() + " sweep --spec " +
                              spec_path.string() + " --out " + dir_env.string() +
                              " >/dev/null 2>&1";
  CHECK(WEXITSTATUS(std::system(env_cmd.c_str())) == 0);
  CHECK(run("sweep --spec " + spec_path.string() + " --out " + dir_one.string() +
            " --jobs 1") == 0);
  CHECK(read_text_file(dir_env / "table.csv") == read_text_file(dir_one / "table.csv"));
}

TEST_CASE("audit over bare records is inconclusive across all conditions") {
  const fs::path dir = work_dir("audit_records");
  const fs::path records = dir / "records.csv";
  write_text_file(records,
                  "admission_id,group,cbc\n"
                  "a1,0,1\n"
                  "a2,1,0\n"
                  "a3,0,0\n"
                  "a4,1,1\n");
  CHECK(run("audit --records " + records.string() + " --out " + dir.string()) == 0);
  const auto j = nlohmann::json::parse(read_text_file(dir / "audit.json"));
  CHECK(j.at("verdict") == "inconclusive");
  CHECK(j.at("unresolved_conditions").size() == 4);

  const fs::path lopsided = dir / "one_group.csv";
  write_text_file(lopsided, "admission_id,group,cbc\na1,0,1\na2,0,0\n");
  CHECK(run("audit --records " + lopsided.string() + " --out " + dir.string()) == 1);
}
