#include "censorlab/detect.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

namespace censorlab {

ZTestResult two_proportion_ztest(double p0, long n0, double p1, long n1) {
  if (n0 < 1 || n1 < 1)
    throw std::invalid_argument("two_proportion_ztest: counts must be >= 1");
  if (!(p0 >= 0.0 && p0 <= 1.0) || !(p1 >= 0.0 && p1 <= 1.0))
    throw std::invalid_argument("two_proportion_ztest: proportions must lie in [0,1]");

  ZTestResult r;
  r.p0 = p0;
  r.p1 = p1;
  r.n0 = n0;
  r.n1 = n1;
  const double var = p0 * (1.0 - p0) / static_cast<double>(n0) +
                     p1 * (1.0 - p1) / static_cast<double>(n1);
  if (var == 0.0) {
    if (p0 == p1) {
      r.z = 0.0;
      r.p_value = 1.0;
    } else {
      r.z = p0 > p1 ? std::numeric_limits<double>::infinity()
                    : -std::numeric_limits<double>::infinity();
      r.p_value = 0.0;
    }
    return r;
  }
  r.z = (p0 - p1) / std::sqrt(var);
  r.p_value = std::erfc(std::fabs(r.z) / std::sqrt(2.0));
  return r;
}

double bonferroni(double alpha, long m) {
  if (m < 1) throw std::invalid_argument("bonferroni: m must be >= 1");
  return alpha / static_cast<double>(m);
}

namespace {
// Kolmogorov survival function Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 l^2).
double kolmogorov_q(double lambda) {
  if (lambda <= 0.0) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 128; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    if (term < 1e-14) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}
}  // namespace

KsResult ks_two_sample(std::span<const double> sample0, std::span<const double> sample1) {
  if (sample0.empty() || sample1.empty())
    throw std::invalid_argument("ks_two_sample: empty sample");
  std::vector<double> a(sample0.begin(), sample0.end());
  std::vector<double> b(sample1.begin(), sample1.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());

  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  // Remaining tail contributes |1 - F_other| which is covered once either
  // index hits its end; the sup over processed points already includes it.
  const double ne = na * nb / (na + nb);
  return KsResult{d, kolmogorov_q(d * std::sqrt(ne))};
}

ThresholdEstimate estimate_threshold(std::span<const double> scores,
                                     const std::vector<bool>& tested,
                                     std::span<const double> c_grid,
                                     std::span<const double> tau_grid) {
  if (scores.size() != tested.size())
    throw std::invalid_argument("estimate_threshold: scores/tested misaligned");
  if (scores.empty()) throw std::invalid_argument("estimate_threshold: empty data");
  if (c_grid.empty() || tau_grid.empty())
    throw std::invalid_argument("estimate_threshold: empty grid");
  for (double c : c_grid)
    if (!(c > 0.0 && c <= 1.0))
      throw std::invalid_argument("estimate_threshold: c grid values must lie in (0,1]");

  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return scores[x] < scores[y]; });
  std::vector<double> sorted_scores(n);
  std::vector<long> tested_prefix(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    sorted_scores[i] = scores[order[i]];
    tested_prefix[i + 1] = tested_prefix[i] + (tested[order[i]] ? 1 : 0);
  }
  const long tested_total = tested_prefix[n];

  const double neg_inf = -std::numeric_limits<double>::infinity();
  double best_ll = neg_inf;
  double best_tau = tau_grid.front();
  double best_c = c_grid.front();
  bool found = false;

  std::vector<double> sorted_tau(tau_grid.begin(), tau_grid.end());
  std::sort(sorted_tau.begin(), sorted_tau.end());
  std::vector<double> sorted_c(c_grid.begin(), c_grid.end());
  std::sort(sorted_c.begin(), sorted_c.end());

  for (double tau : sorted_tau) {
    // s <= tau is "below"; the law is deterministic above.
    const auto split = std::upper_bound(sorted_scores.begin(), sorted_scores.end(), tau);
    const long n_below = static_cast<long>(split - sorted_scores.begin());
    const long tested_below = tested_prefix[static_cast<std::size_t>(n_below)];
    const long untested_above =
        (static_cast<long>(n) - n_below) - (tested_total - tested_below);
    const long untested_below = n_below - tested_below;

    for (double c : sorted_c) {
      double ll;
      if (untested_above > 0) {
        ll = neg_inf;  // deterministic branch contradicted
      } else if (c == 1.0 && untested_below > 0) {
        ll = neg_inf;
      } else {
        ll = 0.0;
        if (tested_below > 0) ll += static_cast<double>(tested_below) * std::log(c);
        if (untested_below > 0)
          ll += static_cast<double>(untested_below) * std::log1p(-c);
      }
      if (!found || ll > best_ll) {
        found = true;
        best_ll = ll;
        best_tau = tau;
        best_c = c;
      }
    }
  }

  ThresholdEstimate est;
  est.tau_hat = best_tau;
  est.c_hat = best_c;
  est.log_likelihood = best_ll;
  est.boundary = best_tau == sorted_tau.front() || best_tau == sorted_tau.back() ||
                 best_c == sorted_c.front() || best_c == sorted_c.back();

  const double p_hat = static_cast<double>(tested_total) / static_cast<double>(n);
  double ll_const = 0.0;
  if (tested_total > 0) ll_const += static_cast<double>(tested_total) * std::log(p_hat);
  if (tested_total < static_cast<long>(n))
    ll_const += static_cast<double>(static_cast<long>(n) - tested_total) *
                std::log1p(-p_hat);
  est.constant_rate_log_likelihood = ll_const;
  return est;
}

namespace {
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}
}  // namespace

TestingRecordTable TestingRecordTable::read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty records file");
  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "admission_id" || header[1] != "group")
    throw std::runtime_error(
        "records header must start with admission_id,group and carry at least one test column");

  TestingRecordTable table;
  table.test_names.assign(header.begin() + 2, header.end());
  long row = 1;
  std::vector<std::string> errors;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      errors.push_back("row " + std::to_string(row) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(fields.size()));
      continue;
    }
    Row r;
    r.admission_id = fields[0];
    if (fields[1] == "0") {
      r.group = GroupId::g0;
    } else if (fields[1] == "1") {
      r.group = GroupId::g1;
    } else {
      errors.push_back("row " + std::to_string(row) + ": group must be 0 or 1, got '" +
                       fields[1] + "'");
      continue;
    }
    bool bad_cell = false;
    for (std::size_t i = 2; i < fields.size(); ++i) {
      if (fields[i] == "0") {
        r.tested.push_back(0);
      } else if (fields[i] == "1") {
        r.tested.push_back(1);
      } else {
        errors.push_back("row " + std::to_string(row) + ": column '" +
                         header[i] + "' must be 0 or 1, got '" + fields[i] + "'");
        bad_cell = true;
        break;
      }
    }
    if (!bad_cell) table.rows.push_back(std::move(r));
  }
  if (!errors.empty()) {
    std::string msg = "records schema violations:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw std::runtime_error(msg);
  }
  return table;
}

long TestingRecordTable::count(GroupId g) const {
  long n = 0;
  for (const auto& r : rows) n += (r.group == g);
  return n;
}

double TestingRecordTable::proportion(std::size_t test_index, GroupId g) const {
  long n = 0, tested = 0;
  for (const auto& r : rows) {
    if (r.group != g) continue;
    ++n;
    tested += r.tested.at(test_index);
  }
  if (n == 0) throw std::domain_error("proportion: empty group");
  return static_cast<double>(tested) / static_cast<double>(n);
}

std::vector<ZTestResult> detect_disparate_censorship(const TestingRecordTable& table,
                                                     double alpha,
                                                     std::span<const std::string> names) {
  std::vector<std::size_t> indices;
  if (names.empty()) {
    for (std::size_t i = 0; i < table.test_names.size(); ++i) indices.push_back(i);
  } else {
    for (const auto& name : names) {
      const auto it =
          std::find(table.test_names.begin(), table.test_names.end(), name);
      if (it == table.test_names.end())
        throw std::invalid_argument("unknown test name: " + name);
      indices.push_back(static_cast<std::size_t>(it - table.test_names.begin()));
    }
  }
  const long n0 = table.count(GroupId::g0);
  const long n1 = table.count(GroupId::g1);
  if (n0 == 0 || n1 == 0)
    throw std::domain_error("detect_disparate_censorship: both groups must be present");

  const double corrected = bonferroni(alpha, static_cast<long>(indices.size()));
  std::vector<ZTestResult> results;
  for (std::size_t idx : indices) {
    ZTestResult r = two_proportion_ztest(table.proportion(idx, GroupId::g0), n0,
                                         table.proportion(idx, GroupId::g1), n1);
    r.test_name = table.test_names[idx];
    r.significant = r.p_value < corrected;
    results.push_back(std::move(r));
  }
  return results;
}

std::string ztest_results_to_csv(std::span<const ZTestResult> results) {
  std::ostringstream out;
  out << "test,p0,p1,z,p\n";
  out.setf(std::ios::fixed);
  for (const auto& r : results) {
    out.precision(6);
    out << r.test_name << ',' << r.p0 << ',' << r.p1 << ',';
    out.precision(4);
    out << r.z << ',';
    out.precision(6);
    out << r.p_value << "\n";
  }
  return out.str();
}

std::string ztest_results_to_json(std::span<const ZTestResult> results, double alpha,
                                  double corrected_alpha) {
  nlohmann::json j;
  j["alpha"] = alpha;
  j["corrected_alpha"] = corrected_alpha;
  j["tests"] = nlohmann::json::array();
  for (const auto& r : results) {
    j["tests"].push_back({{"test", r.test_name},
                          {"p0", r.p0},
                          {"p1", r.p1},
                          {"n0", r.n0},
                          {"n1", r.n1},
                          {"z", r.z},
                          {"p_value", r.p_value},
                          {"significant", r.significant}});
  }
  return j.dump(2);
}

namespace {
enum class Tri { yes, no, unknown };

Tri tri_and(Tri a, Tri b) {
  if (a == Tri::no || b == Tri::no) return Tri::no;
  if (a == Tri::unknown || b == Tri::unknown) return Tri::unknown;
  return Tri::yes;
}
}  // namespace

AuditReport audit(std::span<const CovariateSample> covariates,
                  const std::optional<std::array<GroupScores, 2>>& scores,
                  const AuditOptions& options) {
  AuditReport report;

  // Condition 1: do the marginal covariate distributions differ?
  Tri cond1 = Tri::unknown;
  if (!covariates.empty()) {
    report.condition1_resolved = true;
    report.corrected_alpha =
        bonferroni(options.alpha, static_cast<long>(covariates.size()));
    bool any = false;
    for (const auto& cov : covariates) {
      const KsResult ks = ks_two_sample(cov.group0, cov.group1);
      any = any || ks.p_value < report.corrected_alpha;
      report.ks_results.emplace_back(cov.name, ks);
    }
    report.marginal_differs = any;
    cond1 = any ? Tri::yes : Tri::no;
  }

  // Condition 2: is the high-risk group undertested?
  Tri cond2 = Tri::unknown;
  if (scores && !(*scores)[0].scores.empty() && !(*scores)[1].scores.empty()) {
    report.condition2_resolved = true;
    std::vector<double> tau_grid = options.tau_grid;
    std::vector<double> c_grid = options.c_grid;
    if (tau_grid.empty()) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -std::numeric_limits<double>::infinity();
      for (int g : {0, 1}) {
        for (double s : (*scores)[static_cast<std::size_t>(g)].scores) {
          lo = std::min(lo, s);
          hi = std::max(hi, s);
        }
      }
      const int steps = 100;
      for (int i = 0; i <= steps; ++i)
        tau_grid.push_back(lo + (hi - lo) * static_cast<double>(i) / steps);
    }
    if (c_grid.empty()) {
      for (int i = 1; i <= 100; ++i) c_grid.push_back(static_cast<double>(i) / 100.0);
    }

    double mean_score[2] = {0.0, 0.0};
    for (int g : {0, 1}) {
      const auto& gs = (*scores)[static_cast<std::size_t>(g)];
      report.thresholds[static_cast<std::size_t>(g)] =
          estimate_threshold(gs.scores, gs.tested, c_grid, tau_grid);
      double sum = 0.0;
      for (double s : gs.scores) sum += s;
      mean_score[g] = sum / static_cast<double>(gs.scores.size());
    }
    const int high_risk = options.high_risk_group
                              ? group_index(*options.high_risk_group)
                              : (mean_score[1] >= mean_score[0] ? 1 : 0);
    report.high_risk_group = high_risk;
    report.high_risk_undertested =
        report.thresholds[static_cast<std::size_t>(high_risk)].tau_hat >
        report.thresholds[static_cast<std::size_t>(1 - high_risk)].tau_hat;
    cond2 = report.high_risk_undertested ? Tri::yes : Tri::no;
  }

  // Conditions 3 and 4: decidable only with ground-truth boundaries.
  Tri cond3 = Tri::unknown;
  Tri cond4 = Tri::unknown;
  if (options.boundaries) {
    report.condition34_resolved = true;
    const auto& lb = *options.boundaries;
    // Conditional laws coincide when the normalized group boundaries match.
    auto norm_of = [](const std::vector<double>& v) {
      double ss = 0.0;
      for (double x : v) ss += x * x;
      return std::sqrt(ss);
    };
    const double n0v = norm_of(lb.theta0);
    const double n1v = norm_of(lb.theta1);
    bool same = n0v > 0.0 && n1v > 0.0 && lb.theta0.size() == lb.theta1.size();
    if (same) {
      double diff = std::fabs(lb.offset0 / n0v - lb.offset1 / n1v);
      for (std::size_t i = 0; i < lb.theta0.size(); ++i)
        diff = std::max(diff, std::fabs(lb.theta0[i] / n0v - lb.theta1[i] / n1v));
      same = diff <= options.parallel_tol;
    }
    report.conditional_differs = !same;
    cond3 = same ? Tri::no : Tri::yes;

    report.parallel = check_parallel_boundaries(lb, options.parallel_tol);
    cond4 = report.parallel->parallel ? Tri::no : Tri::yes;
  }

  const Tri marginal_path = tri_and(cond1, cond2);
  const Tri conditional_path = tri_and(cond3, cond4);

  if (marginal_path == Tri::yes || conditional_path == Tri::yes) {
    report.outcome = AuditOutcome::gap_risk;
    if (marginal_path == Tri::yes && conditional_path == Tri::yes) {
      report.reason = "high-risk group undertested; non-parallel boundaries";
    } else if (marginal_path == Tri::yes) {
      report.reason = "high-risk group undertested";
    } else {
      report.reason = "non-parallel decision and censorship boundaries";
    }
  } else if (marginal_path == Tri::unknown || conditional_path == Tri::unknown) {
    report.outcome = AuditOutcome::inconclusive;
    if (cond1 == Tri::unknown) report.unresolved_conditions.push_back(1);
    if (cond2 == Tri::unknown) report.unresolved_conditions.push_back(2);
    if (cond3 == Tri::unknown) report.unresolved_conditions.push_back(3);
    if (cond4 == Tri::unknown) report.unresolved_conditions.push_back(4);
    report.reason = "conditions require domain knowledge or missing inputs";
  } else {
    report.outcome = AuditOutcome::no_gap_expected;
    report.reason = "no gap path satisfied";
  }
  return report;
}

AuditReport audit_cohort(const Cohort& cohort, const AuditOptions& options) {
  std::vector<CovariateSample> covariates(static_cast<std::size_t>(cohort.dimension));
  for (int i = 0; i < cohort.dimension; ++i)
    covariates[static_cast<std::size_t>(i)].name = "x" + std::to_string(i + 1);
  std::array<GroupScores, 2> scores;
  for (const auto& p : cohort.patients) {
    const int g = group_index(p.group);
    for (int i = 0; i < cohort.dimension; ++i) {
      auto& cov = covariates[static_cast<std::size_t>(i)];
      (g == 0 ? cov.group0 : cov.group1).push_back(p.covariates[static_cast<std::size_t>(i)]);
    }
    scores[static_cast<std::size_t>(g)].scores.push_back(p.score);
    scores[static_cast<std::size_t>(g)].tested.push_back(p.tested);
  }
  return audit(covariates, scores, options);
}

std::string AuditReport::to_json() const {
  nlohmann::json j;
  switch (outcome) {
    case AuditOutcome::no_gap_expected: j["verdict"] = "no-gap-expected"; break;
    case AuditOutcome::gap_risk: j["verdict"] = "gap-risk"; break;
    case AuditOutcome::inconclusive: j["verdict"] = "inconclusive"; break;
  }
  j["reason"] = reason;
  j["unresolved_conditions"] = unresolved_conditions;
  if (condition1_resolved) {
    j["condition1"] = {{"marginal_differs", marginal_differs},
                       {"corrected_alpha", corrected_alpha}};
    auto& arr = j["condition1"]["ks_tests"] = nlohmann::json::array();
    for (const auto& [name, ks] : ks_results)
      arr.push_back({{"covariate", name}, {"statistic", ks.statistic}, {"p_value", ks.p_value}});
  }
  if (condition2_resolved) {
    j["condition2"] = {
        {"high_risk_group", high_risk_group},
        {"high_risk_undertested", high_risk_undertested},
        {"tau_hat_0", thresholds[0].tau_hat},
        {"tau_hat_1", thresholds[1].tau_hat},
        {"c_hat_0", thresholds[0].c_hat},
        {"c_hat_1", thresholds[1].c_hat},
        {"boundary_0", thresholds[0].boundary},
        {"boundary_1", thresholds[1].boundary},
    };
  }
  if (condition34_resolved) {
    j["condition3"] = {{"conditional_differs", conditional_differs}};
    j["condition4"] = {{"parallel", parallel->parallel}};
    if (!parallel->parallel) j["condition4"]["offending_group"] = parallel->offending_group;
  }
  return j.dump(2);
}

}  // namespace censorlab
