#include "censorlab/metrics.hpp"

#include "censorlab/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace censorlab {

double auc(std::span<const double> scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("auc: scores/labels size mismatch");
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (bool l : labels) n_pos += l;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw std::domain_error("auc: both classes must be present");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Mid-ranks (1-based); ties share the average rank, so the rank sum equals
  // the half-credit pair count exactly.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]]) rank_sum_pos += mid_rank;
    }
    i = j + 1;
  }
  const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) *
                                      static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double xauc(std::span<const double> scores_pos, std::span<const double> scores_neg) {
  if (scores_pos.empty() || scores_neg.empty())
    throw std::domain_error("xauc: empty score vector");
  std::vector<double> neg(scores_neg.begin(), scores_neg.end());
  std::sort(neg.begin(), neg.end());
  double wins = 0.0;
  for (double s : scores_pos) {
    const auto lo = std::lower_bound(neg.begin(), neg.end(), s);
    const auto hi = std::upper_bound(lo, neg.end(), s);
    wins += static_cast<double>(lo - neg.begin());
    wins += 0.5 * static_cast<double>(hi - lo);
  }
  return wins / (static_cast<double>(scores_pos.size()) *
                 static_cast<double>(neg.size()));
}

namespace {

struct GroupSlices {
  std::vector<double> pos[2];
  std::vector<double> neg[2];
};

GroupSlices split_by_group_and_class(const Cohort& cohort) {
  GroupSlices s;
  for (const auto& p : cohort.patients) {
    const int g = group_index(p.group);
    (p.y ? s.pos[g] : s.neg[g]).push_back(p.score);
  }
  for (int g : {0, 1}) {
    if (s.pos[g].empty())
      throw std::domain_error("gap_report: group " + std::to_string(g) +
                              " has no positive patients");
    if (s.neg[g].empty())
      throw std::domain_error("gap_report: group " + std::to_string(g) +
                              " has no negative patients");
  }
  return s;
}

}  // namespace

GapReport gap_report(const Cohort& cohort) {
  const GroupSlices s = split_by_group_and_class(cohort);

  std::vector<double> scores;
  std::vector<bool> labels;
  scores.reserve(cohort.size());
  labels.reserve(cohort.size());
  for (const auto& p : cohort.patients) {
    scores.push_back(p.score);
    labels.push_back(p.y);
  }

  GapReport r;
  r.auc_overall = auc(scores, labels);
  r.auc_0 = xauc(s.pos[0], s.neg[0]);
  r.auc_1 = xauc(s.pos[1], s.neg[1]);
  r.xauc_01 = xauc(s.pos[0], s.neg[1]);
  r.xauc_10 = xauc(s.pos[1], s.neg[0]);
  r.delta_auc = std::fabs(r.auc_1 - r.auc_0);
  r.delta_xauc = std::fabs(r.xauc_01 - r.xauc_10);
  r.missed_positive_rate_0 = missed_positive_rate(cohort, GroupId::g0);
  r.missed_positive_rate_1 = missed_positive_rate(cohort, GroupId::g1);
  r.missed_positive_rate_overall = missed_positive_rate(cohort);
  r.censorship_rate_0 = censorship_rate(cohort, GroupId::g0);
  r.censorship_rate_1 = censorship_rate(cohort, GroupId::g1);
  return r;
}

ClassGroupWeights class_group_weights(const Cohort& cohort) {
  double pos[2] = {0, 0};
  double neg[2] = {0, 0};
  for (const auto& p : cohort.patients) {
    (p.y ? pos : neg)[group_index(p.group)] += 1.0;
  }
  const double n_pos = pos[0] + pos[1];
  const double n_neg = neg[0] + neg[1];
  if (n_pos == 0 || n_neg == 0)
    throw std::domain_error("class_group_weights: both classes must be present");
  return ClassGroupWeights{pos[0] / n_pos, pos[1] / n_pos, neg[0] / n_neg,
                           neg[1] / n_neg};
}

double decomposition_residual(const GapReport& report, const ClassGroupWeights& w) {
  constexpr double kWeightTol = 1e-9;
  if (std::fabs(w.pos_g0 + w.pos_g1 - 1.0) > kWeightTol ||
      std::fabs(w.neg_g0 + w.neg_g1 - 1.0) > kWeightTol)
    throw std::invalid_argument("decomposition_residual: weights must sum to 1 per class");
  const double combined = w.neg_g0 * w.pos_g0 * report.auc_0 +
                          w.neg_g1 * w.pos_g1 * report.auc_1 +
                          w.neg_g0 * w.pos_g1 * report.xauc_10 +
                          w.neg_g1 * w.pos_g0 * report.xauc_01;
  return std::fabs(report.auc_overall - combined);
}

CiSummary empirical_ci(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("empirical_ci: empty input");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] + frac * (v[hi] - v[lo]);
  };
  return CiSummary{quantile(0.5), quantile(0.025), quantile(0.975)};
}

std::string GapReport::to_json() const {
  nlohmann::json j{{"auc_overall", auc_overall},
                   {"auc_0", auc_0},
                   {"auc_1", auc_1},
                   {"xauc_01", xauc_01},
                   {"xauc_10", xauc_10},
                   {"delta_auc", delta_auc},
                   {"delta_xauc", delta_xauc},
                   {"missed_positive_rate_0", missed_positive_rate_0},
                   {"missed_positive_rate_1", missed_positive_rate_1},
                   {"missed_positive_rate_overall", missed_positive_rate_overall},
                   {"censorship_rate_0", censorship_rate_0},
                   {"censorship_rate_1", censorship_rate_1}};
  return j.dump(2);
}

}  // namespace censorlab
