#include <doctest.h>

#include <stdexcept>
#include <cmath>
#include <vector>

#include "censorlab/encoder.hpp"
#include "censorlab/metrics.hpp"
#include "censorlab/rng.hpp"
#include "censorlab/svm.hpp"
#include "censorlab/synthgen.hpp"

using namespace censorlab;

namespace {

Cohort setting2_cohort(long n, double tau1, std::uint64_t seed) {
  SimulationConfig cfg;
  cfg.mu0 = 0.35;
  cfg.mu1 = 0.55;
  cfg.tau0 = 5.0;
  cfg.tau1 = tau1;
  cfg.seed = seed;
  Rng rng(derive_realization_seed(seed, 0));
  return generate_cohort(cfg, n, rng);
}

Cohort tiny_labeled_cohort(Rng& rng, int n) {
  Cohort cohort;
  cohort.dimension = 3;
  for (int i = 0; i < n; ++i) {
    Patient p;
    p.group = group_from_int(i % 2);
    p.covariates = {rng.next_uniform(), rng.next_uniform(), rng.next_uniform()};
    p.y = p.covariates[0] + p.covariates[1] > 0.9;
    if (i == 0) p.y = true;
    if (i == 1) p.y = false;
    p.tested = true;
    p.y_obs = p.y;
    p.score = 0.0;
    cohort.patients.push_back(p);
  }
  return cohort;
}

}  // namespace

TEST_CASE("one-hot encoder block structure") {
  Encoder enc{10};
  const auto lo = enc.encode(std::vector<double>(10, 0.0));
  const auto hi = enc.encode(std::vector<double>(10, 1.0));
  const auto mid = enc.encode(std::vector<double>(10, 0.5));
  REQUIRE(lo.size() == 60);
  for (int d = 0; d < 10; ++d) {
    CHECK(lo[d * 6 + 0] == 1.0);
    CHECK(hi[d * 6 + 5] == 1.0);
    CHECK(mid[d * 6 + 3] == 1.0);  // ceil(2.5) = 3
  }
  for (const auto& v : {lo, hi, mid}) {
    double total = 0.0;
    for (double e : v) total += e;
    CHECK(total == 10.0);  // exactly one indicator per block
  }
  CHECK_THROWS_AS(enc.encode(std::vector<double>(10, 1.2)), std::invalid_argument);
  CHECK_THROWS_AS(enc.encode(std::vector<double>(10, -0.1)), std::invalid_argument);
  CHECK_THROWS_AS(enc.encode(std::vector<double>(3, 0.5)), std::invalid_argument);
}

TEST_CASE("auto gamma formula") {
  CHECK(auto_gamma({{0.0, 1.0}, {1.0, 0.0}}) == doctest::Approx(2.0));
  CHECK_THROWS_AS(auto_gamma({{1.0, 1.0}, {1.0, 1.0}}), std::domain_error);

  // One-hot rows with d = 10: 60 features, entry variance (1/6)(5/6).
  Encoder enc{10};
  Rng rng(3);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 50; ++i) {
    std::vector<double> x(10);
    for (auto& v : x) v = rng.next_uniform();
    rows.push_back(enc.encode(x));
  }
  CHECK(auto_gamma(rows) == doctest::Approx(1.0 / (60.0 * (5.0 / 36.0))).epsilon(1e-12));
}

TEST_CASE("two separable points train to a perfect ranking") {
  Cohort cohort;
  cohort.dimension = 2;
  Patient pos;
  pos.group = GroupId::g0;
  pos.covariates = {0.9, 0.9};
  pos.y = true;
  pos.tested = true;
  pos.y_obs = true;
  Patient neg = pos;
  neg.group = GroupId::g1;
  neg.covariates = {0.1, 0.1};
  neg.y = false;
  neg.y_obs = false;
  cohort.patients = {pos, neg};

  TrainConfig tc;
  tc.gamma = 0.5;
  const TrainedScorer model = train_svm(cohort, LabelSource::true_y, tc);
  const double f_pos = model.decision_value(pos.covariates, pos.group);
  const double f_neg = model.decision_value(neg.covariates, neg.group);
  CHECK(f_pos > f_neg);
  CHECK(auc(std::vector<double>{f_pos, f_neg}, {true, false}) == 1.0);
}

TEST_CASE("single-class training labels are rejected") {
  Rng rng(5);
  Cohort cohort = tiny_labeled_cohort(rng, 20);
  for (auto& p : cohort.patients) {
    p.y = true;
    p.y_obs = true;
  }
  CHECK_THROWS_AS(train_svm(cohort, LabelSource::true_y, TrainConfig{}), std::domain_error);
}

TEST_CASE("non-convergence raises an error carrying the violation") {
  Rng rng(7);
  const Cohort cohort = tiny_labeled_cohort(rng, 60);
  TrainConfig tc;
  tc.max_iter = 1;
  try {
    train_svm(cohort, LabelSource::true_y, tc);
    FAIL("expected SvmConvergenceError");
  } catch (const SvmConvergenceError& e) {
    CHECK(e.kkt_violation > 0.0);
  }
}

TEST_CASE("dual box constraints and objective monotonicity") {
  Rng rng(11);
  const Cohort cohort = tiny_labeled_cohort(rng, 80);
  TrainConfig tc;
  tc.track_objective = true;
  const TrainedScorer model = train_svm(cohort, LabelSource::true_y, tc);

  for (double ay : model.sv_alpha_y) {
    CHECK(std::fabs(ay) > 0.0);
    CHECK(std::fabs(ay) <= tc.C + 1e-12);
  }
  REQUIRE(model.objective_trace.size() > 1);
  for (std::size_t i = 1; i < model.objective_trace.size(); ++i)
    CHECK(model.objective_trace[i] >= model.objective_trace[i - 1] - 1e-9);
  CHECK(model.final_kkt_violation <= tc.tol);
}

TEST_CASE("duplicating every training point with halved C keeps the decision function") {
  Rng rng(13);
  const Cohort cohort = tiny_labeled_cohort(rng, 40);
  Cohort doubled = cohort;
  doubled.patients.insert(doubled.patients.end(), cohort.patients.begin(),
                          cohort.patients.end());

  TrainConfig tc;
  tc.tol = 1e-6;
  tc.gamma = 0.8;
  TrainConfig tc_half = tc;
  tc_half.C = 0.5;
  const TrainedScorer base = train_svm(cohort, LabelSource::true_y, tc);
  const TrainedScorer dup = train_svm(doubled, LabelSource::true_y, tc_half);

  Rng probe(17);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> x{probe.next_uniform(), probe.next_uniform(), probe.next_uniform()};
    const double fa = base.decision_value(x, GroupId::g0);
    const double fb = dup.decision_value(x, GroupId::g0);
    CHECK(std::fabs(fa - fb) < 1e-3);
  }
}

TEST_CASE("setting 2 oracle model clears the expected overall accuracy band") {
  const Cohort train = setting2_cohort(2000, 7.0, 424242);
  Cohort test = setting2_cohort(20000, 7.0, 424243);
  const TrainedScorer model = train_svm(train, LabelSource::true_y, TrainConfig{});

  std::vector<double> scores;
  std::vector<bool> labels;
  for (const auto& p : test.patients) {
    scores.push_back(model.decision_value(p.covariates, p.group));
    labels.push_back(p.y);
  }
  CHECK(auc(scores, labels) >= 0.97);
}

TEST_CASE("platt objective gradient matches central finite differences") {
  Rng rng(19);
  std::vector<double> f(40);
  std::vector<bool> y(40);
  for (std::size_t i = 0; i < f.size(); ++i) {
    f[i] = 4.0 * rng.next_uniform() - 2.0;
    y[i] = rng.next_bernoulli(0.5);
  }
  y[0] = true;
  y[1] = false;

  for (int trial = 0; trial < 20; ++trial) {
    const double a = 2.0 * rng.next_uniform() - 1.0;
    const double b = 2.0 * rng.next_uniform() - 1.0;
    const PlattObjective g = platt_objective(f, y, a, b);
    const double h = 1e-6;
    const double fd_a =
        (platt_objective(f, y, a + h, b).value - platt_objective(f, y, a - h, b).value) /
        (2.0 * h);
    const double fd_b =
        (platt_objective(f, y, a, b + h).value - platt_objective(f, y, a, b - h).value) /
        (2.0 * h);
    CHECK(g.grad_a == doctest::Approx(fd_a).epsilon(1e-5));
    CHECK(g.grad_b == doctest::Approx(fd_b).epsilon(1e-5));
  }
}

TEST_CASE("platt calibration is rank-preserving and bounded") {
  const Cohort train = setting2_cohort(400, 6.6, 5);
  Cohort test = setting2_cohort(600, 6.6, 6);
  TrainConfig tc;
  tc.platt = true;
  const TrainedScorer model = train_svm(train, LabelSource::observed, tc);
  REQUIRE(model.platt.has_value());

  Cohort raw_scored = test;
  Cohort platt_scored = test;
  for (std::size_t i = 0; i < test.patients.size(); ++i) {
    const auto& p = test.patients[i];
    raw_scored.patients[i].score = model.decision_value(p.covariates, p.group);
    platt_scored.patients[i].score = model.score(p.covariates, p.group);
    CHECK(platt_scored.patients[i].score > 0.0);
    CHECK(platt_scored.patients[i].score < 1.0);
  }
  const GapReport a = gap_report(raw_scored);
  const GapReport b = gap_report(platt_scored);
  CHECK(a.auc_overall == b.auc_overall);
  CHECK(a.auc_0 == b.auc_0);
  CHECK(a.auc_1 == b.auc_1);
  CHECK(a.xauc_01 == b.xauc_01);
  CHECK(a.xauc_10 == b.xauc_10);
  CHECK(a.delta_auc == b.delta_auc);
  CHECK(a.delta_xauc == b.delta_xauc);
}

TEST_CASE("model json round-trip reproduces decision values bit for bit") {
  Rng rng(23);
  const Cohort cohort = tiny_labeled_cohort(rng, 50);
  TrainConfig tc;
  tc.platt = true;
  tc.include_group = true;
  const TrainedScorer model = train_svm(cohort, LabelSource::true_y, tc);
  const TrainedScorer back = TrainedScorer::from_json(model.to_json());

  Rng probe(29);
  for (int i = 0; i < 30; ++i) {
    std::vector<double> x{probe.next_uniform(), probe.next_uniform(), probe.next_uniform()};
    const GroupId g = group_from_int(static_cast<int>(probe.next_u64() % 2));
    CHECK(model.decision_value(x, g) == back.decision_value(x, g));
    CHECK(model.score(x, g) == back.score(x, g));
  }
}

TEST_CASE("scoring is deterministic") {
  Rng rng(31);
  const Cohort cohort = tiny_labeled_cohort(rng, 30);
  const TrainedScorer model = train_svm(cohort, LabelSource::true_y, TrainConfig{});
  const std::vector<double> x{0.3, 0.7, 0.2};
  CHECK(model.decision_value(x, GroupId::g0) == model.decision_value(x, GroupId::g0));
}

TEST_CASE("a small LRU kernel cache reproduces the full-cache model") {
  Rng rng(37);
  const Cohort cohort = tiny_labeled_cohort(rng, 60);
  TrainConfig full;
  TrainConfig small;
  small.kernel_cache_rows = 1;  // floored to the two resident working rows
  const TrainedScorer a = train_svm(cohort, LabelSource::true_y, full);
  const TrainedScorer b = train_svm(cohort, LabelSource::true_y, small);
  REQUIRE(a.sv_alpha_y.size() == b.sv_alpha_y.size());
  for (std::size_t i = 0; i < a.sv_alpha_y.size(); ++i)
    CHECK(a.sv_alpha_y[i] == b.sv_alpha_y[i]);
  CHECK(a.bias == b.bias);
}
