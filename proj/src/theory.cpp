#include "censorlab/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace censorlab {

namespace {
double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }
constexpr double kMonotoneSlack = 1e-12;
}  // namespace

double undertesting_level(const RiskProfile& profile) {
  const auto& grid = profile.risk_grid;
  if (grid.size() < 2)
    throw std::invalid_argument("undertesting_level: grid needs at least two points");
  if (profile.p_test_0.size() != grid.size() || profile.p_test_1.size() != grid.size())
    throw std::invalid_argument("undertesting_level: curves misaligned with grid");
  if (!std::is_sorted(grid.begin(), grid.end()))
    throw std::invalid_argument("undertesting_level: grid must be sorted");

  double total = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double lo = std::max(0.0, profile.p_test_0[i] - profile.p_test_1[i]);
    const double hi = std::max(0.0, profile.p_test_0[i + 1] - profile.p_test_1[i + 1]);
    total += 0.5 * (lo + hi) * (grid[i + 1] - grid[i]);
  }
  return total;
}

RiskProfile threshold_profile(double tau0, double tau1, double c,
                              std::span<const double> grid) {
  RiskProfile p;
  p.risk_grid.assign(grid.begin(), grid.end());
  p.p_test_0.reserve(grid.size());
  p.p_test_1.reserve(grid.size());
  for (double r : grid) {
    p.p_test_0.push_back(r > tau0 ? 1.0 : c);
    p.p_test_1.push_back(r > tau1 ? 1.0 : c);
  }
  return p;
}

double threshold_undertesting(double tau0, double tau1, double c) {
  if (!(c > 0.0 && c <= 1.0))
    throw std::invalid_argument("threshold_undertesting: c must lie in (0,1]");
  return std::max(0.0, (1.0 - c) * (tau1 - tau0));
}

void GaussianMarginals::validate() const {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("GaussianMarginals: sigma2 must be > 0");
  if (!(p_a > 0.0 && p_a < 1.0))
    throw std::invalid_argument("GaussianMarginals: p_a must lie in (0,1)");
  if (!(c > 0.0 && c <= 1.0))
    throw std::invalid_argument("GaussianMarginals: c must lie in (0,1]");
}

double flip_sigmoid_argument(double z, const GaussianMarginals& g) {
  g.validate();
  return std::log(g.p_a / ((1.0 - g.p_a) * (1.0 - g.c))) +
         (2.0 * z - g.mu0 - g.mu1) * (g.mu0 - g.mu1) / (2.0 * g.sigma2);
}

double flip_probability(double z, const GaussianMarginals& g, double tau0, double tau1) {
  g.validate();
  if (tau1 > tau0)
    throw std::invalid_argument("flip_probability: requires tau1 <= tau0");
  if (z < tau1) return 1.0 - g.c;
  if (z >= tau0) return 0.0;
  return std::min(1.0 - g.c, sigmoid(flip_sigmoid_argument(z, g)));
}

double tau1_bound(const GaussianMarginals& g) {
  g.validate();
  if (g.mu0 == g.mu1)
    throw std::invalid_argument("tau1_bound: requires mu0 != mu1");
  const double k =
      (1.0 - g.c) * (1.0 - g.c) * (1.0 - g.p_a) / (g.c * g.p_a);
  return 0.5 * (g.mu0 + g.mu1) + g.sigma2 * std::log(k) / (g.mu0 - g.mu1);
}

NoiseModel theorem_noise_model(const GaussianMarginals& g, double b, double tau0,
                               double tau1) {
  if (tau1 > tau0)
    throw std::invalid_argument("theorem_noise_model: requires tau1 <= tau0");
  NoiseModel m;
  m.f0 = [](double) { return 0.0; };
  m.f1 = [g, tau0, tau1](double z) { return flip_probability(z, g, tau0, tau1); };
  m.scorer = [](double z) { return z; };
  m.eta = [b](double z) { return z > b ? 1.0 : 0.0; };
  return m;
}

std::string bcn_condition_name(BcnCondition c) {
  switch (c) {
    case BcnCondition::feasible_ranking: return "feasible-ranking";
    case BcnCondition::piecewise_monotonicity: return "piecewise-monotonicity";
    case BcnCondition::flip_monotonicity: return "flip-probability-monotonicity";
    case BcnCondition::noise_mass: return "noise-mass";
  }
  return "unknown";
}

BcnVerdict check_bcn_admissible(const NoiseModel& model, std::span<const double> grid) {
  if (grid.empty())
    throw std::invalid_argument("check_bcn_admissible: empty grid");

  const std::size_t n = grid.size();
  std::vector<double> s(n), eta(n), f0(n), f1(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = model.scorer(grid[i]);
    eta[i] = model.eta(grid[i]);
    f0[i] = model.f0(s[i]);
    f1[i] = model.f1(s[i]);
  }

  auto violation = [&](BcnCondition cond, double where) {
    BcnVerdict v;
    v.admissible = false;
    v.violated = cond;
    v.location = where;
    return v;
  };

  // (i) Feasible ranking: eta(x) < eta(x') implies s(x) < s(x'). Scan eta
  // levels in ascending order; every lower level's max score must sit
  // strictly below every higher level's min score.
  {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return eta[a] < eta[b];
    });
    double prev_level_max_s = -std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      double level_min_s = s[order[i]];
      double level_max_s = s[order[i]];
      double min_holder = grid[order[i]];
      while (j + 1 < n && eta[order[j + 1]] == eta[order[i]]) {
        ++j;
        if (s[order[j]] < level_min_s) {
          level_min_s = s[order[j]];
          min_holder = grid[order[j]];
        }
        level_max_s = std::max(level_max_s, s[order[j]]);
      }
      if (level_min_s <= prev_level_max_s)
        return violation(BcnCondition::feasible_ranking, min_holder);
      prev_level_max_s = level_max_s;
      i = j + 1;
    }
  }

  // Remaining conditions scan in score order.
  std::vector<std::size_t> by_score(n);
  std::iota(by_score.begin(), by_score.end(), std::size_t{0});
  std::sort(by_score.begin(), by_score.end(),
            [&](std::size_t a, std::size_t b) { return s[a] < s[b]; });

  // (ii) f0 and f1 non-decreasing where eta <= 1/2, non-increasing where
  // eta > 1/2 (checked on consecutive points within one regime).
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const std::size_t a = by_score[k];
    const std::size_t b = by_score[k + 1];
    const bool low_a = eta[a] <= 0.5;
    const bool low_b = eta[b] <= 0.5;
    if (low_a != low_b) continue;
    for (const auto* f : {&f0, &f1}) {
      const double step = (*f)[b] - (*f)[a];
      if (low_a ? step < -kMonotoneSlack : step > kMonotoneSlack)
        return violation(BcnCondition::piecewise_monotonicity, grid[b]);
    }
  }

  // (iii) f1 - f0 non-increasing in z, globally.
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const std::size_t a = by_score[k];
    const std::size_t b = by_score[k + 1];
    if ((f1[b] - f0[b]) - (f1[a] - f0[a]) > kMonotoneSlack)
      return violation(BcnCondition::flip_monotonicity, grid[b]);
  }

  // (iv) f0 + f1 < 1 everywhere.
  for (std::size_t i = 0; i < n; ++i) {
    if (!(f0[i] + f1[i] < 1.0))
      return violation(BcnCondition::noise_mass, grid[i]);
  }

  return BcnVerdict{};
}

std::string BcnVerdict::to_json() const {
  nlohmann::json j;
  j["admissible"] = admissible;
  if (!admissible) {
    j["violated_condition"] = bcn_condition_name(violated);
    j["location"] = location;
  }
  return j.dump(2);
}

namespace {
double norm(std::span<const double> v) {
  double ss = 0.0;
  for (double x : v) ss += x * x;
  return std::sqrt(ss);
}
double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}
}  // namespace

ParallelVerdict check_parallel_boundaries(const LinearBoundaries& lb, double tol) {
  const double theta_norm = norm(lb.censor_theta);
  if (theta_norm == 0.0)
    throw std::invalid_argument("check_parallel_boundaries: censor theta must be nonzero");

  ParallelVerdict verdict;
  verdict.parallel = true;
  const std::vector<double>* thetas[2] = {&lb.theta0, &lb.theta1};
  double* deltas[2] = {&verdict.delta0, &verdict.delta1};
  for (int a = 0; a < 2; ++a) {
    const auto& ta = *thetas[a];
    if (ta.size() != lb.censor_theta.size())
      throw std::invalid_argument("check_parallel_boundaries: dimension mismatch");
    const double ta_norm = norm(ta);
    if (ta_norm == 0.0) {
      verdict.parallel = false;
      verdict.offending_group = a;
      return verdict;
    }
    const double proj = dot(ta, lb.censor_theta) / theta_norm;  // theta_a . theta_hat
    double residual_sq = 0.0;
    for (std::size_t i = 0; i < ta.size(); ++i) {
      const double r = ta[i] - proj * lb.censor_theta[i] / theta_norm;
      residual_sq += r * r;
    }
    const double residual = std::sqrt(residual_sq) / ta_norm;
    if (residual > tol || proj <= 0.0) {
      verdict.parallel = false;
      verdict.offending_group = a;
      return verdict;
    }
    *deltas[a] = proj / theta_norm;  // theta_a = delta * theta
  }
  return verdict;
}

std::string ParallelVerdict::to_json() const {
  nlohmann::json j;
  j["parallel"] = parallel;
  if (parallel) {
    j["delta0"] = delta0;
    j["delta1"] = delta1;
  } else {
    j["offending_group"] = offending_group;
  }
  return j.dump(2);
}

double marginal_kl(std::span<const double> mu0, std::span<const double> mu1,
                   double sigma2) {
  if (mu0.size() != mu1.size())
    throw std::invalid_argument("marginal_kl: dimension mismatch");
  if (!(sigma2 > 0.0)) throw std::invalid_argument("marginal_kl: sigma2 must be > 0");
  double ss = 0.0;
  for (std::size_t i = 0; i < mu0.size(); ++i) {
    const double d = mu1[i] - mu0[i];
    ss += d * d;
  }
  return ss / (2.0 * sigma2);
}

}  // namespace censorlab
