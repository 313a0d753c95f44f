#include "censorlab/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace censorlab {

long ceil_bin(double x) {
  const double v = 5.0 * x;
  const double nudge = 1e-12 * std::max(1.0, std::fabs(v));
  return static_cast<long>(std::ceil(v - nudge));
}

double staircase_score(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("staircase_score: zero-dimension input");
  long sum = 0;
  for (double xi : x) sum += ceil_bin(xi);
  return static_cast<double>(sum) / 5.0;
}

RotationSpec RotationSpec::uniform_center(double phi_degrees, int d_rot, int d,
                                          double center_value) {
  RotationSpec spec;
  spec.phi_degrees = phi_degrees;
  spec.d_rot = d_rot;
  spec.center.assign(static_cast<std::size_t>(d), center_value);
  return spec;
}

std::vector<double> rotate(std::span<const double> x, const RotationSpec& spec) {
  if (spec.d_rot % 2 != 0) throw std::invalid_argument("rotate: d_rot must be even");
  if (static_cast<int>(x.size()) < spec.d_rot)
    throw std::invalid_argument("rotate: input dimension smaller than d_rot");

  std::vector<double> out(x.begin(), x.end());
  if (spec.d_rot == 0 || spec.phi_degrees == 0.0) return out;

  const double phi = spec.phi_degrees * M_PI / 180.0;
  const double cos_phi = std::cos(phi);
  const double sin_phi = std::sin(phi);
  auto center_at = [&](std::size_t i) {
    return spec.center.empty() ? 0.4 : spec.center.at(i);
  };
  for (int k = 0; k + 1 < spec.d_rot; k += 2) {
    const double u = x[k] - center_at(k);
    const double v = x[k + 1] - center_at(k + 1);
    // R(-phi) = [[cos, sin], [-sin, cos]]
    out[k] = cos_phi * u + sin_phi * v + center_at(k);
    out[k + 1] = -sin_phi * u + cos_phi * v + center_at(k + 1);
  }
  return out;
}

std::vector<double> sample_covariates(Rng& rng, GroupId group, const SimulationConfig& cfg) {
  const double mu = group_mean(cfg, group);
  const double sigma = std::sqrt(cfg.sigma2);
  std::vector<double> x(static_cast<std::size_t>(cfg.d));
  for (auto& xi : x) {
    xi = std::clamp(mu + sigma * rng.next_gaussian(), 0.0, 1.0);
  }
  return x;
}

Cohort generate_cohort(const SimulationConfig& cfg, long n, Rng& rng) {
  cfg.validate();
  if (n < 2) throw std::invalid_argument("generate_cohort: n must be >= 2");

  const long n_group0 = n - n / 2;  // odd n: extra patient to group 0
  const bool rotated = cfg.d_rot > 0 && cfg.phi != 0.0;
  const RotationSpec spec = RotationSpec::uniform_center(cfg.phi, cfg.d_rot, cfg.d);

  Cohort cohort;
  cohort.dimension = cfg.d;
  cohort.patients.resize(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    Rng stream = rng.child(static_cast<std::uint64_t>(i));
    Patient& p = cohort.patients[static_cast<std::size_t>(i)];
    p.group = i < n_group0 ? GroupId::g0 : GroupId::g1;
    p.covariates = sample_covariates(stream, p.group, cfg);
    const double floor_draw = stream.next_uniform();

    const double test_score = staircase_score(p.covariates);
    const double label_score = (rotated && p.group == GroupId::g1)
                                   ? staircase_score(rotate(p.covariates, spec))
                                   : test_score;
    const double tau = p.group == GroupId::g0 ? cfg.tau0 : cfg.tau1;

    p.score = label_score;
    p.y = label_score > cfg.b + kScoreCmpEps;
    p.tested = test_score > tau + kScoreCmpEps || floor_draw < cfg.c;
    p.y_obs = p.y && p.tested;
  }
  return cohort;
}

double missed_positive_rate(const Cohort& cohort, std::optional<GroupId> group) {
  long positives = 0;
  long missed = 0;
  for (const auto& p : cohort.patients) {
    if (group && p.group != *group) continue;
    if (!p.y) continue;
    ++positives;
    missed += !p.y_obs;
  }
  if (positives == 0)
    throw std::domain_error("missed_positive_rate: no true positives in slice");
  return static_cast<double>(missed) / static_cast<double>(positives);
}

double testing_rate(const Cohort& cohort, GroupId group) {
  long members = 0;
  long tested = 0;
  for (const auto& p : cohort.patients) {
    if (p.group != group) continue;
    ++members;
    tested += p.tested;
  }
  if (members == 0) throw std::domain_error("testing_rate: empty group");
  return static_cast<double>(tested) / static_cast<double>(members);
}

double censorship_rate(const Cohort& cohort, GroupId group) {
  return 1.0 - testing_rate(cohort, group);
}

}  // namespace censorlab
