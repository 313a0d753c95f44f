#include "censorlab/types.hpp"

#include <stdexcept>

#include <nlohmann/json.hpp>

namespace censorlab {

GroupId group_from_int(int v) {
  if (v == 0) return GroupId::g0;
  if (v == 1) return GroupId::g1;
  throw std::invalid_argument("group must be 0 or 1, got " + std::to_string(v));
}

std::size_t Cohort::count(GroupId g) const {
  std::size_t n = 0;
  for (const auto& p : patients) n += (p.group == g);
  return n;
}

void SimulationConfig::validate() const {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be > 0");
  if (!(c > 0.0 && c <= 1.0)) throw std::invalid_argument("c must lie in (0,1]");
  if (d < 1) throw std::invalid_argument("d must be >= 1");
  if (d_rot < 0 || d_rot > d) throw std::invalid_argument("d_rot must lie in [0,d]");
  if (d_rot % 2 != 0) throw std::invalid_argument("d_rot must be even");
  if (!(phi >= 0.0 && phi < 360.0)) throw std::invalid_argument("phi must lie in [0,360)");
  if (n_train < 2) throw std::invalid_argument("n_train must be >= 2");
  if (n_test < 2) throw std::invalid_argument("n_test must be >= 2");
}

double group_mean(const SimulationConfig& cfg, GroupId g) {
  return g == GroupId::g0 ? cfg.mu0 : cfg.mu1;
}

std::string SimulationConfig::to_json() const {
  nlohmann::json j{{"mu0", mu0},       {"mu1", mu1},         {"sigma2", sigma2},
                   {"tau0", tau0},     {"tau1", tau1},       {"c", c},
                   {"b", b},           {"phi", phi},         {"d_rot", d_rot},
                   {"d", d},           {"n_train", n_train}, {"n_test", n_test},
                   {"seed", seed}};
  return j.dump(2);
}

SimulationConfig SimulationConfig::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  SimulationConfig cfg;
  cfg.mu0 = j.at("mu0").get<double>();
  cfg.mu1 = j.at("mu1").get<double>();
  cfg.sigma2 = j.at("sigma2").get<double>();
  cfg.tau0 = j.at("tau0").get<double>();
  cfg.tau1 = j.at("tau1").get<double>();
  cfg.c = j.at("c").get<double>();
  if (j.contains("b")) cfg.b = j.at("b").get<double>();
  if (j.contains("phi")) cfg.phi = j.at("phi").get<double>();
  if (j.contains("d_rot")) cfg.d_rot = j.at("d_rot").get<int>();
  if (j.contains("d")) cfg.d = j.at("d").get<int>();
  if (j.contains("n_train")) cfg.n_train = j.at("n_train").get<long>();
  if (j.contains("n_test")) cfg.n_test = j.at("n_test").get<long>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.validate();
  return cfg;
}

}  // namespace censorlab
