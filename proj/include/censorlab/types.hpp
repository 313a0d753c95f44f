#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace censorlab {

// Exactly two patient subgroups.
enum class GroupId : std::uint8_t { g0 = 0, g1 = 1 };

inline int group_index(GroupId g) { return static_cast<int>(g); }
inline GroupId other_group(GroupId g) { return g == GroupId::g0 ? GroupId::g1 : GroupId::g0; }
GroupId group_from_int(int v);

struct Patient {
  GroupId group = GroupId::g0;
  std::vector<double> covariates;  // each in [0,1]
  bool y = false;                  // true condition label
  bool tested = false;             // t
  bool y_obs = false;              // ỹ = y ∧ t
  double score = 0.0;              // ground-truth risk score s_a(x)
};

struct Cohort {
  int dimension = 0;
  std::vector<Patient> patients;

  std::size_t size() const { return patients.size(); }
  std::size_t count(GroupId g) const;
};

// Full parameterization of the data-generating process.
struct SimulationConfig {
  double mu0 = 0.45;
  double mu1 = 0.45;
  double sigma2 = 0.1;
  double tau0 = 5.0;
  double tau1 = 5.0;
  double c = 0.05;    // floor testing probability
  double b = 5.0;     // decision threshold
  double phi = 0.0;   // rotation angle, degrees
  int d_rot = 0;      // even number of rotated dimensions
  int d = 10;
  long n_train = 2000;
  long n_test = 20000;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;

  std::string to_json() const;
  static SimulationConfig from_json(const std::string& text);
};

double group_mean(const SimulationConfig& cfg, GroupId g);

}  // namespace censorlab
