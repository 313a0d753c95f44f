#include "censorlab/svm.hpp"

#include <algorithm>
#include <cmath>
#include <list>
#include <numeric>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace censorlab {

namespace {

// Squared distance between one-hot rows is twice the number of differing
// bins, plus one when the appended group bits differ. Kernel values come
// from a lookup table over that small integer range.
struct BinKernel {
  const std::vector<std::vector<std::uint8_t>>* bins;
  const std::vector<std::uint8_t>* groups;
  bool include_group;
  std::vector<double> table;  // table[k] = exp(-gamma * k)

  BinKernel(const std::vector<std::vector<std::uint8_t>>& b,
            const std::vector<std::uint8_t>& g, bool with_group, double gamma, int d)
      : bins(&b), groups(&g), include_group(with_group) {
    table.resize(static_cast<std::size_t>(2 * d + 2));
    for (std::size_t k = 0; k < table.size(); ++k)
      table[k] = std::exp(-gamma * static_cast<double>(k));
  }

  double between(const std::uint8_t* a, std::uint8_t ga, const std::uint8_t* b,
                 std::uint8_t gb, std::size_t d) const {
    int mismatches = 0;
    for (std::size_t k = 0; k < d; ++k) mismatches += (a[k] != b[k]);
    int dist2 = 2 * mismatches;
    if (include_group) dist2 += (ga != gb);
    return table[static_cast<std::size_t>(dist2)];
  }

  double at(std::size_t i, std::size_t j) const {
    const auto& bi = (*bins)[i];
    const auto& bj = (*bins)[j];
    return between(bi.data(), (*groups)[i], bj.data(), (*groups)[j], bi.size());
  }
};

class KernelCache {
 public:
  // Both working-set rows must stay resident while an update runs, so the
  // capacity floor is two rows.
  KernelCache(const BinKernel& kernel, std::size_t n, std::size_t max_rows)
      : kernel_(kernel),
        n_(n),
        capacity_(max_rows == 0 ? n : std::max<std::size_t>(2, max_rows)) {}

  const double* row(std::size_t i) {
    auto it = index_.find(i);
    if (it != index_.end()) {
      rows_.splice(rows_.begin(), rows_, it->second);
      return it->second->second.data();
    }
    std::vector<double> values(n_);
    for (std::size_t j = 0; j < n_; ++j) values[j] = kernel_.at(i, j);
    rows_.emplace_front(i, std::move(values));
    index_[i] = rows_.begin();
    if (rows_.size() > capacity_) {
      index_.erase(rows_.back().first);
      rows_.pop_back();
    }
    return rows_.front().second.data();
  }

 private:
  const BinKernel& kernel_;
  std::size_t n_;
  std::size_t capacity_;
  std::list<std::pair<std::size_t, std::vector<double>>> rows_;
  std::unordered_map<std::size_t, decltype(rows_)::iterator> index_;
};

double dual_objective(const std::vector<double>& alpha, const std::vector<int>& y,
                      const BinKernel& kernel) {
  const std::size_t n = alpha.size();
  double linear = 0.0;
  double quad = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (alpha[i] == 0.0) continue;
    linear += alpha[i];
    for (std::size_t j = 0; j < n; ++j) {
      if (alpha[j] == 0.0) continue;
      quad += alpha[i] * alpha[j] * y[i] * y[j] * kernel.at(i, j);
    }
  }
  return linear - 0.5 * quad;
}

double stable_log1pexp(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

}  // namespace

PlattObjective platt_objective(std::span<const double> decision_values,
                               const std::vector<bool>& labels, double a, double b) {
  std::size_t n_pos = 0;
  for (bool l : labels) n_pos += l;
  const std::size_t n_neg = labels.size() - n_pos;
  const double hi = (static_cast<double>(n_pos) + 1.0) / (static_cast<double>(n_pos) + 2.0);
  const double lo = 1.0 / (static_cast<double>(n_neg) + 2.0);

  PlattObjective out{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double t = labels[i] ? hi : lo;
    const double z = a * decision_values[i] + b;
    // p = 1/(1+exp(z)); NLL_i = log(1+e^z) - (1-t) z
    out.value += stable_log1pexp(z) - (1.0 - t) * z;
    const double p = 1.0 / (1.0 + std::exp(z));
    const double dz = t - p;
    out.grad_a += dz * decision_values[i];
    out.grad_b += dz;
  }
  return out;
}

PlattParams fit_platt(std::span<const double> decision_values,
                      const std::vector<bool>& labels) {
  std::size_t n_pos = 0;
  for (bool l : labels) n_pos += l;
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw std::domain_error("fit_platt: both classes must be present");

  double a = 0.0;
  double b = std::log((static_cast<double>(n_neg) + 1.0) /
                      (static_cast<double>(n_pos) + 1.0));
  constexpr int kMaxNewton = 100;
  constexpr double kGradTol = 1e-10;
  constexpr double kRidge = 1e-12;

  PlattObjective cur = platt_objective(decision_values, labels, a, b);
  for (int iter = 0; iter < kMaxNewton; ++iter) {
    if (std::fabs(cur.grad_a) < kGradTol && std::fabs(cur.grad_b) < kGradTol) break;

    double h11 = kRidge, h12 = 0.0, h22 = kRidge;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const double z = a * decision_values[i] + b;
      const double p = 1.0 / (1.0 + std::exp(z));
      const double w = p * (1.0 - p);
      h11 += w * decision_values[i] * decision_values[i];
      h12 += w * decision_values[i];
      h22 += w;
    }
    const double det = h11 * h22 - h12 * h12;
    // Newton direction; gradient of NLL in z-form already carries the sign.
    const double da = -(h22 * cur.grad_a - h12 * cur.grad_b) / det;
    const double db = -(h11 * cur.grad_b - h12 * cur.grad_a) / det;

    double step = 1.0;
    PlattObjective next = cur;
    for (int ls = 0; ls < 40; ++ls) {
      next = platt_objective(decision_values, labels, a + step * da, b + step * db);
      if (next.value < cur.value + 1e-12) break;
      step *= 0.5;
    }
    a += step * da;
    b += step * db;
    cur = next;
  }
  return PlattParams{a, b};
}

TrainedScorer train_svm(const Cohort& cohort, LabelSource labels, const TrainConfig& config) {
  const std::size_t n = cohort.size();
  if (n < 2) throw std::invalid_argument("train_svm: need at least two patients");

  Encoder encoder{cohort.dimension};
  std::vector<std::vector<std::uint8_t>> bins(n);
  std::vector<std::uint8_t> groups(n);
  std::vector<int> y(n);
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Patient& p = cohort.patients[i];
    bins[i] = encoder.bins(p.covariates);
    groups[i] = static_cast<std::uint8_t>(group_index(p.group));
    const bool label = labels == LabelSource::true_y ? p.y : p.y_obs;
    y[i] = label ? 1 : -1;
    n_pos += label;
  }
  if (n_pos == 0 || n_pos == n)
    throw std::domain_error("train_svm: training labels contain a single class");

  double gamma = config.gamma;
  if (gamma <= 0.0) {
    std::vector<std::vector<double>> encoded(n);
    for (std::size_t i = 0; i < n; ++i) {
      encoded[i].assign(static_cast<std::size_t>(encoder.feature_count()), 0.0);
      for (std::size_t k = 0; k < bins[i].size(); ++k)
        encoded[i][k * Encoder::kBinsPerDim + bins[i][k]] = 1.0;
      if (config.include_group) encoded[i].push_back(groups[i]);
    }
    gamma = auto_gamma(encoded);
  }

  const BinKernel kernel(bins, groups, config.include_group, gamma, cohort.dimension);
  KernelCache cache(kernel, n, config.kernel_cache_rows);

  const double C = config.C;
  std::vector<double> alpha(n, 0.0);
  // F_i = sum_k alpha_k y_k K_ik - y_i; the bias cancels in F differences.
  std::vector<double> f(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = -y[i];

  TrainedScorer model;
  if (config.track_objective)
    model.objective_trace.push_back(dual_objective(alpha, y, kernel));

  constexpr double kBoxEps = 1e-12;
  double violation = 0.0;
  long iter = 0;
  while (true) {
    // Maximal violating pair; lowest index wins ties.
    std::size_t i_up = n, i_low = n;
    double f_up = 0.0, f_low = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const bool can_up = (y[t] > 0 && alpha[t] < C - kBoxEps) ||
                          (y[t] < 0 && alpha[t] > kBoxEps);
      const bool can_low = (y[t] < 0 && alpha[t] < C - kBoxEps) ||
                           (y[t] > 0 && alpha[t] > kBoxEps);
      if (can_up && (i_up == n || f[t] < f_up)) {
        f_up = f[t];
        i_up = t;
      }
      if (can_low && (i_low == n || f[t] > f_low)) {
        f_low = f[t];
        i_low = t;
      }
    }
    if (i_up == n || i_low == n) {
      violation = 0.0;
      break;
    }
    violation = f_low - f_up;
    if (violation <= config.tol) break;
    if (iter >= config.max_iter)
      throw SvmConvergenceError(
          "train_svm: SMO did not converge within max_iter; KKT violation " +
              std::to_string(violation),
          violation);
    ++iter;

    const std::size_t i = i_up, j = i_low;
    const double* row_i = cache.row(i);
    const double* row_j = cache.row(j);
    double eta = row_i[i] + row_j[j] - 2.0 * row_i[j];
    if (eta < 1e-12) eta = 1e-12;

    double lo_bound, hi_bound;
    if (y[i] != y[j]) {
      lo_bound = std::max(0.0, alpha[j] - alpha[i]);
      hi_bound = std::min(C, C + alpha[j] - alpha[i]);
    } else {
      lo_bound = std::max(0.0, alpha[i] + alpha[j] - C);
      hi_bound = std::min(C, alpha[i] + alpha[j]);
    }

    double alpha_j_new =
        std::clamp(alpha[j] + y[j] * (f[i] - f[j]) / eta, lo_bound, hi_bound);
    if (alpha_j_new < kBoxEps) alpha_j_new = 0.0;
    if (alpha_j_new > C - kBoxEps) alpha_j_new = C;
    double alpha_i_new = alpha[i] + y[i] * y[j] * (alpha[j] - alpha_j_new);
    if (alpha_i_new < kBoxEps) alpha_i_new = 0.0;
    if (alpha_i_new > C - kBoxEps) alpha_i_new = C;

    const double delta_i = (alpha_i_new - alpha[i]) * y[i];
    const double delta_j = (alpha_j_new - alpha[j]) * y[j];
    alpha[i] = alpha_i_new;
    alpha[j] = alpha_j_new;
    for (std::size_t t = 0; t < n; ++t) f[t] += delta_i * row_i[t] + delta_j * row_j[t];

    if (config.track_objective)
      model.objective_trace.push_back(dual_objective(alpha, y, kernel));
  }

  // Bias from free support vectors; midpoint of the violating interval when
  // every alpha sits on the box.
  double bias_sum = 0.0;
  std::size_t bias_count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] > kBoxEps && alpha[t] < C - kBoxEps) {
      bias_sum += -f[t];
      ++bias_count;
    }
  }
  double bias;
  if (bias_count > 0) {
    bias = bias_sum / static_cast<double>(bias_count);
  } else {
    double f_up = 0.0, f_low = 0.0;
    std::size_t i_up = n, i_low = n;
    for (std::size_t t = 0; t < n; ++t) {
      const bool can_up = (y[t] > 0 && alpha[t] < C - kBoxEps) ||
                          (y[t] < 0 && alpha[t] > kBoxEps);
      const bool can_low = (y[t] < 0 && alpha[t] < C - kBoxEps) ||
                           (y[t] > 0 && alpha[t] > kBoxEps);
      if (can_up && (i_up == n || f[t] < f_up)) f_up = f[t], i_up = t;
      if (can_low && (i_low == n || f[t] > f_low)) f_low = f[t], i_low = t;
    }
    bias = -0.5 * (f_up + f_low);
  }

  model.encoder = encoder;
  model.include_group = config.include_group;
  model.gamma = gamma;
  model.C = C;
  model.bias = bias;
  model.iterations = iter;
  model.final_kkt_violation = violation;
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] > 0.0) {
      model.sv_bins.push_back(bins[t]);
      model.sv_group.push_back(groups[t]);
      model.sv_alpha_y.push_back(alpha[t] * y[t]);
    }
  }

  if (config.platt) {
    std::vector<double> decisions(n);
    std::vector<bool> label_bits(n);
    for (std::size_t t = 0; t < n; ++t) {
      decisions[t] = f[t] + y[t] + bias;  // f(x_t) = F_t + y_t + b
      label_bits[t] = y[t] > 0;
    }
    model.platt = fit_platt(decisions, label_bits);
  }
  return model;
}

double TrainedScorer::decision_value(std::span<const double> x, GroupId group) const {
  const auto xb = encoder.bins(x);
  const std::uint8_t g = static_cast<std::uint8_t>(group_index(group));
  // Distance table mirrors training-time kernel values bit for bit.
  std::vector<double> table(static_cast<std::size_t>(2 * encoder.d + 2));
  for (std::size_t k = 0; k < table.size(); ++k)
    table[k] = std::exp(-gamma * static_cast<double>(k));

  double sum = 0.0;
  for (std::size_t s = 0; s < sv_bins.size(); ++s) {
    int mismatches = 0;
    const auto& sb = sv_bins[s];
    for (std::size_t k = 0; k < sb.size(); ++k) mismatches += (sb[k] != xb[k]);
    int dist2 = 2 * mismatches;
    if (include_group) dist2 += (sv_group[s] != g);
    sum += sv_alpha_y[s] * table[static_cast<std::size_t>(dist2)];
  }
  return sum + bias;
}

double TrainedScorer::score(std::span<const double> x, GroupId group) const {
  const double f = decision_value(x, group);
  if (!platt) return f;
  return 1.0 / (1.0 + std::exp(platt->a * f + platt->b));
}

std::string TrainedScorer::to_json() const {
  nlohmann::json j;
  j["d"] = encoder.d;
  j["include_group"] = include_group;
  j["gamma"] = gamma;
  j["C"] = C;
  j["bias"] = bias;
  j["sv_bins"] = sv_bins;
  j["sv_group"] = sv_group;
  j["sv_alpha_y"] = sv_alpha_y;
  if (platt) {
    j["platt_a"] = platt->a;
    j["platt_b"] = platt->b;
  }
  return j.dump(2);
}

TrainedScorer TrainedScorer::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  TrainedScorer m;
  m.encoder = Encoder{j.at("d").get<int>()};
  m.include_group = j.at("include_group").get<bool>();
  m.gamma = j.at("gamma").get<double>();
  m.C = j.at("C").get<double>();
  m.bias = j.at("bias").get<double>();
  m.sv_bins = j.at("sv_bins").get<std::vector<std::vector<std::uint8_t>>>();
  m.sv_group = j.at("sv_group").get<std::vector<std::uint8_t>>();
  m.sv_alpha_y = j.at("sv_alpha_y").get<std::vector<double>>();
  if (j.contains("platt_a"))
    m.platt = PlattParams{j.at("platt_a").get<double>(), j.at("platt_b").get<double>()};
  return m;
}

}  // namespace censorlab
