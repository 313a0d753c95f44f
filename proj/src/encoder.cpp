#include "censorlab/encoder.hpp"

#include <stdexcept>
#include <string>

#include "censorlab/synthgen.hpp"

namespace censorlab {

std::vector<std::uint8_t> Encoder::bins(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != d)
    throw std::invalid_argument("Encoder: expected dimension " + std::to_string(d) +
                                ", got " + std::to_string(x.size()));
  std::vector<std::uint8_t> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= 0.0 && x[i] <= 1.0))
      throw std::invalid_argument("Encoder: component " + std::to_string(i) +
                                  " outside [0,1]: " + std::to_string(x[i]));
    const long bin = ceil_bin(x[i]);
    out[i] = static_cast<std::uint8_t>(bin);
  }
  return out;
}

std::vector<double> Encoder::encode(std::span<const double> x) const {
  const auto b = bins(x);
  std::vector<double> out(static_cast<std::size_t>(feature_count()), 0.0);
  for (std::size_t i = 0; i < b.size(); ++i) {
    out[i * kBinsPerDim + b[i]] = 1.0;
  }
  return out;
}

double auto_gamma(const std::vector<std::vector<double>>& matrix) {
  if (matrix.empty() || matrix.front().empty())
    throw std::invalid_argument("auto_gamma: empty matrix");
  const std::size_t cols = matrix.front().size();
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& row : matrix) {
    if (row.size() != cols) throw std::invalid_argument("auto_gamma: ragged matrix");
    for (double v : row) sum += v;
    count += row.size();
  }
  const double mean = sum / static_cast<double>(count);
  double ss = 0.0;
  for (const auto& row : matrix) {
    for (double v : row) {
      const double dv = v - mean;
      ss += dv * dv;
    }
  }
  const double var = ss / static_cast<double>(count);
  if (var <= 0.0) throw std::domain_error("auto_gamma: zero variance feature matrix");
  return 1.0 / (static_cast<double>(cols) * var);
}

}  // namespace censorlab
