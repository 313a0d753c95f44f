#include "censorlab/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace censorlab {

std::string format_double(double v) {
  char buf[40];
  for (int precision : {15, 16, 17}) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

void write_cohort_csv(const std::filesystem::path& path, const Cohort& cohort) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << "group,y,t,y_obs,score";
  for (int i = 1; i <= cohort.dimension; ++i) out << ",x" << i;
  out << "\n";
  for (const auto& p : cohort.patients) {
    out << group_index(p.group) << ',' << int(p.y) << ',' << int(p.tested) << ','
        << int(p.y_obs) << ',' << format_double(p.score);
    for (double x : p.covariates) out << ',' << format_double(x);
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
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

int parse_binary(const std::string& s, const std::string& what, long row) {
  if (s == "0") return 0;
  if (s == "1") return 1;
  throw std::runtime_error("row " + std::to_string(row) + ": " + what +
                           " must be 0 or 1, got '" + s + "'");
}
}  // namespace

Cohort read_cohort_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty cohort file: " + path.string());
  const auto header = split_csv_line(line);
  const std::vector<std::string> expected{"group", "y", "t", "y_obs", "score"};
  if (header.size() < expected.size() + 1)
    throw std::runtime_error("cohort header too short: " + path.string());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (header[i] != expected[i])
      throw std::runtime_error("cohort header column " + std::to_string(i + 1) +
                               " must be '" + expected[i] + "', got '" + header[i] + "'");
  }
  const int d = static_cast<int>(header.size() - expected.size());

  Cohort cohort;
  cohort.dimension = d;
  long row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw std::runtime_error("row " + std::to_string(row) + ": expected " +
                               std::to_string(header.size()) + " fields, got " +
                               std::to_string(fields.size()));
    Patient p;
    p.group = group_from_int(parse_binary(fields[0], "group", row));
    p.y = parse_binary(fields[1], "y", row);
    p.tested = parse_binary(fields[2], "t", row);
    p.y_obs = parse_binary(fields[3], "y_obs", row);
    p.score = std::strtod(fields[4].c_str(), nullptr);
    p.covariates.reserve(d);
    for (int i = 0; i < d; ++i)
      p.covariates.push_back(std::strtod(fields[5 + i].c_str(), nullptr));
    cohort.patients.push_back(std::move(p));
  }
  return cohort;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace censorlab
