#pragma once

#include <filesystem>
#include <string>

#include "censorlab/types.hpp"

namespace censorlab {

// Shortest decimal string that round-trips to the same double.
std::string format_double(double v);

// Header: group,y,t,y_obs,score,x1..xd
void write_cohort_csv(const std::filesystem::path& path, const Cohort& cohort);
Cohort read_cohort_csv(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

// FNV-1a 64-bit, hex encoded; used for manifest spec hashes.
std::string fnv1a_hex(const std::string& text);

}  // namespace censorlab
