#pragma once

// Shared generators and small helpers for the unit tests.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "latefuse/matrix.hpp"
#include "latefuse/random.hpp"

namespace testsupport {

using latefuse::Matrix;

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = u(rng);
  return m;
}

inline Matrix gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = g(rng);
  return m;
}

inline std::vector<int> random_labels(std::size_t n, int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> d(0, k - 1);
  std::vector<int> y(n);
  for (int& v : y) v = d(rng);
  return y;
}

/// Balanced labels 0,1,..,k-1,0,1,...
inline std::vector<int> cyclic_labels(std::size_t n, int k) {
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i % static_cast<std::size_t>(k));
  return y;
}

/// Rows whose first `informative` columns are shifted by `shift * class`.
inline Matrix planted_signal(std::span<const int> y, std::size_t cols, std::size_t informative, double shift,
                             std::uint64_t seed) {
  Matrix m = gaussian_matrix(y.size(), cols, seed);
  for (std::size_t i = 0; i < y.size(); ++i)
    for (std::size_t f = 0; f < informative; ++f) m(i, f) += shift * y[i];
  return m;
}

inline std::vector<std::string> names(const std::string& prefix, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("latefuse_test_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace testsupport
