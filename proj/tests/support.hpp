#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>

#include "abcgan/neuralcore/matrix.hpp"
#include "abcgan/random.hpp"

namespace abcgan::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "abcgan") {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(stamp) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = scale * standard_normal(rng);
  return m;
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;  // unbiased
};

inline Moments moments(std::span<const double> v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, ss / static_cast<double>(v.size() - 1)};
}

/// Sample mean and variance of n normal draws sit within `k` standard
/// errors of (mu, sigma2); the variance band uses sigma2 * sqrt(2 / (n - 1)).
inline bool normal_moments_ok(const Moments& m, std::size_t n, double mu, double sigma2, double k = 3.0) {
  const double se_mean = std::sqrt(sigma2 / static_cast<double>(n));
  const double se_var = sigma2 * std::sqrt(2.0 / static_cast<double>(n - 1));
  return std::abs(m.mean - mu) <= k * se_mean && std::abs(m.var - sigma2) <= k * se_var;
}

/// |a - b| within max(rel * max(|a|,|b|), abs).
inline bool close_rel(double a, double b, double rel, double abs) {
  const double diff = std::abs(a - b);
  return diff <= abs || diff <= rel * std::max(std::abs(a), std::abs(b));
}

}  // namespace abcgan::testing
