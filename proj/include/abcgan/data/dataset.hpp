#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "abcgan/error.hpp"
#include "abcgan/log.hpp"
#include "abcgan/neuralcore/matrix.hpp"
#include "abcgan/random.hpp"

namespace abcgan {

/// Feature matrix, response vector and where they came from.
struct Dataset {
  std::string name;
  Matrix X;
  Vector y;
  std::vector<std::string> feature_names;
  std::string target_name = "y";

  [[nodiscard]] std::size_t rows() const { return X.rows(); }
  [[nodiscard]] std::size_t features() const { return X.cols(); }

  void validate() const {
    if (X.rows() != y.size()) {
      throw DataError(name + ": " + std::to_string(X.rows()) + " feature rows but " + std::to_string(y.size()) +
                      " targets");
    }
    if (!X.all_finite() || !std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); })) {
      throw DataError(name + ": missing or non-finite values");
    }
  }

  [[nodiscard]] Dataset select_rows(std::span<const std::size_t> idx) const {
    Dataset out{name, X.select_rows(idx), Vector(idx.size()), feature_names, target_name};
    for (std::size_t i = 0; i < idx.size(); ++i) out.y[i] = y[idx[i]];
    return out;
  }
};

// ---------------------------------------------------------------------------
// Friedman #3

struct Friedman3Bounds {
  static constexpr double z1_lo = 0.0, z1_hi = 100.0;
  static constexpr double z2_lo = 40.0 * std::numbers::pi, z2_hi = 560.0 * std::numbers::pi;
  static constexpr double z3_lo = 0.0, z3_hi = 1.0;
  static constexpr double z4_lo = 1.0, z4_hi = 11.0;
};

/// arctan((z2 z3 - 1 / (z2 z4)) / z1)
inline double friedman3_target(double z1, double z2, double z3, double z4) {
  return std::atan((z2 * z3 - 1.0 / (z2 * z4)) / z1);
}

inline Dataset gen_friedman3(std::size_t n, Rng& rng, double noise_std = 1.0) {
  if (n < 1) throw DataError("gen_friedman3: n must be at least 1");
  using B = Friedman3Bounds;
  std::uniform_real_distribution<double> u1(B::z1_lo, B::z1_hi);
  std::uniform_real_distribution<double> u2(B::z2_lo, B::z2_hi);
  std::uniform_real_distribution<double> u3(B::z3_lo, B::z3_hi);
  std::uniform_real_distribution<double> u4(B::z4_lo, B::z4_hi);
  Dataset ds{"friedman3", Matrix(n, 4), Vector(n), {"z1", "z2", "z3", "z4"}, "y"};
  for (std::size_t i = 0; i < n; ++i) {
    const double z1 = u1(rng), z2 = u2(rng), z3 = u3(rng), z4 = u4(rng);
    ds.X(i, 0) = z1;
    ds.X(i, 1) = z2;
    ds.X(i, 2) = z3;
    ds.X(i, 3) = z4;
    ds.y[i] = friedman3_target(z1, z2, z3, z4) + (noise_std == 0.0 ? 0.0 : noise_std * standard_normal(rng));
  }
  return ds;
}

/// y = intercept + <x, coefficients> + noise_std * N(0,1), x ~ N(0,1)^p.
inline Dataset gen_linear(std::size_t n, Rng& rng, std::span<const double> coefficients, double intercept = 0.0,
                          double noise_std = 1.0) {
  if (n < 1) throw DataError("gen_linear: n must be at least 1");
  if (coefficients.empty()) throw DataError("gen_linear: need at least one coefficient");
  const std::size_t p = coefficients.size();
  Dataset ds{"linear", Matrix(n, p), Vector(n), {}, "y"};
  for (std::size_t j = 0; j < p; ++j) ds.feature_names.push_back("x" + std::to_string(j + 1));
  for (std::size_t i = 0; i < n; ++i) {
    double s = intercept;
    for (std::size_t j = 0; j < p; ++j) {
      ds.X(i, j) = standard_normal(rng);
      s += coefficients[j] * ds.X(i, j);
    }
    ds.y[i] = s + (noise_std == 0.0 ? 0.0 : noise_std * standard_normal(rng));
  }
  return ds;
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string_view cell = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) cell.remove_suffix(1);
    cells.emplace_back(cell);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

inline bool parse_double(std::string_view text, double& out) {
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(out);
}

/// Shortest text that parses back to exactly `v`.
inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace detail

/// Reads a header-first, comma-separated numeric file. `target_column` becomes
/// y; every column in `drop_columns` is discarded; the rest are features in
/// file order.
inline Dataset load_csv(const std::filesystem::path& path, const std::string& target_column,
                        const std::vector<std::string>& drop_columns = {}, std::string name = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("load_csv: cannot open '" + path.string() + "'");
  if (name.empty()) name = path.stem().string();

  std::string line;
  if (!std::getline(in, line)) throw DataError("load_csv: '" + path.string() + "' is empty (header row required)");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF && static_cast<unsigned char>(line[1]) == 0xBB &&
      static_cast<unsigned char>(line[2]) == 0xBF) {
    line.erase(0, 3);
  }
  const auto header = detail::split_csv_line(line);

  std::ptrdiff_t target_idx = -1;
  std::vector<bool> keep(header.size(), true);
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == target_column) {
      target_idx = static_cast<std::ptrdiff_t>(c);
      keep[c] = false;
    }
    if (std::find(drop_columns.begin(), drop_columns.end(), header[c]) != drop_columns.end()) keep[c] = false;
  }
  if (target_idx < 0) throw DataError("load_csv: '" + path.string() + "' has no target column '" + target_column + "'");
  for (const auto& d : drop_columns) {
    if (std::find(header.begin(), header.end(), d) == header.end()) {
      throw DataError("load_csv: '" + path.string() + "' has no column '" + d + "' to drop");
    }
  }

  Dataset ds;
  ds.name = std::move(name);
  ds.target_name = target_column;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (keep[c]) ds.feature_names.push_back(header[c]);
  const std::size_t p = ds.feature_names.size();

  Vector values;
  std::size_t row = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) {
      throw DataError("load_csv: " + path.string() + " line " + std::to_string(line_no) + " has " +
                      std::to_string(cells.size()) + " cells, header has " + std::to_string(header.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (!keep[c] && static_cast<std::ptrdiff_t>(c) != target_idx) continue;
      double v = 0.0;
      if (!detail::parse_double(cells[c], v)) {
        throw DataError("load_csv: " + path.string() + " row " + std::to_string(row + 1) + " (line " +
                        std::to_string(line_no) + "), column '" + header[c] + "': not a number: '" + cells[c] + "'");
      }
      if (static_cast<std::ptrdiff_t>(c) == target_idx) {
        ds.y.push_back(v);
      } else {
        values.push_back(v);
      }
    }
    ++row;
  }
  if (row == 0) throw DataError("load_csv: '" + path.string() + "' has a header but no rows");
  ds.X = Matrix(row, p, std::move(values));
  return ds;
}

/// Boston housing: 13 features, target MEDV.
inline Dataset load_boston(const std::filesystem::path& path) { return load_csv(path, "MEDV", {}, "boston"); }

/// Energy efficiency (ENB2012): 8 features X1..X8, first response Y1; Y2 is dropped.
inline Dataset load_energy(const std::filesystem::path& path) { return load_csv(path, "Y1", {"Y2"}, "energy"); }

inline void write_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("write_csv: cannot write '" + path.string() + "'");
  for (const auto& f : ds.feature_names) out << f << ',';
  out << ds.target_name << '\n';
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    for (std::size_t c = 0; c < ds.features(); ++c) out << detail::format_double(ds.X(r, c)) << ',';
    out << detail::format_double(ds.y[r]) << '\n';
  }
  if (!out) throw IoError("write_csv: failed writing '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Split and scaling

struct SplitDataset {
  Dataset train;
  Dataset valid;
  std::uint64_t split_seed = 0;
  std::vector<std::size_t> train_index;
  std::vector<std::size_t> valid_index;
};

/// Seeded 80/20 split; the training side gets floor(0.8 n) rows.
inline SplitDataset split_80_20(const Dataset& ds, std::uint64_t seed) {
  const std::size_t n = ds.rows();
  if (n < 5) throw DataError("split_80_20: need at least 5 rows, got " + std::to_string(n));
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  const std::size_t n_train = (n * 4) / 5;
  SplitDataset out;
  out.split_seed = seed;
  out.train_index.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.valid_index.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  out.train = ds.select_rows(out.train_index);
  out.valid = ds.select_rows(out.valid_index);
  return out;
}

/// Column z-scores for X and y estimated on training rows.
class Standardizer {
 public:
  static Standardizer fit(const Dataset& train) {
    Standardizer s;
    const std::size_t n = train.rows();
    if (n == 0) throw DataError("standardizer: empty training set");
    s.x_mean_.assign(train.features(), 0.0);
    s.x_std_.assign(train.features(), 1.0);
    for (std::size_t c = 0; c < train.features(); ++c) {
      const auto stats = moments(train.X.column_copy(c));
      s.x_mean_[c] = stats.first;
      s.x_std_[c] = checked_std(stats.second, train.name + " feature '" + name_of(train, c) + "'");
    }
    const auto ys = moments(train.y);
    s.y_mean_ = ys.first;
    s.y_std_ = checked_std(ys.second, train.name + " target '" + train.target_name + "'");
    return s;
  }

  [[nodiscard]] Dataset apply(const Dataset& ds) const {
    check(ds);
    Dataset out = ds;
    for (std::size_t r = 0; r < out.rows(); ++r)
      for (std::size_t c = 0; c < out.features(); ++c) out.X(r, c) = (out.X(r, c) - x_mean_[c]) / x_std_[c];
    for (double& v : out.y) v = (v - y_mean_) / y_std_;
    return out;
  }

  [[nodiscard]] Dataset invert(const Dataset& ds) const {
    check(ds);
    Dataset out = ds;
    for (std::size_t r = 0; r < out.rows(); ++r)
      for (std::size_t c = 0; c < out.features(); ++c) out.X(r, c) = out.X(r, c) * x_std_[c] + x_mean_[c];
    out.y = invert_target(out.y);
    return out;
  }

  [[nodiscard]] Vector invert_target(std::span<const double> y) const {
    Vector out(y.begin(), y.end());
    for (double& v : out) v = v * y_std_ + y_mean_;
    return out;
  }

  [[nodiscard]] const Vector& x_mean() const { return x_mean_; }
  [[nodiscard]] const Vector& x_std() const { return x_std_; }
  [[nodiscard]] double y_mean() const { return y_mean_; }
  [[nodiscard]] double y_std() const { return y_std_; }

 private:
  static std::pair<double, double> moments(std::span<const double> v) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    // population std; training columns come out with unit variance exactly
    return {mean, std::sqrt(ss / static_cast<double>(v.size()))};
  }

  static double checked_std(double sd, const std::string& what) {
    if (sd > 0.0 && std::isfinite(sd)) return sd;
    warn("standardizer: " + what + " is constant; using std 1");
    return 1.0;
  }

  static std::string name_of(const Dataset& ds, std::size_t c) {
    return c < ds.feature_names.size() ? ds.feature_names[c] : std::to_string(c);
  }

  void check(const Dataset& ds) const {
    if (ds.features() != x_mean_.size()) {
      throw DimensionError("standardizer: fitted on " + std::to_string(x_mean_.size()) + " features, got " +
                           std::to_string(ds.features()));
    }
  }

  Vector x_mean_;
  Vector x_std_;
  double y_mean_ = 0.0;
  double y_std_ = 1.0;
};

}  // namespace abcgan
