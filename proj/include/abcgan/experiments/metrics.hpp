#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "abcgan/error.hpp"

namespace abcgan {

/// Mean absolute error.
inline double mae(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("mae: lengths differ (" + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
  if (a.empty()) throw DimensionError("mae: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

/// Linear-interpolation quantile of sorted data (the "type 7" rule used by
/// numpy and R defaults).
inline double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw DimensionError("quantile: empty input");
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

struct BoxStats {
  std::size_t count = 0;
  std::size_t filtered = 0;  // points dropped by the large-value filter
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  std::vector<double> outliers;  // beyond 1.5 IQR from the quartiles
};

/// Five-number summary. With `filter_at` set, values >= *filter_at are
/// dropped first and counted in `filtered`.
inline BoxStats box_stats(std::span<const double> values, std::optional<double> filter_at = std::nullopt) {
  std::vector<double> v;
  BoxStats out;
  for (double x : values) {
    if (filter_at && x >= *filter_at) {
      ++out.filtered;
      continue;
    }
    v.push_back(x);
  }
  if (v.empty()) throw DimensionError("box_stats: no values left to summarize");
  std::sort(v.begin(), v.end());
  out.count = v.size();
  out.min = v.front();
  out.max = v.back();
  out.q1 = quantile_sorted(v, 0.25);
  out.median = quantile_sorted(v, 0.5);
  out.q3 = quantile_sorted(v, 0.75);
  const double iqr = out.q3 - out.q1;
  for (double x : v)
    if (x < out.q1 - 1.5 * iqr || x > out.q3 + 1.5 * iqr) out.outliers.push_back(x);
  return out;
}

}  // namespace abcgan
