#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "abcgan/error.hpp"

namespace abcgan {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

  Matrix(std::size_t rows, std::size_t cols, Vector values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_) {
      throw DimensionError("matrix: " + std::to_string(values_.size()) + " values for a " +
                           std::to_string(rows_) + "x" + std::to_string(cols_) + " shape");
    }
  }

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t n = rows.size();
    const std::size_t m = n == 0 ? 0 : rows.begin()->size();
    Vector values;
    values.reserve(n * m);
    for (const auto& row : rows) {
      if (row.size() != m) throw DimensionError("matrix: ragged row list");
      values.insert(values.end(), row.begin(), row.end());
    }
    return Matrix(n, m, std::move(values));
  }

  /// Single column matrix holding `column`.
  static Matrix column(std::span<const double> column) {
    return Matrix(column.size(), 1, Vector(column.begin(), column.end()));
  }

  [[nodiscard]] std::size_t rows() const { return rows_; }
  [[nodiscard]] std::size_t cols() const { return cols_; }
  [[nodiscard]] std::size_t size() const { return values_.size(); }
  [[nodiscard]] bool empty() const { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  [[nodiscard]] std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  [[nodiscard]] std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }

  [[nodiscard]] std::span<double> values() { return values_; }
  [[nodiscard]] std::span<const double> values() const { return values_; }

  [[nodiscard]] Vector column_copy(std::size_t c) const {
    Vector out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
  }

  [[nodiscard]] Matrix transposed() const {
    Matrix out(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) out(c, r) = (*this)(r, c);
    return out;
  }

  /// Rows picked by `index`, in that order.
  [[nodiscard]] Matrix select_rows(std::span<const std::size_t> index) const {
    Matrix out(index.size(), cols_);
    for (std::size_t i = 0; i < index.size(); ++i) {
      const auto src = row(index[i]);
      std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
  }

  [[nodiscard]] bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vector values_;
};

/// [column | X]: prepends `column` to the columns of `X`.
inline Matrix prepend_column(std::span<const double> column, const Matrix& X) {
  if (column.size() != X.rows()) {
    throw DimensionError("prepend_column: " + std::to_string(column.size()) + " values for " +
                         std::to_string(X.rows()) + " rows");
  }
  Matrix out(X.rows(), X.cols() + 1);
  for (std::size_t r = 0; r < X.rows(); ++r) {
    auto dst = out.row(r);
    dst[0] = column[r];
    const auto src = X.row(r);
    std::copy(src.begin(), src.end(), dst.begin() + 1);
  }
  return out;
}

/// [A | X]: A's columns first.
inline Matrix hconcat(const Matrix& A, const Matrix& X) {
  if (A.rows() != X.rows()) throw DimensionError("hconcat: row count mismatch");
  Matrix out(X.rows(), A.cols() + X.cols());
  for (std::size_t r = 0; r < X.rows(); ++r) {
    auto dst = out.row(r);
    std::copy(A.row(r).begin(), A.row(r).end(), dst.begin());
    std::copy(X.row(r).begin(), X.row(r).end(), dst.begin() + static_cast<std::ptrdiff_t>(A.cols()));
  }
  return out;
}

}  // namespace abcgan
