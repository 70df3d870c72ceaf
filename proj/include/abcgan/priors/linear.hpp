#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include "abcgan/error.hpp"
#include "abcgan/log.hpp"
#include "abcgan/neuralcore/matrix.hpp"

namespace abcgan {

/// Ordinary least squares coefficients, intercept first.
struct LinearFit {
  Vector beta;
  double ridge_lambda = 0.0;  // non-zero only when the ridge fallback kicked in

  [[nodiscard]] std::size_t feature_dim() const { return beta.empty() ? 0 : beta.size() - 1; }

  friend bool operator==(const LinearFit&, const LinearFit&) = default;
};

struct OlsOptions {
  // Solve (X'X + lambda I) b = X'y instead of failing on a rank-deficient design.
  bool ridge_fallback = false;
  double ridge_lambda = 1e-8;
};

namespace detail {

// In-place Cholesky of a symmetric matrix (lower triangle). Returns false when
// a pivot is not safely positive relative to the largest diagonal entry.
inline bool cholesky(Matrix& A) {
  const std::size_t n = A.rows();
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(A(i, i)));
  const double tol = 1e-12 * std::max(max_diag, 1.0);
  for (std::size_t j = 0; j < n; ++j) {
    double d = A(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= A(j, k) * A(j, k);
    if (!(d > tol)) return false;
    const double ljj = std::sqrt(d);
    A(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = A(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= A(i, k) * A(j, k);
      A(i, j) = s / ljj;
    }
  }
  return true;
}

inline Vector cholesky_solve(const Matrix& L, Vector b) {
  const std::size_t n = L.rows();
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= L(i, k) * b[k];
    b[i] = s / L(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= L(k, i) * b[k];
    b[i] = s / L(i, i);
  }
  return b;
}

}  // namespace detail

/// Least-squares fit through the normal equations of the intercept-augmented
/// design, factored with Cholesky.
inline LinearFit fit_ols(const Matrix& X, std::span<const double> y, const OlsOptions& options = {}) {
  const std::size_t n = X.rows();
  const std::size_t p = X.cols() + 1;
  if (y.size() != n) {
    throw DimensionError("fit_ols: " + std::to_string(n) + " rows but " + std::to_string(y.size()) +
                         " targets");
  }
  if (n <= p) {
    throw ModelError("fit_ols: need more rows than coefficients (" + std::to_string(n) + " rows, " +
                     std::to_string(p) + " coefficients)");
  }

  Matrix gram(p, p);
  Vector rhs(p, 0.0);
  Vector z(p);
  for (std::size_t r = 0; r < n; ++r) {
    z[0] = 1.0;
    const auto xr = X.row(r);
    std::copy(xr.begin(), xr.end(), z.begin() + 1);
    for (std::size_t i = 0; i < p; ++i) {
      rhs[i] += z[i] * y[r];
      for (std::size_t j = 0; j <= i; ++j) gram(i, j) += z[i] * z[j];
    }
  }
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < i; ++j) gram(j, i) = gram(i, j);

  Matrix factor = gram;
  if (detail::cholesky(factor)) return LinearFit{detail::cholesky_solve(factor, std::move(rhs)), 0.0};

  if (!options.ridge_fallback) {
    throw ModelError("fit_ols: design matrix is rank deficient; retry with the ridge fallback (lambda=" +
                     std::to_string(options.ridge_lambda) + ")");
  }
  warn("fit_ols: rank-deficient design, falling back to ridge with lambda=" +
       std::to_string(options.ridge_lambda));
  factor = gram;
  for (std::size_t i = 0; i < p; ++i) factor(i, i) += options.ridge_lambda;
  if (!detail::cholesky(factor)) throw ModelError("fit_ols: ridge system is not positive definite");
  return LinearFit{detail::cholesky_solve(factor, std::move(rhs)), options.ridge_lambda};
}

/// x . beta with the intercept, for one row.
inline double predict_linear_row(const LinearFit& fit, std::span<const double> x) {
  double s = fit.beta[0];
  for (std::size_t j = 0; j < x.size(); ++j) s += fit.beta[j + 1] * x[j];
  return s;
}

inline Vector predict_linear(const LinearFit& fit, const Matrix& X) {
  if (fit.beta.empty()) throw ModelError("predict_linear: empty coefficient vector");
  if (X.cols() != fit.feature_dim()) {
    throw DimensionError("predict_linear: model has " + std::to_string(fit.feature_dim()) +
                         " features, input has " + std::to_string(X.cols()));
  }
  Vector out(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) out[r] = predict_linear_row(fit, X.row(r));
  return out;
}

}  // namespace abcgan
