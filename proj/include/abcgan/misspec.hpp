#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "abcgan/error.hpp"
#include "abcgan/priors/prior_model.hpp"
#include "abcgan/random.hpp"

namespace abcgan {

/// One misspecification level: Gaussian shift `mu` with variance `sigma2`,
/// both on the standardized target scale.
struct NoiseSpec {
  double sigma2 = 0.0;
  double mu = 0.0;

  void validate() const {
    if (!(sigma2 >= 0.0) || !std::isfinite(sigma2) || !std::isfinite(mu)) {
      throw ConfigError("noise spec needs finite mu and sigma2 >= 0 (got mu=" + std::to_string(mu) +
                        ", sigma2=" + std::to_string(sigma2) + ")");
    }
  }

  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

/// Variance and bias levels; cells enumerate variance-major, both descending.
struct MisspecGrid {
  std::vector<double> variances{1.0, 0.1, 0.01};
  std::vector<double> biases{1.0, 0.1, 0.01, 0.0};
};

inline std::vector<NoiseSpec> enumerate_grid(const MisspecGrid& grid) {
  if (grid.variances.empty() || grid.biases.empty()) throw ConfigError("misspecification grid is empty");
  auto vars = grid.variances;
  auto biases = grid.biases;
  std::sort(vars.begin(), vars.end(), std::greater<>());
  std::sort(biases.begin(), biases.end(), std::greater<>());
  std::vector<NoiseSpec> out;
  out.reserve(vars.size() * biases.size());
  for (double v : vars) {
    for (double b : biases) {
      NoiseSpec spec{v, b};
      spec.validate();
      out.push_back(spec);
    }
  }
  return out;
}

/// yhat_i + mu + sqrt(sigma2) z_i with fresh standard normal z on every call.
inline Vector perturb_predictions(std::span<const double> yhat, const NoiseSpec& spec, Rng& rng) {
  spec.validate();
  const double sd = std::sqrt(spec.sigma2);
  Vector out(yhat.begin(), yhat.end());
  if (sd == 0.0) {
    for (double& v : out) v += spec.mu;
    return out;
  }
  for (double& v : out) v += spec.mu + sd * standard_normal(rng);
  return out;
}

struct CoefficientDraw {
  Vector beta;      // the perturbed coefficients used for this call
  Vector response;  // <x_i, beta'> (+ unit noise)
};

/// Bayesian linear sampler: beta' ~ N(beta + mu, sigma2) coordinate-wise
/// (intercept included), drawn once per call, then
/// y_i ~ N(<x_i, beta'>, response_sd^2). The likelihood has unit variance in
/// the target's native units, so callers working on a standardized target
/// pass response_sd = 1 / sd(y). response_sd = 0 drops the term.
inline CoefficientDraw draw_coefficients(const LinearFit& fit, const Matrix& X, const NoiseSpec& spec,
                                         Rng& rng, double response_sd = 1.0) {
  spec.validate();
  if (X.cols() != fit.feature_dim()) {
    throw DimensionError("perturb_coefficients: model has " + std::to_string(fit.feature_dim()) +
                         " features, input has " + std::to_string(X.cols()));
  }
  const double sd = std::sqrt(spec.sigma2);
  CoefficientDraw draw;
  draw.beta = fit.beta;
  for (double& b : draw.beta) b += spec.mu + (sd == 0.0 ? 0.0 : sd * standard_normal(rng));
  const LinearFit perturbed{draw.beta, fit.ridge_lambda};
  draw.response = predict_linear(perturbed, X);
  if (response_sd > 0.0) {
    for (double& v : draw.response) v += response_sd * standard_normal(rng);
  }
  return draw;
}

inline Vector perturb_coefficients(const LinearFit& fit, const Matrix& X, const NoiseSpec& spec, Rng& rng,
                                   double response_sd = 1.0) {
  return draw_coefficients(fit, X, spec, rng, response_sd).response;
}

/// The misspecified sampler G_pi: a fitted prior plus one noise level.
/// Linear priors perturb their coefficients; tree priors perturb their
/// point predictions.
class PriorSampler {
 public:
  /// `response_sd` scales the linear prior's unit likelihood noise (see
  /// draw_coefficients); tree priors ignore it.
  PriorSampler(const PriorModel& model, NoiseSpec spec, double response_sd = 1.0)
      : model_(&model), spec_(spec), response_sd_(response_sd) {
    model.require_fitted("prior sampler");
    spec.validate();
    if (!(response_sd >= 0.0) || !std::isfinite(response_sd)) throw ConfigError("prior sampler: response_sd must be >= 0");
  }

  [[nodiscard]] Vector sample(const Matrix& X, Rng& rng) const {
    if (const auto* lin = model_->linear()) return perturb_coefficients(*lin, X, spec_, rng, response_sd_);
    return perturb_predictions(prior_point_predictions(*model_, X), spec_, rng);
  }

  [[nodiscard]] const PriorModel& model() const { return *model_; }
  [[nodiscard]] const NoiseSpec& spec() const { return spec_; }

 private:
  const PriorModel* model_;
  NoiseSpec spec_;
  double response_sd_;
};

}  // namespace abcgan
