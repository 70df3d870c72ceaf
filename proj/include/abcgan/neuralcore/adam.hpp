#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "abcgan/error.hpp"
#include "abcgan/neuralcore/network.hpp"

namespace abcgan {

/// Adaptive-moment optimizer state. Defaults follow the usual GAN setting
/// (beta1 = 0.5).
struct OptimizerState {
  double learning_rate = 1e-3;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<Vector> first_moment;
  std::vector<Vector> second_moment;
};

inline OptimizerState make_optimizer(double learning_rate) {
  OptimizerState s;
  s.learning_rate = learning_rate;
  return s;
}

/// One bias-corrected Adam update over matching parameter/gradient tensors.
/// Moments are allocated lazily on the first step. Throws DivergenceError,
/// leaving parameters untouched, if any gradient entry is non-finite.
inline void adam_step(std::span<const std::span<double>> params,
                      std::span<const std::span<const double>> grads, OptimizerState& state) {
  if (params.size() != grads.size()) {
    throw DimensionError("adam_step: " + std::to_string(params.size()) + " parameter tensors, " +
                         std::to_string(grads.size()) + " gradient tensors");
  }
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (params[t].size() != grads[t].size()) {
      throw DimensionError("adam_step: tensor " + std::to_string(t) + " has " +
                           std::to_string(params[t].size()) + " parameters but " +
                           std::to_string(grads[t].size()) + " gradients");
    }
    for (double g : grads[t]) {
      if (!std::isfinite(g)) {
        throw DivergenceError("adam_step: non-finite gradient in tensor " + std::to_string(t) +
                              " at step " + std::to_string(state.step + 1));
      }
    }
  }
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.size(), 0.0);
      state.second_moment.emplace_back(p.size(), 0.0);
    }
  } else if (state.first_moment.size() != params.size()) {
    throw DimensionError("adam_step: optimizer state was built for a different parameter set");
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    if (m.size() != params[k].size()) throw DimensionError("adam_step: moment shape mismatch");
    auto p = params[k];
    const auto g = grads[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[i] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  }
}

/// Convenience overload for a whole network.
inline void adam_step(Network& net, const GradientSet& grads, OptimizerState& state) {
  const auto p = parameter_spans(net);
  const auto g = gradient_spans(grads);
  adam_step(std::span<const std::span<double>>(p), std::span<const std::span<const double>>(g), state);
}

}  // namespace abcgan
