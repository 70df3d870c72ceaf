#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "abcgan/error.hpp"
#include "abcgan/neuralcore/matrix.hpp"

namespace abcgan {

inline constexpr double kBceClamp = 1e-7;

struct LossResult {
  double value = 0.0;
  Vector gradient;  // d(value)/d(pred)
};

/// Mean binary cross-entropy. Probabilities are clamped to
/// [kBceClamp, 1 - kBceClamp] before the log.
inline LossResult bce_loss(std::span<const double> pred, std::span<const double> label) {
  if (pred.size() != label.size() || pred.empty()) {
    throw DimensionError("bce_loss: " + std::to_string(pred.size()) + " predictions, " +
                         std::to_string(label.size()) + " labels");
  }
  const double n = static_cast<double>(pred.size());
  LossResult out;
  out.gradient.resize(pred.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = std::clamp(pred[i], kBceClamp, 1.0 - kBceClamp);
    const double y = label[i];
    sum -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    out.gradient[i] = (p - y) / (p * (1.0 - p) * n);
  }
  out.value = sum / n;
  return out;
}

/// Same loss against a constant label.
inline LossResult bce_loss(std::span<const double> pred, double label) {
  const Vector labels(pred.size(), label);
  return bce_loss(pred, labels);
}

}  // namespace abcgan
