#pragma once

#include <string>
#include <type_traits>
#include <variant>

#include "abcgan/error.hpp"
#include "abcgan/priors/gbt.hpp"
#include "abcgan/priors/linear.hpp"

namespace abcgan {

enum class PriorKind { Linear, BoostedTrees };

inline const char* to_string(PriorKind k) { return k == PriorKind::Linear ? "linear" : "gbt"; }

inline PriorKind prior_kind_from_string(const std::string& s) {
  if (s == "linear") return PriorKind::Linear;
  if (s == "gbt") return PriorKind::BoostedTrees;
  throw ConfigError("unknown prior '" + s + "' (expected linear or gbt)");
}

/// A fitted explicit generative model; default-constructed means unfitted.
class PriorModel {
 public:
  PriorModel() = default;
  PriorModel(LinearFit fit) : fit_(std::move(fit)) {}     // NOLINT(google-explicit-constructor)
  PriorModel(TreeEnsemble fit) : fit_(std::move(fit)) {}  // NOLINT(google-explicit-constructor)

  [[nodiscard]] bool fitted() const { return !std::holds_alternative<std::monostate>(fit_); }

  [[nodiscard]] PriorKind kind() const {
    require_fitted("kind");
    return std::holds_alternative<LinearFit>(fit_) ? PriorKind::Linear : PriorKind::BoostedTrees;
  }

  [[nodiscard]] const LinearFit* linear() const { return std::get_if<LinearFit>(&fit_); }
  [[nodiscard]] const TreeEnsemble* trees() const { return std::get_if<TreeEnsemble>(&fit_); }

  void require_fitted(const char* what) const {
    if (!fitted()) throw ModelError(std::string(what) + ": prior model is not fitted");
  }

  friend bool operator==(const PriorModel&, const PriorModel&) = default;

 private:
  std::variant<std::monostate, LinearFit, TreeEnsemble> fit_;
};

/// Noise-free point predictions of the prior.
inline Vector prior_point_predictions(const PriorModel& model, const Matrix& X) {
  model.require_fitted("prior_point_predictions");
  if (const auto* lin = model.linear()) return predict_linear(*lin, X);
  return predict_gbt(*model.trees(), X);
}

inline PriorModel fit_prior(PriorKind kind, const Matrix& X, std::span<const double> y,
                            const GbtConfig& gbt = {}) {
  if (kind == PriorKind::Linear) return fit_ols(X, y, OlsOptions{.ridge_fallback = true});
  return fit_gbt(X, y, gbt);
}

}  // namespace abcgan
