#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "abcgan/error.hpp"
#include "abcgan/experiments/format.hpp"
#include "abcgan/gan/gan.hpp"
#include "abcgan/priors/prior_model.hpp"

// Plain-text model format: a JSON object tagged {"format": "abcgan-model",
// "version": 1, "kind": ...}. See docs/formats.md.

namespace abcgan {

inline constexpr int kModelFormatVersion = 1;

namespace detail {

inline nlohmann::json matrix_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"values", std::vector<double>(m.values().begin(), m.values().end())}};
}

inline Matrix matrix_from(const nlohmann::json& j) {
  return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(), j.at("values").get<Vector>());
}

inline nlohmann::json network_json(const Network& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : net.layers) {
    layers.push_back({{"activation", to_string(l.activation)}, {"weights", matrix_json(l.weights)}, {"bias", l.bias}});
  }
  return {{"layers", layers}};
}

inline Network network_from(const nlohmann::json& j) {
  Network net;
  for (const auto& l : j.at("layers")) {
    net.layers.push_back(DenseLayer{matrix_from(l.at("weights")), l.at("bias").get<Vector>(),
                                    activation_from_string(l.at("activation").get<std::string>())});
  }
  net.validate();
  return net;
}

inline nlohmann::json header(const char* kind) {
  return {{"format", "abcgan-model"}, {"version", kModelFormatVersion}, {"kind", kind}};
}

inline void check_header(const nlohmann::json& j, const std::string& kind) {
  if (j.value("format", std::string()) != "abcgan-model") throw ModelError("not an abcgan-model document");
  if (j.value("version", 0) != kModelFormatVersion) throw ModelError("unsupported model format version");
  if (!kind.empty() && j.value("kind", std::string()) != kind) {
    throw ModelError("expected a '" + kind + "' model, found '" + j.value("kind", std::string()) + "'");
  }
}

template <typename F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("malformed model document: ") + e.what());
  }
}

}  // namespace detail

inline nlohmann::json to_json(const PriorModel& model) {
  model.require_fitted("serialize");
  if (const auto* lin = model.linear()) {
    auto j = detail::header("linear");
    j["beta"] = lin->beta;
    j["ridge_lambda"] = lin->ridge_lambda;
    return j;
  }
  const auto& ens = *model.trees();
  auto j = detail::header("gbt");
  j["base"] = ens.base;
  j["shrinkage"] = ens.shrinkage;
  j["feature_dim"] = ens.feature_dim;
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : ens.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : t.nodes) {
      if (n.is_leaf()) {
        nodes.push_back({{"value", n.value}});
      } else {
        nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right},
                         {"value", n.value}});
      }
    }
    trees.push_back({{"max_depth", t.max_depth}, {"nodes", nodes}});
  }
  j["trees"] = trees;
  return j;
}

inline PriorModel prior_from_json(const nlohmann::json& j) {
  return detail::guarded([&]() -> PriorModel {
    detail::check_header(j, "");
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "linear") return LinearFit{j.at("beta").get<Vector>(), j.value("ridge_lambda", 0.0)};
    if (kind != "gbt") throw ModelError("unknown prior kind '" + kind + "'");
    TreeEnsemble ens;
    ens.base = j.at("base").get<double>();
    ens.shrinkage = j.at("shrinkage").get<double>();
    ens.feature_dim = j.at("feature_dim").get<std::size_t>();
    for (const auto& t : j.at("trees")) {
      RegressionTree tree;
      tree.max_depth = t.at("max_depth").get<std::size_t>();
      for (const auto& n : t.at("nodes")) {
        RegressionTree::Node node;
        node.value = n.at("value").get<double>();
        if (n.contains("feature")) {
          node.feature = n.at("feature").get<std::int32_t>();
          node.threshold = n.at("threshold").get<double>();
          node.left = n.at("left").get<std::int32_t>();
          node.right = n.at("right").get<std::int32_t>();
        }
        tree.nodes.push_back(node);
      }
      if (!tree.structurally_valid()) throw ModelError("malformed regression tree in model document");
      ens.trees.push_back(std::move(tree));
    }
    return ens;
  });
}

inline nlohmann::json to_json(const GanModel& model) {
  auto j = detail::header("gan");
  j["variant"] = to_string(model.variant);
  j["feature_dim"] = model.feature_dim;
  j["noise_dim"] = model.noise_dim;
  j["generator"] = detail::network_json(model.generator);
  j["discriminator"] = detail::network_json(model.discriminator);
  j["theta_w"] = model.skip ? nlohmann::json(model.skip->theta_w) : nlohmann::json(nullptr);
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& h : model.history) {
    hist.push_back({{"epoch", h.epoch},
                    {"d_loss", h.d_loss},
                    {"g_loss", h.g_loss},
                    {"w_gan", h.w_gan ? nlohmann::json(*h.w_gan) : nlohmann::json(nullptr)}});
  }
  j["history"] = hist;
  return j;
}

inline GanModel gan_from_json(const nlohmann::json& j) {
  return detail::guarded([&] {
    detail::check_header(j, "gan");
    GanModel m;
    m.variant = gan_variant_from_string(j.at("variant").get<std::string>());
    m.feature_dim = j.at("feature_dim").get<std::size_t>();
    m.noise_dim = j.at("noise_dim").get<std::size_t>();
    m.generator = detail::network_from(j.at("generator"));
    m.discriminator = detail::network_from(j.at("discriminator"));
    if (!j.at("theta_w").is_null()) m.skip = SkipState{j.at("theta_w").get<double>()};
    if ((m.variant == GanVariant::SkipGan) != m.skip.has_value()) {
      throw ModelError("skip state must be present exactly for skipgan models");
    }
    for (const auto& h : j.at("history")) {
      EpochRecord rec{h.at("epoch").get<std::size_t>(), h.at("d_loss").get<double>(), h.at("g_loss").get<double>(),
                      std::nullopt};
      if (!h.at("w_gan").is_null()) rec.w_gan = h.at("w_gan").get<double>();
      m.history.push_back(rec);
    }
    return m;
  });
}

/// epoch,d_loss,g_loss,w_gan (w_gan empty for models without a skip weight).
inline std::string history_csv(const GanModel& model) {
  std::ostringstream out;
  out << "epoch,d_loss,g_loss,w_gan\n";
  for (const auto& h : model.history) {
    out << h.epoch << ',' << format_roundtrip(h.d_loss) << ',' << format_roundtrip(h.g_loss) << ','
        << (h.w_gan ? format_roundtrip(*h.w_gan) : std::string()) << '\n';
  }
  return out.str();
}

inline void save_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

inline nlohmann::json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

}  // namespace abcgan
