#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "abcgan/error.hpp"
#include "abcgan/neuralcore/matrix.hpp"
#include "abcgan/random.hpp"

namespace abcgan {

enum class Activation { ReLU, Sigmoid, Identity };

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::ReLU: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Identity: return "identity";
  }
  return "?";
}

inline Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::ReLU;
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "identity") return Activation::Identity;
  throw ModelError("unknown activation '" + name + "'");
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct DenseLayer {
  Matrix weights;  // out x in
  Vector bias;     // out
  Activation activation = Activation::Identity;

  [[nodiscard]] std::size_t in_dim() const { return weights.cols(); }
  [[nodiscard]] std::size_t out_dim() const { return weights.rows(); }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Feed-forward chain of dense layers.
struct Network {
  std::vector<DenseLayer> layers;

  [[nodiscard]] std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().in_dim(); }
  [[nodiscard]] std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().out_dim(); }

  [[nodiscard]] std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.bias.size();
    return n;
  }

  /// Throws DimensionError unless adjacent layers line up.
  void validate() const {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& l = layers[i];
      if (l.bias.size() != l.out_dim()) {
        throw DimensionError("layer " + std::to_string(i) + ": bias length " +
                             std::to_string(l.bias.size()) + " != output dim " +
                             std::to_string(l.out_dim()));
      }
      if (i > 0 && layers[i - 1].out_dim() != l.in_dim()) {
        throw DimensionError("layer " + std::to_string(i) + ": expects " + std::to_string(l.in_dim()) +
                             " inputs but layer " + std::to_string(i - 1) + " emits " +
                             std::to_string(layers[i - 1].out_dim()));
      }
    }
  }

  friend bool operator==(const Network&, const Network&) = default;
};

/// One gradient tensor per parameter tensor, plus d(loss)/d(input batch).
/// `skip` carries the gradient of a skip-blend parameter when the owner has one.
struct GradientSet {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  Matrix input;
  std::optional<double> skip;
};

/// Activations of every layer from one forward pass; activations[0] is the input.
struct ForwardTrace {
  std::vector<Matrix> activations;

  [[nodiscard]] const Matrix& output() const { return activations.back(); }
};

namespace detail {

// out(n x o) = in(n x i) * W^T + b, then the activation.
inline Matrix dense_forward(const DenseLayer& layer, const Matrix& in) {
  const std::size_t n = in.rows();
  const std::size_t ni = layer.in_dim();
  const std::size_t no = layer.out_dim();
  const Matrix wt = layer.weights.transposed();  // i x o, contiguous inner loop over o
  Matrix out(n, no);
  for (std::size_t r = 0; r < n; ++r) {
    double* dst = out.row(r).data();
    for (std::size_t o = 0; o < no; ++o) dst[o] = layer.bias[o];
    const double* src = in.row(r).data();
    for (std::size_t k = 0; k < ni; ++k) {
      const double a = src[k];
      const double* w = wt.row(k).data();
      for (std::size_t o = 0; o < no; ++o) dst[o] += a * w[o];
    }
    switch (layer.activation) {
      case Activation::ReLU:
        for (std::size_t o = 0; o < no; ++o) dst[o] = dst[o] < 0.0 ? 0.0 : dst[o];  // NaN passes through
        break;
      case Activation::Sigmoid:
        for (std::size_t o = 0; o < no; ++o) dst[o] = sigmoid(dst[o]);
        break;
      case Activation::Identity:
        break;
    }
  }
  return out;
}

inline void check_input(const Network& net, const Matrix& batch) {
  if (net.layers.empty()) throw DimensionError("network has no layers");
  if (batch.cols() != net.input_dim()) {
    throw DimensionError("layer 0: batch has " + std::to_string(batch.cols()) +
                         " columns, layer expects " + std::to_string(net.input_dim()));
  }
}

}  // namespace detail

inline ForwardTrace forward_trace(const Network& net, const Matrix& batch) {
  detail::check_input(net, batch);
  ForwardTrace trace;
  trace.activations.reserve(net.layers.size() + 1);
  trace.activations.push_back(batch);
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& layer = net.layers[i];
    if (trace.activations.back().cols() != layer.in_dim()) {
      throw DimensionError("layer " + std::to_string(i) + ": input width " +
                           std::to_string(trace.activations.back().cols()) + " != " +
                           std::to_string(layer.in_dim()));
    }
    trace.activations.push_back(detail::dense_forward(layer, trace.activations.back()));
  }
  return trace;
}

inline Matrix forward(const Network& net, const Matrix& batch) {
  return std::move(forward_trace(net, batch).activations.back());
}

/// Reverse-mode gradients of a scalar loss whose gradient w.r.t. the network
/// output is `upstream`, using activations recorded by forward_trace.
inline GradientSet backward(const Network& net, const ForwardTrace& trace, const Matrix& upstream) {
  const std::size_t L = net.layers.size();
  if (trace.activations.size() != L + 1) throw DimensionError("backward: trace does not match network");
  const Matrix& out = trace.output();
  if (upstream.rows() != out.rows() || upstream.cols() != out.cols()) {
    throw DimensionError("backward: upstream gradient is " + std::to_string(upstream.rows()) + "x" +
                         std::to_string(upstream.cols()) + ", output is " + std::to_string(out.rows()) +
                         "x" + std::to_string(out.cols()));
  }

  GradientSet grads;
  grads.weights.resize(L);
  grads.biases.resize(L);
  Matrix delta = upstream;
  const std::size_t n = upstream.rows();
  for (std::size_t li = L; li-- > 0;) {
    const auto& layer = net.layers[li];
    const Matrix& act = trace.activations[li + 1];
    const Matrix& in = trace.activations[li];
    const std::size_t no = layer.out_dim();
    const std::size_t ni = layer.in_dim();

    // through the activation
    auto dv = delta.values();
    const auto av = act.values();
    switch (layer.activation) {
      case Activation::ReLU:
        for (std::size_t k = 0; k < dv.size(); ++k) dv[k] = av[k] > 0.0 ? dv[k] : 0.0;
        break;
      case Activation::Sigmoid:
        for (std::size_t k = 0; k < dv.size(); ++k) dv[k] *= av[k] * (1.0 - av[k]);
        break;
      case Activation::Identity:
        break;
    }

    Matrix gw(no, ni);
    Vector gb(no, 0.0);
    Matrix gin(n, ni);
    for (std::size_t r = 0; r < n; ++r) {
      const double* d = delta.row(r).data();
      const double* x = in.row(r).data();
      double* gi = gin.row(r).data();
      for (std::size_t o = 0; o < no; ++o) {
        const double g = d[o];
        if (g == 0.0) continue;
        gb[o] += g;
        double* gwr = gw.row(o).data();
        const double* w = layer.weights.row(o).data();
        for (std::size_t k = 0; k < ni; ++k) {
          gwr[k] += g * x[k];
          gi[k] += g * w[k];
        }
      }
    }
    grads.weights[li] = std::move(gw);
    grads.biases[li] = std::move(gb);
    delta = std::move(gin);
  }
  grads.input = std::move(delta);
  return grads;
}

inline GradientSet backward(const Network& net, const Matrix& batch, const Matrix& upstream) {
  return backward(net, forward_trace(net, batch), upstream);
}

/// Glorot-uniform weights, zero biases. `dims` lists widths from input to
/// output; `activations` has one entry per layer (dims.size() - 1).
inline Network init_network(std::span<const std::size_t> dims, std::span<const Activation> activations,
                            Rng& rng) {
  if (dims.size() < 2) throw DimensionError("init_network: need at least one layer (two widths)");
  if (activations.size() != dims.size() - 1) {
    throw DimensionError("init_network: " + std::to_string(activations.size()) + " activations for " +
                         std::to_string(dims.size() - 1) + " layers");
  }
  Network net;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const std::size_t fan_in = dims[i];
    const std::size_t fan_out = dims[i + 1];
    if (fan_in == 0 || fan_out == 0) throw DimensionError("init_network: zero-width layer");
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseLayer layer{Matrix(fan_out, fan_in), Vector(fan_out, 0.0), activations[i]};
    for (double& w : layer.weights.values()) w = dist(rng);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

inline Network init_network(std::initializer_list<std::size_t> dims,
                            std::initializer_list<Activation> activations, Rng& rng) {
  return init_network(std::span<const std::size_t>(dims.begin(), dims.size()),
                      std::span<const Activation>(activations.begin(), activations.size()), rng);
}

/// Mutable views of every parameter tensor, in layer order (weights, bias).
inline std::vector<std::span<double>> parameter_spans(Network& net) {
  std::vector<std::span<double>> out;
  for (auto& l : net.layers) {
    out.emplace_back(l.weights.values());
    out.emplace_back(l.bias);
  }
  return out;
}

/// Views matching parameter_spans order.
inline std::vector<std::span<const double>> gradient_spans(const GradientSet& g) {
  std::vector<std::span<const double>> out;
  for (std::size_t i = 0; i < g.weights.size(); ++i) {
    out.emplace_back(g.weights[i].values());
    out.emplace_back(g.biases[i]);
  }
  return out;
}

}  // namespace abcgan
