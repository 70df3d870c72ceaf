#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "abcgan/error.hpp"
#include "abcgan/misspec.hpp"
#include "abcgan/neuralcore/adam.hpp"
#include "abcgan/neuralcore/loss.hpp"
#include "abcgan/neuralcore/network.hpp"
#include "abcgan/random.hpp"

namespace abcgan {

enum class GanVariant { CGan, MGan, SkipGan };

inline const char* to_string(GanVariant v) {
  switch (v) {
    case GanVariant::CGan: return "cgan";
    case GanVariant::MGan: return "mgan";
    case GanVariant::SkipGan: return "skipgan";
  }
  return "?";
}

inline GanVariant gan_variant_from_string(const std::string& s) {
  if (s == "cgan") return GanVariant::CGan;
  if (s == "mgan") return GanVariant::MGan;
  if (s == "skipgan") return GanVariant::SkipGan;
  throw ConfigError("unknown GAN variant '" + s + "' (expected cgan, mgan or skipgan)");
}

/// How often the prior sampler redraws y_pi during training.
enum class PriorRefresh { PerBatch, PerEpoch };

struct GanConfig {
  std::size_t epochs = 1000;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::size_t noise_dim = 1;  // cGAN only
  std::size_t d_steps_per_g_step = 1;
  PriorRefresh refresh = PriorRefresh::PerBatch;

  void validate() const {
    if (batch_size == 0) throw ConfigError("gan.batch_size must be positive");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("gan.learning_rate must be positive");
    if (noise_dim == 0) throw ConfigError("gan.noise_dim must be positive");
    if (d_steps_per_g_step == 0) throw ConfigError("gan.d_steps_per_g_step must be positive");
  }
};

/// Learnable blend weight. The weight on the generator's output is
/// sigmoid(theta_w); the prior gets the complement.
struct SkipState {
  double theta_w = 0.0;

  [[nodiscard]] double weight() const { return sigmoid(theta_w); }
  [[nodiscard]] double display_weight() const { return std::clamp(weight(), 0.0, 1.0); }

  friend bool operator==(const SkipState&, const SkipState&) = default;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double d_loss = 0.0;
  double g_loss = 0.0;
  std::optional<double> w_gan;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct GanModel {
  GanVariant variant = GanVariant::MGan;
  std::size_t feature_dim = 0;
  std::size_t noise_dim = 1;
  Network generator;
  Network discriminator;
  std::optional<SkipState> skip;
  std::vector<EpochRecord> history;

  /// Width of the column block placed before the features at the generator input.
  [[nodiscard]] std::size_t lead_dim() const { return variant == GanVariant::CGan ? noise_dim : 1; }
  [[nodiscard]] bool uses_prior() const { return variant != GanVariant::CGan; }

  friend bool operator==(const GanModel&, const GanModel&) = default;
};

inline constexpr std::size_t kGeneratorHidden = 50;
inline constexpr std::size_t kGeneratorDepth = 5;

/// Generator: [lead | x] -> 5 x 50 ReLU -> 1 (identity).
/// Discriminator: [y | x] -> 25 -> 50 (ReLU) -> 1 (sigmoid).
inline GanModel build_gan(GanVariant variant, std::size_t feature_dim, const GanConfig& config, Rng& rng) {
  if (feature_dim == 0) throw DimensionError("build_gan: feature_dim must be at least 1");
  config.validate();
  GanModel model;
  model.variant = variant;
  model.feature_dim = feature_dim;
  model.noise_dim = variant == GanVariant::CGan ? config.noise_dim : 1;

  std::vector<std::size_t> gdims{model.lead_dim() + feature_dim};
  std::vector<Activation> gacts;
  for (std::size_t i = 0; i < kGeneratorDepth; ++i) {
    gdims.push_back(kGeneratorHidden);
    gacts.push_back(Activation::ReLU);
  }
  gdims.push_back(1);
  gacts.push_back(Activation::Identity);
  model.generator = init_network(gdims, gacts, rng);

  const std::vector<std::size_t> ddims{feature_dim + 1, 25, 50, 1};
  const std::vector<Activation> dacts{Activation::ReLU, Activation::ReLU, Activation::Sigmoid};
  model.discriminator = init_network(ddims, dacts, rng);

  if (variant == GanVariant::SkipGan) model.skip = SkipState{0.0};
  return model;
}

/// [lead | x] for the generator, checking shapes against the model.
inline Matrix generator_input(const GanModel& model, const Matrix& x, const Matrix& lead) {
  if (x.cols() != model.feature_dim) {
    throw DimensionError("generator input: model has " + std::to_string(model.feature_dim) +
                         " features, batch has " + std::to_string(x.cols()));
  }
  if (lead.rows() != x.rows() || lead.cols() != model.lead_dim()) {
    throw DimensionError("generator input: lead block is " + std::to_string(lead.rows()) + "x" +
                         std::to_string(lead.cols()) + ", expected " + std::to_string(x.rows()) + "x" +
                         std::to_string(model.lead_dim()));
  }
  return hconcat(lead, x);
}

/// y_gamma for a batch. `lead` holds y_pi (mGAN/skipGAN) or caller-drawn
/// noise (cGAN), one row per batch row.
inline Vector generator_output(const GanModel& model, const Matrix& x, const Matrix& lead) {
  const Matrix out = forward(model.generator, generator_input(model, x, lead));
  return Vector(out.values().begin(), out.values().end());
}

inline Vector generator_output(const GanModel& model, const Matrix& x, std::span<const double> lead) {
  return generator_output(model, x, Matrix::column(lead));
}

/// The response column the discriminator sees for generated rows, before the
/// features are attached: y_gamma, or the skip blend (1-w) y_pi + w y_gamma.
inline Vector fake_response(const GanModel& model, std::span<const double> y_gamma,
                            std::span<const double> y_prior) {
  if (model.variant != GanVariant::SkipGan) {
    if (model.skip) throw ModelError("discriminator input: skip state on a non-skip model");
    return Vector(y_gamma.begin(), y_gamma.end());
  }
  if (!model.skip) throw ModelError("discriminator input: skipGAN model has no skip state");
  if (y_prior.size() != y_gamma.size()) throw DimensionError("discriminator input: y_pi/y_gamma length mismatch");
  const double w = model.skip->weight();
  Vector out(y_gamma.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - w) * y_prior[i] + w * y_gamma[i];
  return out;
}

/// [response | x] for a generated batch.
inline Matrix discriminator_input(const GanModel& model, const Matrix& x, std::span<const double> y_candidate,
                                  std::span<const double> y_prior) {
  return prepend_column(fake_response(model, y_candidate, y_prior), x);
}

/// Discriminator probabilities for [y | x] rows.
inline Vector discriminate(const GanModel& model, const Matrix& x, std::span<const double> y) {
  const Matrix out = forward(model.discriminator, prepend_column(y, x));
  return Vector(out.values().begin(), out.values().end());
}

struct StepResult {
  double loss = 0.0;
  GradientSet grads;
};

/// BCE(D(real), 1) + BCE(D(fake), 0) and its gradient w.r.t. the
/// discriminator parameters.
inline StepResult discriminator_gradients(const GanModel& model, const Matrix& real_input,
                                          const Matrix& fake_input) {
  const auto& D = model.discriminator;
  const ForwardTrace real_trace = forward_trace(D, real_input);
  const ForwardTrace fake_trace = forward_trace(D, fake_input);
  const LossResult real_loss = bce_loss(real_trace.output().values(), 1.0);
  const LossResult fake_loss = bce_loss(fake_trace.output().values(), 0.0);

  StepResult out;
  out.loss = real_loss.value + fake_loss.value;
  out.grads = backward(D, real_trace, Matrix::column(real_loss.gradient));
  const GradientSet fake_grads = backward(D, fake_trace, Matrix::column(fake_loss.gradient));
  for (std::size_t l = 0; l < out.grads.weights.size(); ++l) {
    auto gw = out.grads.weights[l].values();
    const auto fw = fake_grads.weights[l].values();
    for (std::size_t k = 0; k < gw.size(); ++k) gw[k] += fw[k];
    for (std::size_t k = 0; k < out.grads.biases[l].size(); ++k) out.grads.biases[l][k] += fake_grads.biases[l][k];
  }
  out.grads.input = Matrix();
  return out;
}

/// Non-saturating generator loss BCE(D(fake), 1), differentiated through the
/// (frozen) discriminator and the skip blend into the generator parameters
/// and theta_w. `trace` must come from forward_trace(model.generator, ...).
inline StepResult generator_gradients(const GanModel& model, const Matrix& x, const ForwardTrace& trace,
                                      std::span<const double> y_prior) {
  const auto y_gamma_values = trace.output().values();
  const Vector y_gamma(y_gamma_values.begin(), y_gamma_values.end());
  const Matrix d_in = discriminator_input(model, x, y_gamma, y_prior);
  const ForwardTrace d_trace = forward_trace(model.discriminator, d_in);
  const LossResult loss = bce_loss(d_trace.output().values(), 1.0);
  const GradientSet d_grads = backward(model.discriminator, d_trace, Matrix::column(loss.gradient));

  const std::size_t n = x.rows();
  Matrix upstream(n, 1);
  std::optional<double> skip_grad;
  if (model.variant == GanVariant::SkipGan) {
    const double w = model.skip->weight();
    double g_theta = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double g_blend = d_grads.input(i, 0);
      upstream(i, 0) = w * g_blend;
      g_theta += g_blend * (y_gamma[i] - y_prior[i]);
    }
    skip_grad = g_theta * w * (1.0 - w);
  } else {
    for (std::size_t i = 0; i < n; ++i) upstream(i, 0) = d_grads.input(i, 0);
  }

  StepResult out;
  out.loss = loss.value;
  out.grads = backward(model.generator, trace, upstream);
  out.grads.skip = skip_grad;
  return out;
}

inline StepResult generator_gradients(const GanModel& model, const Matrix& x, const Matrix& lead,
                                      std::span<const double> y_prior) {
  return generator_gradients(model, x, forward_trace(model.generator, generator_input(model, x, lead)), y_prior);
}

namespace detail {

inline Matrix draw_noise(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix out(rows, cols);
  for (double& v : out.values()) v = standard_normal(rng);
  return out;
}

inline void require_sampler(const GanModel& model, const PriorSampler* sampler, const char* what) {
  if (model.uses_prior() && sampler == nullptr) {
    throw ModelError(std::string(what) + ": " + to_string(model.variant) + " needs a fitted prior sampler");
  }
}

}  // namespace detail

/// Adversarial training. Per epoch the rows are shuffled; per batch y_pi is
/// refreshed from `sampler` (mGAN/skipGAN) or noise is drawn (cGAN), the
/// discriminator takes `d_steps_per_g_step` steps and the generator (with
/// theta_w for skipGAN) one step. Throws DivergenceError on a non-finite
/// loss; parameters then hold the last finite update.
inline void train(GanModel& model, const Matrix& X, std::span<const double> y, const PriorSampler* sampler,
                  const GanConfig& config, Rng& rng) {
  config.validate();
  detail::require_sampler(model, sampler, "train");
  if (X.rows() != y.size()) throw DimensionError("train: row/target count mismatch");
  if (X.cols() != model.feature_dim) {
    throw DimensionError("train: model has " + std::to_string(model.feature_dim) + " features, data has " +
                         std::to_string(X.cols()));
  }
  const std::size_t n = X.rows();
  if (n == 0) throw DataError("train: empty training set");

  OptimizerState d_opt = make_optimizer(config.learning_rate);
  OptimizerState g_opt = make_optimizer(config.learning_rate);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    Vector epoch_prior;
    if (model.uses_prior() && config.refresh == PriorRefresh::PerEpoch) epoch_prior = sampler->sample(X, rng);

    double d_sum = 0.0;
    double g_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, stop - start);
      const Matrix xb = X.select_rows(idx);
      Vector yb(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) yb[i] = y[idx[i]];

      Vector y_prior;
      Matrix lead;
      if (model.uses_prior()) {
        if (config.refresh == PriorRefresh::PerEpoch) {
          y_prior.resize(idx.size());
          for (std::size_t i = 0; i < idx.size(); ++i) y_prior[i] = epoch_prior[idx[i]];
        } else {
          y_prior = sampler->sample(xb, rng);
        }
        lead = Matrix::column(y_prior);
      } else {
        lead = detail::draw_noise(idx.size(), model.noise_dim, rng);
      }

      const ForwardTrace g_trace = forward_trace(model.generator, generator_input(model, xb, lead));
      const auto gv = g_trace.output().values();
      const Vector y_gamma(gv.begin(), gv.end());
      const Matrix real_in = prepend_column(yb, xb);
      const Matrix fake_in = discriminator_input(model, xb, y_gamma, y_prior);

      double d_loss = 0.0;
      for (std::size_t k = 0; k < config.d_steps_per_g_step; ++k) {
        StepResult d_step = discriminator_gradients(model, real_in, fake_in);
        if (!std::isfinite(d_step.loss)) {
          throw DivergenceError("train: non-finite discriminator loss at epoch " + std::to_string(epoch) +
                                ", batch " + std::to_string(batches));
        }
        adam_step(model.discriminator, d_step.grads, d_opt);
        d_loss = d_step.loss;
      }

      StepResult g_step = generator_gradients(model, xb, g_trace, y_prior);
      if (!std::isfinite(g_step.loss)) {
        throw DivergenceError("train: non-finite generator loss at epoch " + std::to_string(epoch) + ", batch " +
                              std::to_string(batches));
      }
      auto params = parameter_spans(model.generator);
      auto grads = gradient_spans(g_step.grads);
      if (model.skip) {
        params.emplace_back(&model.skip->theta_w, 1);
        grads.emplace_back(&*g_step.grads.skip, 1);
      }
      adam_step(std::span<const std::span<double>>(params), std::span<const std::span<const double>>(grads), g_opt);

      d_sum += d_loss;
      g_sum += g_step.loss;
      ++batches;
    }

    EpochRecord rec{epoch, d_sum / static_cast<double>(batches), g_sum / static_cast<double>(batches), std::nullopt};
    if (model.skip) rec.w_gan = model.skip->weight();
    model.history.push_back(rec);
  }
}

/// Which response predict() reports for skipGAN.
enum class EvalOutput { Blend, Generator };

/// Point predictions on `x` with a fresh prior draw (or fresh noise for cGAN).
inline Vector predict(const GanModel& model, const Matrix& x, const PriorSampler* sampler, Rng& rng,
                      EvalOutput output = EvalOutput::Blend) {
  detail::require_sampler(model, sampler, "predict");
  if (!model.uses_prior()) {
    return generator_output(model, x, detail::draw_noise(x.rows(), model.noise_dim, rng));
  }
  const Vector y_prior = sampler->sample(x, rng);
  const Vector y_gamma = generator_output(model, x, y_prior);
  if (model.variant == GanVariant::SkipGan && output == EvalOutput::Blend) {
    return fake_response(model, y_gamma, y_prior);
  }
  return y_gamma;
}

struct PosteriorSamples {
  Matrix draws;  // rows x n_draws
  Vector mean;
  Vector stddev;
};

/// Repeated predict() calls, one column per draw, with per-row summaries.
inline PosteriorSamples posterior_predictive(const GanModel& model, const Matrix& x, const PriorSampler* sampler,
                                             Rng& rng, std::size_t n_draws,
                                             EvalOutput output = EvalOutput::Blend) {
  if (n_draws < 1) throw ModelError("posterior_predictive: n_draws must be at least 1");
  PosteriorSamples out{Matrix(x.rows(), n_draws), Vector(x.rows(), 0.0), Vector(x.rows(), 0.0)};
  for (std::size_t d = 0; d < n_draws; ++d) {
    const Vector draw = predict(model, x, sampler, rng, output);
    for (std::size_t r = 0; r < x.rows(); ++r) out.draws(r, d) = draw[r];
  }
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = out.draws.row(r);
    const double mean = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(n_draws);
    double ss = 0.0;
    for (double v : row) ss += (v - mean) * (v - mean);
    out.mean[r] = mean;
    out.stddev[r] = n_draws > 1 ? std::sqrt(ss / static_cast<double>(n_draws - 1)) : 0.0;
  }
  return out;
}

}  // namespace abcgan
