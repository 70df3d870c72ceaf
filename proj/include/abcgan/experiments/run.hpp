#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "abcgan/data/dataset.hpp"
#include "abcgan/error.hpp"
#include "abcgan/experiments/format.hpp"
#include "abcgan/experiments/metrics.hpp"
#include "abcgan/gan/gan.hpp"
#include "abcgan/misspec.hpp"
#include "abcgan/priors/prior_model.hpp"
#include "abcgan/random.hpp"

namespace abcgan {

// ---------------------------------------------------------------------------
// Data acquisition

/// Where each dataset id comes from.
struct DataSources {
  std::size_t friedman3_n = 100;
  std::uint64_t friedman3_seed = 2023;
  double friedman3_noise = 1.0;
  std::filesystem::path friedman3_path;  // read this CSV (target "y") instead of generating
  std::filesystem::path boston_path = "data/boston.csv";
  std::filesystem::path energy_path = "data/energy.csv";
  // synthetic linear data, y = <x, coef> + noise
  std::size_t linear_n = 500;
  std::uint64_t linear_seed = 2024;
  double linear_noise = 1.0;
  Vector linear_coefficients{0.5, -0.3, 0.2};
};

inline const std::vector<std::string>& known_datasets() {
  static const std::vector<std::string> ids{"friedman3", "boston", "energy", "linear"};
  return ids;
}

inline void check_dataset_id(const std::string& id) {
  for (const auto& k : known_datasets())
    if (k == id) return;
  throw ConfigError("unknown dataset '" + id + "' (expected friedman3, boston, energy or linear)");
}

/// Learning rate used when the config leaves it unset: 1e-3 for Friedman3,
/// 1e-2 otherwise.
inline double default_learning_rate(const std::string& dataset) { return dataset == "friedman3" ? 1e-3 : 1e-2; }

namespace detail {

inline std::string file_fingerprint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  StableHash h;
  h.add(buf.str());
  return "file:" + std::to_string(h.value());
}

inline std::uint64_t bits(double v) { return std::bit_cast<std::uint64_t>(v); }

}  // namespace detail

inline Dataset load_dataset(const std::string& id, const DataSources& src) {
  check_dataset_id(id);
  if (id == "friedman3") {
    if (!src.friedman3_path.empty()) return load_csv(src.friedman3_path, "y", {}, "friedman3");
    Rng rng(src.friedman3_seed);
    return gen_friedman3(src.friedman3_n, rng, src.friedman3_noise);
  }
  if (id == "boston") return load_boston(src.boston_path);
  if (id == "energy") return load_energy(src.energy_path);
  Rng rng(src.linear_seed);
  return gen_linear(src.linear_n, rng, src.linear_coefficients, 0.0, src.linear_noise);
}

/// Text identifying the exact data a dataset id resolves to; part of cache keys.
inline std::string dataset_fingerprint(const std::string& id, const DataSources& src) {
  check_dataset_id(id);
  std::string out = id + ":";
  if (id == "friedman3") {
    if (!src.friedman3_path.empty()) return out + detail::file_fingerprint(src.friedman3_path);
    return out + "gen:" + std::to_string(src.friedman3_n) + ":" + std::to_string(src.friedman3_seed) + ":" +
           format_roundtrip(src.friedman3_noise);
  }
  if (id == "boston") return out + detail::file_fingerprint(src.boston_path);
  if (id == "energy") return out + detail::file_fingerprint(src.energy_path);
  out += "gen:" + std::to_string(src.linear_n) + ":" + std::to_string(src.linear_seed) + ":" +
         format_roundtrip(src.linear_noise);
  for (double c : src.linear_coefficients) out += ":" + format_roundtrip(c);
  return out;
}

/// A dataset split once and standardized with training statistics.
struct PreparedData {
  std::string id;
  std::string fingerprint;
  SplitDataset split;  // raw scale
  Standardizer scaler;
  Dataset train;       // standardized
  Dataset valid;       // standardized

  /// Unit likelihood noise of the linear prior, expressed on the standardized scale.
  [[nodiscard]] double likelihood_sd() const { return 1.0 / scaler.y_std(); }

  [[nodiscard]] PriorSampler sampler(const PriorModel& prior, const NoiseSpec& noise) const {
    return PriorSampler(prior, noise, likelihood_sd());
  }
};

inline std::uint64_t split_seed(std::uint64_t master_seed, const std::string& dataset) {
  return StableHash().add("split").add(master_seed).add(dataset).value();
}

inline PreparedData prepare_data(const std::string& id, const DataSources& src, std::uint64_t master_seed) {
  Dataset ds = load_dataset(id, src);
  ds.validate();
  PreparedData out;
  out.id = id;
  out.fingerprint = dataset_fingerprint(id, src);
  out.split = split_80_20(ds, split_seed(master_seed, id));
  out.scaler = Standardizer::fit(out.split.train);
  out.train = out.scaler.apply(out.split.train);
  out.valid = out.scaler.apply(out.split.valid);
  return out;
}

// ---------------------------------------------------------------------------
// Single runs

/// Everything that defines an experiment sweep.
struct ExperimentSpec {
  std::vector<std::string> datasets{"friedman3"};
  std::vector<PriorKind> priors{PriorKind::Linear};
  std::vector<GanVariant> variants{GanVariant::MGan, GanVariant::SkipGan};
  MisspecGrid grid;
  std::size_t repetitions = 10;
  GanConfig gan;
  std::optional<double> learning_rate;  // unset: default_learning_rate(dataset)
  GbtConfig gbt;
  std::uint64_t master_seed = 2023;
  EvalOutput eval_output = EvalOutput::Blend;

  [[nodiscard]] GanConfig gan_for(const std::string& dataset) const {
    GanConfig cfg = gan;
    cfg.learning_rate = learning_rate.value_or(default_learning_rate(dataset));
    return cfg;
  }

  void validate() const {
    if (repetitions < 1) throw ConfigError("experiment.repetitions must be at least 1");
    if (datasets.empty()) throw ConfigError("experiment.datasets is empty");
    if (priors.empty()) throw ConfigError("experiment.priors is empty");
    if (variants.empty()) throw ConfigError("experiment.variants is empty");
    for (const auto& d : datasets) check_dataset_id(d);
    (void)enumerate_grid(grid);
    gan_for(datasets.front()).validate();
  }
};

/// One table cell: dataset x prior x variant x noise level.
struct CellSpec {
  std::string dataset;
  PriorKind prior = PriorKind::Linear;
  GanVariant variant = GanVariant::MGan;
  NoiseSpec noise;

  friend bool operator==(const CellSpec&, const CellSpec&) = default;
};

inline std::string describe(const CellSpec& c) {
  return c.dataset + "," + to_string(c.prior) + "," + to_string(c.variant) + "," + format_roundtrip(c.noise.sigma2) +
         "," + format_roundtrip(c.noise.mu);
}

struct RunResult {
  CellSpec cell;
  std::size_t repetition = 0;
  std::uint64_t seed = 0;
  double mae_prior = 0.0;
  double mae_gan = 0.0;
  std::optional<double> skip_weight;
  bool diverged = false;
  std::string diagnostic;

  friend bool operator==(const RunResult&, const RunResult&) = default;
};

/// Training seed of one repetition of one cell.
inline std::uint64_t run_seed(std::uint64_t master_seed, const CellSpec& cell, std::size_t repetition) {
  return StableHash()
      .add("run")
      .add(master_seed)
      .add(cell.dataset)
      .add(to_string(cell.prior))
      .add(to_string(cell.variant))
      .add(detail::bits(cell.noise.sigma2))
      .add(detail::bits(cell.noise.mu))
      .add(static_cast<std::uint64_t>(repetition))
      .value();
}

/// Seed of the prior's validation draw. It leaves out the variant, so every
/// variant in a cell is compared against the same prior draw.
inline std::uint64_t prior_eval_seed(std::uint64_t master_seed, const CellSpec& cell, std::size_t repetition) {
  return StableHash()
      .add("prior-eval")
      .add(master_seed)
      .add(cell.dataset)
      .add(to_string(cell.prior))
      .add(detail::bits(cell.noise.sigma2))
      .add(detail::bits(cell.noise.mu))
      .add(static_cast<std::uint64_t>(repetition))
      .value();
}

/// Fits the prior on the training split, trains the cell's GAN and scores
/// both on the validation split. A diverged training run is reported with
/// diverged = true and the MAE of the last finite parameters.
inline RunResult run_single(const PreparedData& data, const PriorModel& prior, const CellSpec& cell,
                            const GanConfig& config, std::size_t repetition, std::uint64_t master_seed,
                            EvalOutput eval_output = EvalOutput::Blend) {
  RunResult out;
  out.cell = cell;
  out.repetition = repetition;
  out.seed = run_seed(master_seed, cell, repetition);

  const PriorSampler sampler = data.sampler(prior, cell.noise);
  {
    Rng prior_rng(prior_eval_seed(master_seed, cell, repetition));
    out.mae_prior = mae(data.valid.y, sampler.sample(data.valid.X, prior_rng));
  }

  Rng rng(out.seed);
  GanModel model = build_gan(cell.variant, data.train.features(), config, rng);
  try {
    train(model, data.train.X, data.train.y, &sampler, config, rng);
  } catch (const DivergenceError& e) {
    out.diverged = true;
    out.diagnostic = e.what();
  }
  Rng eval_rng(StableHash().add("gan-eval").add(out.seed).value());
  const Vector yhat = predict(model, data.valid.X, &sampler, eval_rng, eval_output);
  out.mae_gan = mae(data.valid.y, yhat);
  if (!std::isfinite(out.mae_gan) && !out.diverged) {
    out.diverged = true;
    out.diagnostic = "non-finite validation predictions";
  }
  if (model.skip) out.skip_weight = model.skip->display_weight();
  return out;
}

}  // namespace abcgan
