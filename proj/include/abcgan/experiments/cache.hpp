#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <system_error>
#include <thread>
#include <vector>

#include <json.hpp>

#include "abcgan/error.hpp"
#include "abcgan/experiments/format.hpp"
#include "abcgan/experiments/run.hpp"
#include "abcgan/random.hpp"

namespace abcgan {

inline constexpr int kRunFormatVersion = 1;

inline nlohmann::json to_json(const RunResult& r) {
  nlohmann::json j;
  j["format"] = "abcgan-run";
  j["version"] = kRunFormatVersion;
  j["cell"] = {{"dataset", r.cell.dataset},
               {"prior", to_string(r.cell.prior)},
               {"variant", to_string(r.cell.variant)},
               {"variance", r.cell.noise.sigma2},
               {"bias", r.cell.noise.mu}};
  j["repetition"] = r.repetition;
  j["seed"] = std::to_string(r.seed);  // as text: JSON readers often truncate 64-bit integers
  j["mae_prior"] = std::isfinite(r.mae_prior) ? nlohmann::json(r.mae_prior) : nlohmann::json(nullptr);
  j["mae_gan"] = std::isfinite(r.mae_gan) ? nlohmann::json(r.mae_gan) : nlohmann::json(nullptr);
  j["skip_weight"] = r.skip_weight ? nlohmann::json(*r.skip_weight) : nlohmann::json(nullptr);
  j["diverged"] = r.diverged;
  j["diagnostic"] = r.diagnostic;
  return j;
}

inline RunResult run_result_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "abcgan-run") throw IoError("not an abcgan-run record");
    if (j.at("version").get<int>() != kRunFormatVersion) {
      throw IoError("unsupported run record version " + std::to_string(j.at("version").get<int>()));
    }
    RunResult r;
    const auto& c = j.at("cell");
    r.cell.dataset = c.at("dataset").get<std::string>();
    r.cell.prior = prior_kind_from_string(c.at("prior").get<std::string>());
    r.cell.variant = gan_variant_from_string(c.at("variant").get<std::string>());
    r.cell.noise = NoiseSpec{c.at("variance").get<double>(), c.at("bias").get<double>()};
    r.repetition = j.at("repetition").get<std::size_t>();
    r.seed = std::stoull(j.at("seed").get<std::string>());
    const auto num = [](const nlohmann::json& v) {
      return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
    };
    r.mae_prior = num(j.at("mae_prior"));
    r.mae_gan = num(j.at("mae_gan"));
    if (!j.at("skip_weight").is_null()) r.skip_weight = j.at("skip_weight").get<double>();
    r.diverged = j.at("diverged").get<bool>();
    r.diagnostic = j.value("diagnostic", std::string());
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed run record: ") + e.what());
  } catch (const Error& e) {
    throw IoError(std::string("malformed run record: ") + e.what());
  }
}

/// Content hash of everything that determines a run's outcome.
inline std::string cache_key(const std::string& data_fingerprint, const CellSpec& cell, std::size_t repetition,
                             const ExperimentSpec& spec, const GanConfig& gan) {
  StableHash h;
  h.add("abcgan-run-v1")
      .add(data_fingerprint)
      .add(to_string(cell.prior))
      .add(to_string(cell.variant))
      .add(format_roundtrip(cell.noise.sigma2))
      .add(format_roundtrip(cell.noise.mu))
      .add(static_cast<std::uint64_t>(repetition))
      .add(spec.master_seed)
      .add(static_cast<std::uint64_t>(gan.epochs))
      .add(static_cast<std::uint64_t>(gan.batch_size))
      .add(format_roundtrip(gan.learning_rate))
      .add(static_cast<std::uint64_t>(gan.noise_dim))
      .add(static_cast<std::uint64_t>(gan.d_steps_per_g_step))
      .add(gan.refresh == PriorRefresh::PerBatch ? "batch" : "epoch")
      .add(spec.eval_output == EvalOutput::Blend ? "blend" : "generator");
  if (cell.prior == PriorKind::BoostedTrees) {
    h.add(static_cast<std::uint64_t>(spec.gbt.n_trees))
        .add(static_cast<std::uint64_t>(spec.gbt.max_depth))
        .add(format_roundtrip(spec.gbt.shrinkage))
        .add(static_cast<std::uint64_t>(spec.gbt.min_leaf));
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h.value()));
  return buf;
}

/// Writes `text` to a sibling temp file and renames it over `path`, so a
/// reader never sees a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  std::ostringstream suffix;
  suffix << ".tmp." << std::this_thread::get_id() << "." << std::random_device{}();
  const std::filesystem::path tmp = path.string() + suffix.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out << text;
    out.flush();
    if (!out) throw IoError("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move result into '" + path.string() + "'");
  }
}

/// Directory of per-run JSON records named <key>.json. Append-only.
class ResultCache {
 public:
  explicit ResultCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec || !std::filesystem::is_directory(dir_)) throw IoError("cannot create cache directory '" + dir_.string() + "'");
  }

  [[nodiscard]] std::filesystem::path path_for(const std::string& key) const { return dir_ / (key + ".json"); }

  [[nodiscard]] std::optional<RunResult> load(const std::string& key) const {
    const auto path = path_for(key);
    if (!std::filesystem::exists(path)) return std::nullopt;
    std::ifstream in(path);
    if (!in) throw IoError("cannot read cache entry '" + path.string() + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw IoError("corrupt cache entry '" + path.string() + "': " + e.what());
    }
    if (j.value("key", std::string()) != key) throw IoError("cache entry '" + path.string() + "' has a mismatched key");
    return run_result_from_json(j);
  }

  void store(const std::string& key, const RunResult& r) const {
    nlohmann::json j = to_json(r);
    j["key"] = key;
    write_file_atomic(path_for(key), j.dump(2) + "\n");
  }

  /// Every record in the directory, sorted by file name.
  [[nodiscard]] std::vector<RunResult> load_all() const {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<RunResult> out;
    for (const auto& f : files) {
      std::ifstream in(f);
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw IoError("corrupt cache entry '" + f.string() + "': " + e.what());
      }
      out.push_back(run_result_from_json(j));
    }
    return out;
  }

  [[nodiscard]] const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

}  // namespace abcgan
