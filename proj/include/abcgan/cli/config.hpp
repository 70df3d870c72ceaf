#pragma once

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "abcgan/error.hpp"
#include "abcgan/experiments/grid.hpp"
#include "abcgan/experiments/run.hpp"

namespace abcgan {

/// Everything a command needs: the sweep definition, data locations, output
/// location and reporting switches.
struct Config {
  ExperimentSpec experiment;
  DataSources data;
  std::filesystem::path output_dir = "results";
  std::size_t workers = 1;
  bool include_diverged = true;
  bool outlier_filter = false;
};

namespace detail {

inline std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

inline std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

class ValueParser {
 public:
  explicit ValueParser(std::string key) : key_(std::move(key)) {}

  [[nodiscard]] double real(const std::string& v) const {
    double out = 0.0;
    if (!parse_double(v, out)) fail(v, "a number");
    return out;
  }

  [[nodiscard]] std::uint64_t u64(const std::string& v) const {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) fail(v, "a non-negative integer");
    return out;
  }

  [[nodiscard]] std::size_t count(const std::string& v) const { return static_cast<std::size_t>(u64(v)); }

  [[nodiscard]] std::size_t positive(const std::string& v) const {
    const std::size_t n = count(v);
    if (n == 0) fail(v, "a positive integer");
    return n;
  }

  [[nodiscard]] bool boolean(const std::string& v) const {
    if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
    if (v == "false" || v == "no" || v == "0" || v == "off") return false;
    fail(v, "true or false");
    return false;
  }

  [[nodiscard]] std::vector<double> reals(const std::string& v) const {
    std::vector<double> out;
    for (const auto& item : split_list(v)) out.push_back(real(item));
    if (out.empty()) fail(v, "a non-empty list of numbers");
    return out;
  }

  [[noreturn]] void fail(const std::string& v, const char* expected) const {
    throw ConfigError("config key '" + key_ + "': expected " + expected + ", got '" + v + "'");
  }

 private:
  std::string key_;
};

}  // namespace detail

/// Parses the sectioned key = value format (see docs/config.md). Relative
/// paths are resolved against `base_dir`. Unknown sections and keys are
/// rejected with their name.
inline Config parse_config(std::istream& in, const std::filesystem::path& base_dir = {},
                           const std::string& source = "config") {
  Config cfg;
  using Setter = std::function<void(const std::string&, const detail::ValueParser&)>;
  const auto path_of = [&](const std::string& v) {
    std::filesystem::path p(v);
    return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  };

  std::map<std::string, Setter> keys{
      {"experiment.datasets",
       [&](const std::string& v, const auto& p) {
         cfg.experiment.datasets = detail::split_list(v);
         if (cfg.experiment.datasets.empty()) p.fail(v, "a non-empty dataset list");
         for (const auto& d : cfg.experiment.datasets) check_dataset_id(d);
       }},
      {"experiment.priors",
       [&](const std::string& v, const auto& p) {
         cfg.experiment.priors.clear();
         for (const auto& s : detail::split_list(v)) cfg.experiment.priors.push_back(prior_kind_from_string(s));
         if (cfg.experiment.priors.empty()) p.fail(v, "a non-empty prior list");
       }},
      {"experiment.variants",
       [&](const std::string& v, const auto& p) {
         cfg.experiment.variants.clear();
         for (const auto& s : detail::split_list(v)) cfg.experiment.variants.push_back(gan_variant_from_string(s));
         if (cfg.experiment.variants.empty()) p.fail(v, "a non-empty variant list");
       }},
      {"experiment.repetitions", [&](const std::string& v, const auto& p) { cfg.experiment.repetitions = p.positive(v); }},
      {"experiment.master_seed", [&](const std::string& v, const auto& p) { cfg.experiment.master_seed = p.u64(v); }},
      {"grid.variances",
       [&](const std::string& v, const auto& p) {
         cfg.experiment.grid.variances = p.reals(v);
         for (double x : cfg.experiment.grid.variances)
           if (x < 0) p.fail(v, "non-negative variances");
       }},
      {"grid.biases", [&](const std::string& v, const auto& p) { cfg.experiment.grid.biases = p.reals(v); }},
      {"gan.epochs", [&](const std::string& v, const auto& p) { cfg.experiment.gan.epochs = p.count(v); }},
      {"gan.batch_size", [&](const std::string& v, const auto& p) { cfg.experiment.gan.batch_size = p.positive(v); }},
      {"gan.learning_rate",
       [&](const std::string& v, const auto& p) {
         const double lr = p.real(v);
         if (!(lr > 0)) p.fail(v, "a positive number");
         cfg.experiment.learning_rate = lr;
       }},
      {"gan.noise_dim", [&](const std::string& v, const auto& p) { cfg.experiment.gan.noise_dim = p.positive(v); }},
      {"gan.d_steps_per_g_step",
       [&](const std::string& v, const auto& p) { cfg.experiment.gan.d_steps_per_g_step = p.positive(v); }},
      {"gan.prior_refresh",
       [&](const std::string& v, const auto& p) {
         if (v == "batch") cfg.experiment.gan.refresh = PriorRefresh::PerBatch;
         else if (v == "epoch") cfg.experiment.gan.refresh = PriorRefresh::PerEpoch;
         else p.fail(v, "batch or epoch");
       }},
      {"gan.eval_output",
       [&](const std::string& v, const auto& p) {
         if (v == "blend") cfg.experiment.eval_output = EvalOutput::Blend;
         else if (v == "generator") cfg.experiment.eval_output = EvalOutput::Generator;
         else p.fail(v, "blend or generator");
       }},
      {"gbt.n_trees", [&](const std::string& v, const auto& p) { cfg.experiment.gbt.n_trees = p.positive(v); }},
      {"gbt.max_depth", [&](const std::string& v, const auto& p) { cfg.experiment.gbt.max_depth = p.count(v); }},
      {"gbt.shrinkage",
       [&](const std::string& v, const auto& p) {
         const double s = p.real(v);
         if (!(s > 0 && s <= 1)) p.fail(v, "a number in (0, 1]");
         cfg.experiment.gbt.shrinkage = s;
       }},
      {"gbt.min_leaf", [&](const std::string& v, const auto& p) { cfg.experiment.gbt.min_leaf = p.positive(v); }},
      {"data.friedman3_n", [&](const std::string& v, const auto& p) { cfg.data.friedman3_n = p.positive(v); }},
      {"data.friedman3_seed", [&](const std::string& v, const auto& p) { cfg.data.friedman3_seed = p.u64(v); }},
      {"data.friedman3_noise", [&](const std::string& v, const auto& p) { cfg.data.friedman3_noise = p.real(v); }},
      {"data.friedman3_path", [&](const std::string& v, const auto&) { cfg.data.friedman3_path = path_of(v); }},
      {"data.boston_path", [&](const std::string& v, const auto&) { cfg.data.boston_path = path_of(v); }},
      {"data.energy_path", [&](const std::string& v, const auto&) { cfg.data.energy_path = path_of(v); }},
      {"data.linear_n", [&](const std::string& v, const auto& p) { cfg.data.linear_n = p.positive(v); }},
      {"data.linear_seed", [&](const std::string& v, const auto& p) { cfg.data.linear_seed = p.u64(v); }},
      {"data.linear_noise", [&](const std::string& v, const auto& p) { cfg.data.linear_noise = p.real(v); }},
      {"data.linear_coefficients", [&](const std::string& v, const auto& p) { cfg.data.linear_coefficients = p.reals(v); }},
      {"output.dir", [&](const std::string& v, const auto&) { cfg.output_dir = path_of(v); }},
      {"output.workers", [&](const std::string& v, const auto& p) { cfg.workers = p.positive(v); }},
      {"output.include_diverged", [&](const std::string& v, const auto& p) { cfg.include_diverged = p.boolean(v); }},
      {"output.outlier_filter", [&](const std::string& v, const auto& p) { cfg.outlier_filter = p.boolean(v); }},
  };
  std::set<std::string> sections;
  for (const auto& [k, _] : keys) sections.insert(k.substr(0, k.find('.')));

  std::set<std::string> seen;
  std::string section;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    std::string text = detail::trim(line);
    if (text.empty() || text[0] == '#' || text[0] == ';') continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw ConfigError(where + ": malformed section header '" + text + "'");
      section = detail::trim(std::string_view(text).substr(1, text.size() - 2));
      if (!sections.contains(section)) throw ConfigError(where + ": unknown section '[" + section + "]'");
      continue;
    }
    const std::size_t eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value', got '" + text + "'");
    const std::string key = detail::trim(std::string_view(text).substr(0, eq));
    std::string value = detail::trim(std::string_view(text).substr(eq + 1));
    if (const auto hash = value.find(" #"); hash != std::string::npos) value = detail::trim(value.substr(0, hash));
    if (section.empty()) throw ConfigError(where + ": key '" + key + "' appears before any [section]");
    const std::string full = section + "." + key;
    const auto it = keys.find(full);
    if (it == keys.end()) throw ConfigError(where + ": unknown key '" + full + "'");
    if (!seen.insert(full).second) throw ConfigError(where + ": duplicate key '" + full + "'");
    try {
      it->second(value, detail::ValueParser(full));
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  try {
    cfg.experiment.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return cfg;
}

inline Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  return parse_config(in, path.parent_path(), path.string());
}

/// ABCGAN_OUT and ABCGAN_WORKERS override the output directory and worker count.
inline void apply_environment(Config& cfg) {
  if (const char* out = std::getenv("ABCGAN_OUT"); out != nullptr && *out != '\0') cfg.output_dir = out;
  if (const char* w = std::getenv("ABCGAN_WORKERS"); w != nullptr && *w != '\0') {
    cfg.workers = detail::ValueParser("ABCGAN_WORKERS").positive(w);
  }
}

}  // namespace abcgan
