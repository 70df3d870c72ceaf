#pragma once

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "abcgan/cli/config.hpp"
#include "abcgan/data/dataset.hpp"
#include "abcgan/error.hpp"
#include "abcgan/experiments/cache.hpp"
#include "abcgan/experiments/format.hpp"
#include "abcgan/experiments/grid.hpp"
#include "abcgan/experiments/report.hpp"

namespace abcgan::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kRuntime = 2 };

/// Runs `body`, mapping configuration mistakes to exit 1 and everything
/// else that goes wrong to exit 2.
template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntime;
  }
}

struct GenDataOptions {
  std::string dataset = "friedman3";
  std::size_t n = 100;
  std::uint64_t seed = 0;
  double noise_std = 1.0;
  std::filesystem::path out;
};

inline int cmd_gen_data(const GenDataOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opt.dataset != "friedman3") throw ConfigError("gen-data: only 'friedman3' can be generated, got '" + opt.dataset + "'");
    if (opt.n < 1) throw ConfigError("gen-data: --n must be at least 1");
    if (opt.out.empty()) throw ConfigError("gen-data: --out is required");
    Rng rng(opt.seed);
    const Dataset ds = gen_friedman3(opt.n, rng, opt.noise_std);
    if (opt.out.has_parent_path()) std::filesystem::create_directories(opt.out.parent_path());
    write_csv(ds, opt.out);
    out << "wrote " << ds.rows() << " rows to " << opt.out.string() << '\n';
    return int{kOk};
  });
}

/// "dataset,prior,variant,variance,bias"
inline CellSpec parse_cell(const std::string& text) {
  const auto parts = detail::split_list(text);
  const std::string expected =
      "expected dataset,prior,variant,variance,bias with dataset in {friedman3, boston, energy, linear}, "
      "prior in {linear, gbt}, variant in {cgan, mgan, skipgan}";
  if (parts.size() != 5) throw ConfigError("--cell '" + text + "': " + expected);
  CellSpec cell;
  try {
    check_dataset_id(parts[0]);
    cell.dataset = parts[0];
    cell.prior = prior_kind_from_string(parts[1]);
    cell.variant = gan_variant_from_string(parts[2]);
    const detail::ValueParser p("--cell");
    cell.noise = NoiseSpec{p.real(parts[3]), p.real(parts[4])};
    cell.noise.validate();
  } catch (const ConfigError& e) {
    throw ConfigError("--cell '" + text + "': " + e.what() + "; " + expected);
  }
  return cell;
}

struct RunOptions {
  std::filesystem::path config;
  std::string cell;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
};

inline std::string format_run_line(const RunResult& r) {
  std::string line = "run cell=" + describe(r.cell) + " rep=" + std::to_string(r.repetition) +
                     " seed=" + std::to_string(r.seed) + " mae_prior=" + format_roundtrip(r.mae_prior) +
                     " mae_gan=" + format_roundtrip(r.mae_gan);
  if (r.skip_weight) line += " skip_weight=" + format_roundtrip(*r.skip_weight);
  line += std::string(" diverged=") + (r.diverged ? "1" : "0");
  if (!r.diagnostic.empty()) line += " (" + r.diagnostic + ")";
  return line;
}

inline Config load_command_config(const std::filesystem::path& path) {
  Config cfg = path.empty() ? Config{} : load_config(path);
  apply_environment(cfg);
  return cfg;
}

/// All repetitions of one cell; results are cached under <out>/cache.
inline int cmd_run(const RunOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    Config cfg = load_command_config(opt.config);
    if (opt.out) cfg.output_dir = *opt.out;
    ExperimentSpec spec = cfg.experiment;
    const CellSpec cell = parse_cell(opt.cell);
    if (opt.seed) spec.master_seed = *opt.seed;
    spec.datasets = {cell.dataset};
    spec.priors = {cell.prior};
    spec.variants = {cell.variant};
    spec.grid = MisspecGrid{{cell.noise.sigma2}, {cell.noise.mu}};
    if (cell.variant == GanVariant::CGan && !(cell.noise == NoiseSpec{})) {
      throw ConfigError("--cell '" + opt.cell + "': cgan ignores the prior noise; use variance 0 and bias 0");
    }

    GridOptions gopt;
    gopt.cache_dir = cfg.output_dir / "cache";
    gopt.workers = cfg.workers;
    const GridResult grid = run_grid(spec, cfg.data, gopt);
    for (const auto& r : grid.runs) out << format_run_line(r) << '\n';

    const auto tables = aggregate(grid.runs, AggregateOptions{cfg.include_diverged});
    const auto& table = tables.front();
    const ModelSummary* gan = nullptr;
    const ModelSummary* prior = nullptr;
    std::optional<double> weight;
    if (cell.variant == GanVariant::CGan) {
      gan = &*table.cgan;
      prior = &*table.baseline_prior;
    } else {
      const auto& row = table.rows.front();
      gan = cell.variant == GanVariant::MGan ? &row.mgan : &row.skipgan;
      prior = &row.prior;
      weight = row.mean_skip_weight;
    }
    out << "aggregate cell=" << describe(cell) << " reps=" << spec.repetitions
        << " mean_mae_prior=" << format_fixed(prior->mean, 4) << " mean_mae_gan=" << format_fixed(gan->mean, 4);
    if (weight) out << " mean_skip_weight=" << format_fixed(*weight, 4);
    out << " diverged=" << gan->diverged << '\n';
    return int{kOk};
  });
}

struct GridCmdOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;
  std::optional<std::size_t> workers;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

/// Full sweep with cache reuse, then tables and box-plot statistics.
inline int cmd_grid(const GridCmdOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    Config cfg = load_command_config(opt.config);
    if (opt.out) cfg.output_dir = *opt.out;
    if (opt.workers) {
      if (*opt.workers == 0) throw ConfigError("--workers must be positive");
      cfg.workers = *opt.workers;
    }
    if (opt.seed) cfg.experiment.master_seed = *opt.seed;

    GridOptions gopt;
    gopt.cache_dir = cfg.output_dir / "cache";
    gopt.workers = cfg.workers;
    if (!opt.quiet) {
      gopt.progress = [&err](const ProgressEvent& e) {
        err << "[" << e.done << "/" << e.total << "] " << describe(e.result->cell) << " rep " << e.result->repetition
            << (e.from_cache ? " (cached)" : "") << '\n';
      };
    }
    const GridResult grid = run_grid(cfg.experiment, cfg.data, gopt);
    const auto tables = aggregate(grid.runs, AggregateOptions{cfg.include_diverged});
    const auto files = write_artifacts(tables, cfg.output_dir, ArtifactOptions{{TableFormat::Markdown, TableFormat::Csv},
                                                                              cfg.outlier_filter});
    out << "runs: " << grid.runs.size() << " (computed " << grid.computed << ", cached " << grid.cached << ")\n";
    for (const auto& f : files) out << "wrote " << f.string() << '\n';
    return int{kOk};
  });
}

struct ReportOptions {
  std::filesystem::path in;
  std::optional<std::filesystem::path> out;
  std::string format = "md";
  bool outlier_filter = false;
  bool exclude_diverged = false;
};

/// Rebuilds tables and box plots from <in>/cache without training.
inline int cmd_report(const ReportOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const TableFormat format = table_format_from_string(opt.format);
    const auto cache_dir = opt.in / "cache";
    if (!std::filesystem::is_directory(cache_dir)) {
      throw DataError("report: '" + opt.in.string() + "' has no cache/ directory of results");
    }
    const auto runs = ResultCache(cache_dir).load_all();
    if (runs.empty()) throw DataError("report: no results in '" + cache_dir.string() + "'");
    const auto tables = aggregate(runs, AggregateOptions{!opt.exclude_diverged});
    write_artifacts(tables, opt.out.value_or(opt.in), ArtifactOptions{{format}, opt.outlier_filter});
    for (const auto& t : tables) {
      if (t.rows.empty()) continue;
      out << "## " << t.dataset << " / " << to_string(t.prior) << "\n\n" << emit_table(t, format) << '\n';
    }
    return int{kOk};
  });
}

}  // namespace abcgan::cli
