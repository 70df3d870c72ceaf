#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "abcgan/error.hpp"
#include "abcgan/experiments/cache.hpp"
#include "abcgan/experiments/format.hpp"
#include "abcgan/experiments/metrics.hpp"
#include "abcgan/experiments/run.hpp"

namespace abcgan {

/// MAEs of one model over the repetitions of one cell.
struct ModelSummary {
  std::vector<double> values;  // the MAEs that enter the mean, in repetition order
  std::size_t completed = 0;
  std::size_t diverged = 0;
  double mean = std::numeric_limits<double>::quiet_NaN();
  std::optional<BoxStats> box;

  [[nodiscard]] bool present() const { return completed + diverged > 0; }
};

struct AggregateResult {
  NoiseSpec noise;
  ModelSummary prior;
  ModelSummary mgan;
  ModelSummary skipgan;
  std::optional<double> mean_skip_weight;
  std::size_t divergence_count = 0;
};

/// One results table: all noise levels for a (dataset, prior) pair.
struct AggregateTable {
  std::string dataset;
  PriorKind prior = PriorKind::Linear;
  std::vector<AggregateResult> rows;  // variance desc, bias desc
  std::optional<ModelSummary> cgan;
  std::optional<ModelSummary> baseline_prior;  // unperturbed-noise prior MAE from the cGAN runs
};

struct AggregateOptions {
  // Average diverged runs that still produced a finite MAE into the mean.
  bool include_diverged = true;
};

namespace detail {

inline void finish(ModelSummary& s) {
  if (s.values.empty()) return;
  s.mean = std::accumulate(s.values.begin(), s.values.end(), 0.0) / static_cast<double>(s.values.size());
  s.box = box_stats(s.values);
}

inline void add_run(ModelSummary& s, double value, bool diverged, const AggregateOptions& opt) {
  if (diverged) {
    ++s.diverged;
    if (opt.include_diverged && std::isfinite(value)) s.values.push_back(value);
  } else {
    ++s.completed;
    s.values.push_back(value);
  }
}

}  // namespace detail

/// Groups runs into tables and averages them over repetitions. The prior
/// column takes one value per repetition (all variants of a cell share the
/// same prior draw).
inline std::vector<AggregateTable> aggregate(std::vector<RunResult> runs, const AggregateOptions& opt = {}) {
  std::sort(runs.begin(), runs.end(), [](const RunResult& a, const RunResult& b) {
    return std::make_tuple(a.cell.dataset, static_cast<int>(a.cell.prior), -a.cell.noise.sigma2, -a.cell.noise.mu,
                           static_cast<int>(a.cell.variant), a.repetition) <
           std::make_tuple(b.cell.dataset, static_cast<int>(b.cell.prior), -b.cell.noise.sigma2, -b.cell.noise.mu,
                           static_cast<int>(b.cell.variant), b.repetition);
  });

  std::vector<AggregateTable> tables;
  for (std::size_t i = 0; i < runs.size();) {
    const std::string& ds = runs[i].cell.dataset;
    const PriorKind prior = runs[i].cell.prior;
    AggregateTable table{ds, prior, {}, std::nullopt, std::nullopt};

    std::size_t j = i;
    for (; j < runs.size() && runs[j].cell.dataset == ds && runs[j].cell.prior == prior; ++j) {}

    // noise levels in sorted order
    for (std::size_t k = i; k < j;) {
      const NoiseSpec noise = runs[k].cell.noise;
      std::size_t m = k;
      for (; m < j && runs[m].cell.noise == noise; ++m) {}

      const bool only_cgan = std::all_of(runs.begin() + static_cast<std::ptrdiff_t>(k),
                                         runs.begin() + static_cast<std::ptrdiff_t>(m),
                                         [](const RunResult& r) { return r.cell.variant == GanVariant::CGan; });
      AggregateResult row;
      row.noise = noise;
      std::map<std::size_t, double> prior_by_rep;
      std::vector<double> weights;
      ModelSummary cgan;
      ModelSummary baseline;
      std::map<std::size_t, double> baseline_by_rep;
      for (std::size_t r = k; r < m; ++r) {
        const auto& run = runs[r];
        if (run.cell.variant == GanVariant::CGan) {
          detail::add_run(cgan, run.mae_gan, run.diverged, opt);
          baseline_by_rep.emplace(run.repetition, run.mae_prior);
          continue;
        }
        prior_by_rep.emplace(run.repetition, run.mae_prior);
        ModelSummary& target = run.cell.variant == GanVariant::MGan ? row.mgan : row.skipgan;
        detail::add_run(target, run.mae_gan, run.diverged, opt);
        if (run.diverged) ++row.divergence_count;
        if (run.skip_weight && (!run.diverged || opt.include_diverged)) weights.push_back(*run.skip_weight);
      }
      if (!cgan.values.empty() || cgan.diverged > 0) {
        detail::finish(cgan);
        for (const auto& [rep, v] : baseline_by_rep) detail::add_run(baseline, v, false, opt);
        detail::finish(baseline);
        table.cgan = cgan;
        table.baseline_prior = baseline;
      }
      if (!only_cgan) {
        for (const auto& [rep, v] : prior_by_rep) detail::add_run(row.prior, v, false, opt);
        detail::finish(row.prior);
        detail::finish(row.mgan);
        detail::finish(row.skipgan);
        if (!weights.empty()) {
          row.mean_skip_weight = std::accumulate(weights.begin(), weights.end(), 0.0) / static_cast<double>(weights.size());
        }
        table.rows.push_back(std::move(row));
      }
      k = m;
    }
    tables.push_back(std::move(table));
    i = j;
  }
  return tables;
}

enum class TableFormat { Markdown, Csv };

inline TableFormat table_format_from_string(const std::string& s) {
  if (s == "md" || s == "markdown") return TableFormat::Markdown;
  if (s == "csv") return TableFormat::Csv;
  throw ConfigError("unknown format '" + s + "' (expected md or csv)");
}

inline std::string table_file_name(const AggregateTable& t, TableFormat f) {
  return t.dataset + "_" + to_string(t.prior) + (f == TableFormat::Markdown ? ".md" : ".csv");
}

/// Results table. Markdown uses 4-decimal half-even rounding and bolds the
/// lowest MAE in each row; CSV keeps full precision.
inline std::string emit_table(const AggregateTable& table, TableFormat format) {
  if (table.rows.empty()) throw DataError("emit_table: no rows for " + table.dataset + "/" + to_string(table.prior));
  const bool any_div = std::any_of(table.rows.begin(), table.rows.end(),
                                   [](const AggregateResult& r) { return r.divergence_count > 0; });
  std::ostringstream out;

  if (format == TableFormat::Csv) {
    out << "variance,bias,prior_mae,mgan_mae,skipgan_mae,skipgan_weight,prior_n,mgan_n,skipgan_n,diverged\n";
    const auto num = [](const ModelSummary& s) { return s.present() ? format_roundtrip(s.mean) : std::string(); };
    for (const auto& r : table.rows) {
      out << format_roundtrip(r.noise.sigma2) << ',' << format_roundtrip(r.noise.mu) << ',' << num(r.prior) << ','
          << num(r.mgan) << ',' << num(r.skipgan) << ','
          << (r.mean_skip_weight ? format_roundtrip(*r.mean_skip_weight) : std::string()) << ','
          << r.prior.values.size() << ',' << r.mgan.values.size() << ',' << r.skipgan.values.size() << ','
          << r.divergence_count << '\n';
    }
    return out.str();
  }

  out << "| Variance | Bias | Prior model | mGAN | skipGAN | Weights skipGAN |" << (any_div ? " Diverged |" : "") << '\n';
  out << "|---|---|---|---|---|---|" << (any_div ? "---|" : "") << '\n';
  for (const auto& r : table.rows) {
    const ModelSummary* cols[] = {&r.prior, &r.mgan, &r.skipgan};
    double best = std::numeric_limits<double>::infinity();
    for (const auto* c : cols)
      if (c->present() && std::isfinite(c->mean)) best = std::min(best, c->mean);
    out << "| " << format_roundtrip(r.noise.sigma2) << " | " << format_roundtrip(r.noise.mu) << " |";
    for (const auto* c : cols) {
      if (!c->present()) {
        out << " - |";
        continue;
      }
      const std::string text = format_fixed(c->mean, 4);
      // compare the printed values so ties on display are all marked
      const bool is_best = std::isfinite(c->mean) && text == format_fixed(best, 4);
      out << ' ' << (is_best ? "**" + text + "**" : text) << " |";
    }
    out << ' ' << (r.mean_skip_weight ? format_fixed(*r.mean_skip_weight, 4) : std::string("-")) << " |";
    if (any_div) out << ' ' << r.divergence_count << " |";
    out << '\n';
  }
  if (table.cgan) {
    out << "\ncGAN MAE: " << format_fixed(table.cgan->mean, 4);
    if (table.baseline_prior) out << "; baseline prior MAE: " << format_fixed(table.baseline_prior->mean, 4);
    out << '\n';
  }
  return out.str();
}

/// MAE list of one model under one prior, for box plots.
struct BoxSeries {
  std::string prior;
  std::string model;
  std::vector<double> values;
};

/// Five-number summaries as CSV. With `filter_large`, MAEs >= 20 are dropped
/// before summarizing and the number dropped is reported.
inline std::string emit_boxplot_stats(const std::vector<BoxSeries>& series, bool filter_large = false) {
  if (series.empty()) throw DataError("emit_boxplot_stats: no series");
  std::ostringstream out;
  out << "prior,model,count,filtered,min,q1,median,q3,max,outliers\n";
  for (const auto& s : series) {
    if (s.values.empty()) throw DataError("emit_boxplot_stats: empty series " + s.prior + "/" + s.model);
    const BoxStats b = box_stats(s.values, filter_large ? std::optional<double>(20.0) : std::nullopt);
    out << s.prior << ',' << s.model << ',' << b.count << ',' << b.filtered << ',' << format_roundtrip(b.min) << ','
        << format_roundtrip(b.q1) << ',' << format_roundtrip(b.median) << ',' << format_roundtrip(b.q3) << ','
        << format_roundtrip(b.max) << ',';
    for (std::size_t i = 0; i < b.outliers.size(); ++i) out << (i ? ";" : "") << format_roundtrip(b.outliers[i]);
    out << '\n';
  }
  return out.str();
}

/// Per-dataset box-plot series over every run: prior MAEs (one per cell and
/// repetition) plus each GAN variant's MAEs. Non-finite MAEs are skipped.
inline std::map<std::string, std::vector<BoxSeries>> boxplot_series(const std::vector<AggregateTable>& tables) {
  std::map<std::string, std::vector<BoxSeries>> out;
  for (const auto& t : tables) {
    BoxSeries prior{to_string(t.prior), "prior", {}};
    BoxSeries mgan{to_string(t.prior), "mgan", {}};
    BoxSeries skip{to_string(t.prior), "skipgan", {}};
    for (const auto& r : t.rows) {
      for (double v : r.prior.values) prior.values.push_back(v);
      for (double v : r.mgan.values) mgan.values.push_back(v);
      for (double v : r.skipgan.values) skip.values.push_back(v);
    }
    auto& list = out[t.dataset];
    for (auto* s : {&prior, &mgan, &skip})
      if (!s->values.empty()) list.push_back(std::move(*s));
    if (t.cgan && !t.cgan->values.empty()) list.push_back(BoxSeries{to_string(t.prior), "cgan", t.cgan->values});
  }
  return out;
}

struct ArtifactOptions {
  std::vector<TableFormat> formats{TableFormat::Markdown, TableFormat::Csv};
  bool outlier_filter = false;
};

/// Writes tables/<dataset>_<prior>.{md,csv} and boxplots/<dataset>.csv under
/// `out_dir`; returns the files written.
inline std::vector<std::filesystem::path> write_artifacts(const std::vector<AggregateTable>& tables,
                                                          const std::filesystem::path& out_dir,
                                                          const ArtifactOptions& opt = {}) {
  if (tables.empty()) throw DataError("write_artifacts: no results to report");
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "tables", ec);
  std::filesystem::create_directories(out_dir / "boxplots", ec);
  if (ec) throw IoError("cannot create report directories under '" + out_dir.string() + "'");
  std::vector<std::filesystem::path> written;
  for (const auto& t : tables) {
    if (t.rows.empty()) continue;
    for (TableFormat f : opt.formats) {
      const auto path = out_dir / "tables" / table_file_name(t, f);
      write_file_atomic(path, emit_table(t, f));
      written.push_back(path);
    }
  }
  for (const auto& [dataset, series] : boxplot_series(tables)) {
    const auto path = out_dir / "boxplots" / (dataset + ".csv");
    write_file_atomic(path, emit_boxplot_stats(series, opt.outlier_filter));
    written.push_back(path);
  }
  return written;
}

}  // namespace abcgan
