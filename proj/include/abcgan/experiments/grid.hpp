#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "abcgan/experiments/cache.hpp"
#include "abcgan/experiments/run.hpp"

namespace abcgan {


struct WorkItem {
  CellSpec cell;
  std::size_t repetition = 0;
};

/// All (cell, repetition) pairs in table order: dataset, prior, noise level,
/// variant, repetition. cGAN ignores the prior's noise, so it runs once per
/// (dataset, prior) at the zero-noise level.
inline std::vector<WorkItem> enumerate_work(const ExperimentSpec& spec) {
  std::vector<WorkItem> work;
  const auto levels = enumerate_grid(spec.grid);
  for (const auto& ds : spec.datasets) {
    for (PriorKind prior : spec.priors) {
      for (const auto& noise : levels) {
        for (GanVariant v : spec.variants) {
          if (v == GanVariant::CGan) continue;
          for (std::size_t r = 0; r < spec.repetitions; ++r) work.push_back({CellSpec{ds, prior, v, noise}, r});
        }
      }
      for (GanVariant v : spec.variants) {
        if (v != GanVariant::CGan) continue;
        for (std::size_t r = 0; r < spec.repetitions; ++r) work.push_back({CellSpec{ds, prior, v, NoiseSpec{}}, r});
      }
    }
  }
  return work;
}

struct ProgressEvent {
  std::size_t done = 0;
  std::size_t total = 0;
  const RunResult* result = nullptr;
  bool from_cache = false;
};

struct GridOptions {
  std::optional<std::filesystem::path> cache_dir;
  std::size_t workers = 1;
  std::function<void(const ProgressEvent&)> progress;
};

struct GridResult {
  std::vector<RunResult> runs;  // enumerate_work order
  std::size_t computed = 0;
  std::size_t cached = 0;
};

/// Runs every (cell, repetition) of `spec`, reusing cached results when a
/// cache directory is given. Output order and values do not depend on the
/// worker count.
inline GridResult run_grid(const ExperimentSpec& spec, const DataSources& sources, const GridOptions& options = {}) {
  spec.validate();
  const auto work = enumerate_work(spec);

  std::map<std::string, PreparedData> data;
  std::map<std::pair<std::string, PriorKind>, PriorModel> priors;
  for (const auto& ds : spec.datasets) {
    data.emplace(ds, prepare_data(ds, sources, spec.master_seed));
    const auto& prepared = data.at(ds);
    for (PriorKind kind : spec.priors) {
      priors.emplace(std::make_pair(ds, kind), fit_prior(kind, prepared.train.X, prepared.train.y, spec.gbt));
    }
  }

  std::optional<ResultCache> cache;
  if (options.cache_dir) cache.emplace(*options.cache_dir);

  GridResult result;
  result.runs.resize(work.size());
  std::vector<char> from_cache(work.size(), 0);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= work.size()) return;
      {
        std::lock_guard lock(failure_mutex);
        if (failure) return;
      }
      try {
        const auto& item = work[i];
        const PreparedData& prepared = data.at(item.cell.dataset);
        const GanConfig cfg = spec.gan_for(item.cell.dataset);
        const std::string key = cache_key(prepared.fingerprint, item.cell, item.repetition, spec, cfg);
        std::optional<RunResult> hit;
        if (cache) hit = cache->load(key);
        if (hit) {
          result.runs[i] = std::move(*hit);
          from_cache[i] = 1;
        } else {
          result.runs[i] = run_single(prepared, priors.at({item.cell.dataset, item.cell.prior}), item.cell, cfg,
                                      item.repetition, spec.master_seed, spec.eval_output);
          if (cache) cache->store(key, result.runs[i]);
        }
        const std::size_t d = done.fetch_add(1) + 1;
        if (options.progress) {
          std::lock_guard lock(progress_mutex);
          options.progress(ProgressEvent{d, work.size(), &result.runs[i], from_cache[i] != 0});
        }
      } catch (const std::exception& e) {
        std::lock_guard lock(failure_mutex);
        if (!failure) {
          try {
            throw Error("cell " + describe(work[i].cell) + " rep " + std::to_string(work[i].repetition) + ": " +
                        e.what());
          } catch (...) {
            failure = std::current_exception();
          }
        }
      }
    }
  };

  const std::size_t n_workers = std::max<std::size_t>(1, std::min(options.workers, work.size()));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_workers);
    for (std::size_t t = 0; t < n_workers; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  for (char c : from_cache) (c ? result.cached : result.computed) += 1;
  return result;
}

}  // namespace abcgan
