#ifndef SPECPERTURB_EXPERIMENTS_HPP
#define SPECPERTURB_EXPERIMENTS_HPP

// Seed-averaged parameter sweeps. Trial t uses base_seed + t and derives
// every random stream from it, so results do not depend on thread count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "specperturb/completion.hpp"
#include "specperturb/embedding.hpp"
#include "specperturb/sensing.hpp"
#include "specperturb/subspace.hpp"
#include "specperturb/synthgen.hpp"

namespace specperturb {

/// SPECPERTURB_THREADS if set to a positive integer, else hardware concurrency.
inline unsigned worker_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SPECPERTURB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<unsigned>(std::min<long>(v, 1024));
  }
  return hw;
}

/// Runs fn(0..count-1) on a small pool. The first exception is rethrown.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(), std::max<std::size_t>(count, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next.store(count);
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

struct SweepRow {
  double parameter = 0.0;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single trial
  int trials = 0;
  std::vector<double> values;  // per trial, in trial order
};

inline SweepRow summarize(double parameter, std::vector<double> values) {
  SweepRow row;
  row.parameter = parameter;
  row.trials = static_cast<int>(values.size());
  if (values.empty()) return row;
  double s = 0.0;
  for (double v : values) s += v;
  row.mean = s / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - row.mean) * (v - row.mean);
    row.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  row.values = std::move(values);
  return row;
}

/// Count of adjacent pairs where the curve moves the wrong way by more than tol.
inline int count_inversions(const std::vector<SweepRow>& rows, bool increasing, double tol = 1e-12) {
  int bad = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double step = rows[i].mean - rows[i - 1].mean;
    if (increasing ? step < -tol : step > tol) ++bad;
  }
  return bad;
}

/// Streams derived from a trial seed.
enum class Stream : std::uint64_t { Basis = 1, Points = 2, Phi = 3, KMeans = 4, Mask = 5, Data = 6 };

inline std::uint64_t stream_seed(std::uint64_t trial_seed, Stream s) {
  return derive_seed(trial_seed, static_cast<std::uint64_t>(s));
}

// ---------------------------------------------------------------------------
// Measurement sweep on sparse clouds

struct MeasurementSweepConfig {
  SparseCloudSpec cloud;  // basis_seed / point_seed are replaced per trial
  std::vector<int> m_values;
  int trials = 20;
  std::uint64_t base_seed = 0;
  // Embedding mode: report |Vt_k - V_k Q|_2 against the clean embedding
  // instead of the misclassification rate.
  bool embed_mode = false;
  double p = 1.0;  // observed fraction; p < 1 completes the data before measuring
  SoftImputeOptions completion;
  PipelineOptions pipeline;
};

inline std::vector<SweepRow> measurement_sweep(const MeasurementSweepConfig& cfg) {
  require(!cfg.m_values.empty(), "measurement_sweep: empty m range");
  require(cfg.trials >= 1, "measurement_sweep: trials must be positive");
  require(cfg.p > 0.0 && cfg.p <= 1.0, "measurement_sweep: p must lie in (0, 1]");
  for (int m : cfg.m_values) require(m >= 1, "measurement_sweep: m must be positive");
  cfg.cloud.validate();
  const std::size_t nm = cfg.m_values.size();
  std::vector<std::vector<double>> grid(static_cast<std::size_t>(cfg.trials), std::vector<double>(nm));

  parallel_for(static_cast<std::size_t>(cfg.trials), [&](std::size_t t) {
    const std::uint64_t seed = cfg.base_seed + t;
    SparseCloudSpec spec = cfg.cloud;
    spec.basis_seed = stream_seed(seed, Stream::Basis);
    spec.point_seed = stream_seed(seed, Stream::Points);
    const DataMatrix clean = sparse_cloud(spec);
    Matrix source = clean.X;
    if (cfg.p < 1.0) {
      SeededRng mrng(stream_seed(seed, Stream::Mask));
      const ObservationMask mask = sample_mask(clean.X.rows(), clean.X.cols(), cfg.p, mrng);
      source = soft_impute(observe(clean.X, mask), cfg.completion).Xhat;
    }
    const std::uint64_t phi_seed = stream_seed(seed, Stream::Phi);

    if (cfg.embed_mode) {
      const int k = spec.k;
      const double sigma = median_sigma(clean.X);
      const AffinityPack a = normalize_affinity(gaussian_kernel(clean.X, sigma));
      const Matrix V = affinity_eigen(a).eigenvectors.leftCols(k);
      for (std::size_t mi = 0; mi < nm; ++mi) {
        const auto op = MeasurementOperator::gaussian(static_cast<std::size_t>(cfg.m_values[mi]),
                                                      static_cast<std::size_t>(spec.n), phi_seed);
        const AffinityPack at = perturbed_affinity(measure(source, op), sigma);
        const Matrix Vt = affinity_eigen(at).eigenvectors.leftCols(k);
        grid[t][mi] = procrustes_align(V, Vt).embed_dist_2;
      }
      return;
    }
    for (std::size_t mi = 0; mi < nm; ++mi) {
      const auto op = MeasurementOperator::gaussian(static_cast<std::size_t>(cfg.m_values[mi]),
                                                    static_cast<std::size_t>(spec.n), phi_seed);
      DataMatrix compressed = measure(clean, op);
      compressed.X = measure(source, op);
      SeededRng krng(stream_seed(seed, Stream::KMeans));
      grid[t][mi] = *cluster_pipeline(compressed, std::nullopt, spec.k, krng, cfg.pipeline).rho;
    }
  });

  std::vector<SweepRow> rows;
  for (std::size_t mi = 0; mi < nm; ++mi) {
    std::vector<double> vals;
    for (const auto& trial : grid) vals.push_back(trial[mi]);
    rows.push_back(summarize(cfg.m_values[mi], std::move(vals)));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Completion sweeps on low-rank data

struct CompletionSweepConfig {
  LowRankSpec data;  // seed replaced per trial; inflate replaced per rank
  std::vector<int> ranks;        // rank sweep: total rank r + inflate
  std::vector<double> fractions; // fraction sweep: observed p
  double p = 0.1;                // fixed p for the rank sweep
  int trials = 5;
  std::uint64_t base_seed = 0;
  SoftImputeOptions completion;
  PipelineOptions pipeline;
};

/// Completion followed by spectral clustering; returns rho.
inline double complete_and_cluster(const DataMatrix& data, double p, std::uint64_t seed, int k,
                                   const SoftImputeOptions& copts, const PipelineOptions& popts) {
  SeededRng mrng(stream_seed(seed, Stream::Mask));
  const ObservationMask mask = sample_mask(data.X.rows(), data.X.cols(), p, mrng);
  DataMatrix completed;
  completed.X = soft_impute(observe(data.X, mask), copts).Xhat;
  completed.labels = data.labels;
  SeededRng krng(stream_seed(seed, Stream::KMeans));
  return *cluster_pipeline(completed, std::nullopt, k, krng, popts).rho;
}

inline std::vector<SweepRow> rank_sweep(const CompletionSweepConfig& cfg) {
  require(!cfg.ranks.empty(), "rank_sweep: empty rank range");
  require(cfg.trials >= 1, "rank_sweep: trials must be positive");
  for (int r : cfg.ranks) require(r >= cfg.data.r, "rank_sweep: ranks must be >= the base rank r");
  const std::size_t nr = cfg.ranks.size();
  std::vector<double> flat(nr * static_cast<std::size_t>(cfg.trials));
  parallel_for(flat.size(), [&](std::size_t idx) {
    const std::size_t ri = idx % nr, t = idx / nr;
    const std::uint64_t seed = cfg.base_seed + t;
    LowRankSpec spec = cfg.data;
    spec.seed = stream_seed(seed, Stream::Data);
    spec.inflate = cfg.ranks[ri] - spec.r;
    flat[idx] = complete_and_cluster(lowrank_images(spec), cfg.p, seed, spec.k, cfg.completion, cfg.pipeline);
  });
  std::vector<SweepRow> rows;
  for (std::size_t ri = 0; ri < nr; ++ri) {
    std::vector<double> vals;
    for (int t = 0; t < cfg.trials; ++t) vals.push_back(flat[static_cast<std::size_t>(t) * nr + ri]);
    rows.push_back(summarize(cfg.ranks[ri], std::move(vals)));
  }
  return rows;
}

inline std::vector<SweepRow> fraction_sweep(const CompletionSweepConfig& cfg) {
  require(!cfg.fractions.empty(), "fraction_sweep: empty p range");
  require(cfg.trials >= 1, "fraction_sweep: trials must be positive");
  const std::size_t np = cfg.fractions.size();
  std::vector<double> flat(np * static_cast<std::size_t>(cfg.trials));
  parallel_for(flat.size(), [&](std::size_t idx) {
    const std::size_t pi = idx % np, t = idx / np;
    const std::uint64_t seed = cfg.base_seed + t;
    LowRankSpec spec = cfg.data;
    spec.seed = stream_seed(seed, Stream::Data);
    flat[idx] = complete_and_cluster(lowrank_images(spec), cfg.fractions[pi], seed, spec.k, cfg.completion,
                                     cfg.pipeline);
  });
  std::vector<SweepRow> rows;
  for (std::size_t pi = 0; pi < np; ++pi) {
    std::vector<double> vals;
    for (int t = 0; t < cfg.trials; ++t) vals.push_back(flat[static_cast<std::size_t>(t) * np + pi]);
    rows.push_back(summarize(cfg.fractions[pi], std::move(vals)));
  }
  return rows;
}

}  // namespace specperturb

#endif  // SPECPERTURB_EXPERIMENTS_HPP
