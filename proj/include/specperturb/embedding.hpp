#ifndef SPECPERTURB_EMBEDDING_HPP
#define SPECPERTURB_EMBEDDING_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "specperturb/affinity.hpp"
#include "specperturb/numkernel.hpp"

namespace specperturb {

// ---------------------------------------------------------------------------
// Spectral coordinates

/// Eigendecomposition of pack.A in which, when the top eigenvalue is
/// repeated (several disconnected blocks), the repeated eigenspace is
/// re-based so that its first vector is the stationary direction D^{1/2}1.
/// For a simple top eigenvalue this is just sym_eig.
inline SymEigResult affinity_eigen(const AffinityPack& pack, Solver solver = Solver::Auto) {
  SymEigResult eig = sym_eig(pack.A, solver);
  const Eigen::Index n = eig.eigenvalues.size();
  Eigen::Index c = 1;
  while (c < n && eig.eigenvalues(c) >= eig.eigenvalues(0) - 1e-9) ++c;
  if (c == 1) return eig;

  const Vector u = stationary_direction(pack);
  const Matrix block = eig.eigenvectors.leftCols(c);
  const Vector a = block.transpose() * u;
  if (a.norm() < 0.5) return eig;  // u is not in the leading eigenspace

  // Orthonormal c x c basis whose first column is a/|a|.
  Matrix h(c, c);
  h.col(0) = a / a.norm();
  Eigen::Index filled = 1;
  for (Eigen::Index axis = 0; axis < c && filled < c; ++axis) {
    Vector cand = Vector::Unit(c, axis);
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index j = 0; j < filled; ++j) cand -= h.col(j).dot(cand) * h.col(j);
    const double nrm = cand.norm();
    if (nrm > 1e-8) h.col(filled++) = cand / nrm;
  }
  Matrix rebased = block * h;
  for (Eigen::Index j = 0; j < c; ++j) {
    rebased.col(j).normalize();
    canonicalize_sign(rebased.col(j));
  }
  eig.eigenvectors.leftCols(c) = rebased;
  return eig;
}

struct SpectralEmbedding {
  int k = 0;
  Vector eigenvalues;  // the k selected eigenvalues, descending
  Matrix Vk;           // N x k
  std::optional<double> alpha;  // gap between the last selected eigenvalue and the next
  bool drop_first = false;
  Vector spectrum;     // all eigenvalues of A, descending
};

namespace detail {

// Permits k to exhaust the spectrum, in which case there is no gap.
inline SpectralEmbedding embed_columns(const AffinityPack& pack, int k, bool drop_first, Solver solver) {
  const Eigen::Index n = pack.A.rows();
  const Eigen::Index first = drop_first ? 1 : 0;
  require(k >= 1 && first + k <= n, "spectral_embed: k out of range");
  const SymEigResult eig = affinity_eigen(pack, solver);
  SpectralEmbedding out;
  out.k = k;
  out.drop_first = drop_first;
  out.eigenvalues = eig.eigenvalues.segment(first, k);
  out.Vk = eig.eigenvectors.middleCols(first, k);
  if (first + k < n) out.alpha = eig.eigenvalues(first + k - 1) - eig.eigenvalues(first + k);
  out.spectrum = eig.eigenvalues;
  return out;
}

}  // namespace detail

/// Top-k eigenvectors of A, or eigenvectors 2..k+1 when drop_first is set.
inline SpectralEmbedding spectral_embed(const AffinityPack& pack, int k, bool drop_first,
                                        Solver solver = Solver::Auto) {
  const Eigen::Index first = drop_first ? 1 : 0;
  require(k >= 1, "spectral_embed: k must be at least 1");
  require(first + k < pack.A.rows(),
          "spectral_embed: need k+1 (k+2 with drop_first) <= N for the eigengap");
  return detail::embed_columns(pack, k, drop_first, solver);
}

// ---------------------------------------------------------------------------
// k-means

struct ClusterAssignment {
  std::vector<int> labels;
  Matrix centroids;  // k x d
  double wcss = 0.0;
  int restarts_used = 0;
  int iterations = 0;  // Lloyd iterations of the winning restart
};

struct KMeansOptions {
  int restarts = 20;
  int max_iter = 300;
  double tol = 1e-9;  // max centroid movement
};

struct LloydTrace {
  ClusterAssignment result;
  std::vector<double> wcss_history;  // after every assignment step
};

namespace detail {

inline int nearest_centroid(const RowMajorMatrix& pts, Eigen::Index i, const RowMajorMatrix& cents,
                            double& best_d2) {
  int best = 0;
  best_d2 = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < cents.rows(); ++c) {
    const double d2 = (pts.row(i) - cents.row(c)).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = static_cast<int>(c);
    }
  }
  return best;
}

inline double wcss_of(const RowMajorMatrix& pts, const std::vector<int>& labels,
                      const RowMajorMatrix& cents) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < pts.rows(); ++i)
    total += (pts.row(i) - cents.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
  return total;
}

inline RowMajorMatrix kmeanspp_seed(const RowMajorMatrix& pts, int k, SeededRng& rng) {
  const Eigen::Index n = pts.rows();
  RowMajorMatrix cents(k, pts.cols());
  cents.row(0) = pts.row(static_cast<Eigen::Index>(rng.below(static_cast<std::size_t>(n))));
  Vector d2(n);
  for (Eigen::Index i = 0; i < n; ++i) d2(i) = (pts.row(i) - cents.row(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index pick = n - 1;
    if (total > 0.0) {
      const double r = rng.uniform() * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2(i);
        if (acc > r && d2(i) > 0.0) {
          pick = i;
          break;
        }
      }
      if (!(d2(pick) > 0.0))  // rounding in the cumulative sum
        d2.maxCoeff(&pick);
    } else {
      pick = static_cast<Eigen::Index>(rng.below(static_cast<std::size_t>(n)));
    }
    cents.row(c) = pts.row(pick);
    for (Eigen::Index i = 0; i < n; ++i)
      d2(i) = std::min(d2(i), (pts.row(i) - cents.row(c)).squaredNorm());
  }
  return cents;
}

}  // namespace detail

/// Lloyd iterations from given centroids. An empty cluster takes over the
/// point farthest from its current centroid.
inline LloydTrace lloyd(const Matrix& points, const Matrix& initial_centroids, int max_iter = 300,
                        double tol = 1e-9) {
  const RowMajorMatrix pts = points;
  RowMajorMatrix cents = initial_centroids;
  const Eigen::Index n = pts.rows();
  const int k = static_cast<int>(cents.rows());
  require(k >= 1 && k <= n, "lloyd: need 1 <= k <= N");
  require(cents.cols() == pts.cols(), "lloyd: centroid dimension mismatch");

  LloydTrace trace;
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  std::vector<double> dist(static_cast<std::size_t>(n), 0.0);
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      labels[static_cast<std::size_t>(i)] = detail::nearest_centroid(pts, i, cents, dist[static_cast<std::size_t>(i)]);
      ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      Eigen::Index far = -1;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto li = static_cast<std::size_t>(labels[static_cast<std::size_t>(i)]);
        if (counts[li] > 1 && dist[static_cast<std::size_t>(i)] > far_d) {
          far_d = dist[static_cast<std::size_t>(i)];
          far = i;
        }
      }
      if (far < 0) break;
      --counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(far)])];
      labels[static_cast<std::size_t>(far)] = c;
      counts[static_cast<std::size_t>(c)] = 1;
      dist[static_cast<std::size_t>(far)] = 0.0;
      cents.row(c) = pts.row(far);
    }
    trace.wcss_history.push_back(detail::wcss_of(pts, labels, cents));

    RowMajorMatrix next = RowMajorMatrix::Zero(k, pts.cols());
    for (Eigen::Index i = 0; i < n; ++i) next.row(labels[static_cast<std::size_t>(i)]) += pts.row(i);
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0)
        next.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
      else
        next.row(c) = cents.row(c);
    }
    const double moved = (next - cents).rowwise().norm().maxCoeff();
    cents = next;
    if (moved <= tol) {
      ++iter;
      break;
    }
  }
  // Final assignment against the final centroids.
  for (Eigen::Index i = 0; i < n; ++i)
    labels[static_cast<std::size_t>(i)] = detail::nearest_centroid(pts, i, cents, dist[static_cast<std::size_t>(i)]);
  trace.result.labels = labels;
  trace.result.centroids = cents;
  trace.result.wcss = detail::wcss_of(pts, labels, cents);
  trace.result.iterations = iter;
  trace.result.restarts_used = 1;
  return trace;
}

/// k-means++ seeding followed by Lloyd, best of `restarts` by WCSS (ties go
/// to the earliest restart).
inline ClusterAssignment kmeans(const Matrix& points, int k, SeededRng& rng, int restarts = 20,
                                const KMeansOptions& opts = {}) {
  const Eigen::Index n = points.rows();
  require(k >= 1, "kmeans: k must be at least 1");
  require(k <= n, "kmeans: k exceeds the number of points");
  require(restarts >= 1, "kmeans: restarts must be at least 1");
  require_finite(points, "kmeans");
  const RowMajorMatrix pts = points;
  ClusterAssignment best;
  bool have = false;
  for (int r = 0; r < restarts; ++r) {
    const RowMajorMatrix init = detail::kmeanspp_seed(pts, k, rng);
    LloydTrace t = lloyd(points, init, opts.max_iter, opts.tol);
    if (!have || t.result.wcss < best.wcss) {
      best = std::move(t.result);
      have = true;
    }
  }
  best.restarts_used = restarts;
  return best;
}

// ---------------------------------------------------------------------------
// Scoring

namespace detail {

inline std::vector<int> compact_labels(const std::vector<int>& labels, int& count) {
  std::map<int, int> ids;
  for (int l : labels) ids.emplace(l, 0);
  int next = 0;
  for (auto& [key, id] : ids) id = next++;
  count = next;
  std::vector<int> out;
  out.reserve(labels.size());
  for (int l : labels) out.push_back(ids.at(l));
  return out;
}

}  // namespace detail

/// Fraction of points whose label disagrees with the reference under the
/// best one-to-one relabeling (exhaustive over permutations, <= 10 labels).
inline double misclassification_rate(const std::vector<int>& labels, const std::vector<int>& reference) {
  require(labels.size() == reference.size(), "misclassification_rate: length mismatch");
  require(!labels.empty(), "misclassification_rate: empty label vectors");
  int la = 0, lb = 0;
  const std::vector<int> a = detail::compact_labels(labels, la);
  const std::vector<int> b = detail::compact_labels(reference, lb);
  require(la <= 10 && lb <= 10, "misclassification_rate: more than 10 distinct labels");
  const int l = std::max(la, lb);
  std::vector<std::vector<long>> confusion(static_cast<std::size_t>(l), std::vector<long>(static_cast<std::size_t>(l), 0));
  for (std::size_t i = 0; i < a.size(); ++i)
    ++confusion[static_cast<std::size_t>(a[i])][static_cast<std::size_t>(b[i])];
  std::vector<int> perm(static_cast<std::size_t>(l));
  std::iota(perm.begin(), perm.end(), 0);
  long best = 0;
  do {
    long matched = 0;
    for (int i = 0; i < l; ++i)
      matched += confusion[static_cast<std::size_t>(i)][static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
    best = std::max(best, matched);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return 1.0 - static_cast<double>(best) / static_cast<double>(a.size());
}

// ---------------------------------------------------------------------------
// End to end

struct PipelineOptions {
  bool drop_first = false;     // embed with eigenvectors 2..k+1 instead of 1..k
  bool row_normalize = false;  // scale embedding rows to unit length before k-means
  KMeansOptions kmeans;
};

struct PipelineResult {
  double sigma = 0.0;
  SpectralEmbedding embedding;
  ClusterAssignment assignment;
  std::optional<double> rho;
};

inline Matrix normalize_rows(const Matrix& m) {
  Matrix out = m;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double nrm = out.row(i).norm();
    if (nrm > 0.0) out.row(i) /= nrm;
  }
  return out;
}

/// kernel -> normalization -> spectral coordinates -> k-means, with the
/// misclassification rate when labels are attached. sigma defaults to the
/// median pairwise squared distance of X.
inline PipelineResult cluster_pipeline(const DataMatrix& data, std::optional<double> sigma, int k,
                                       SeededRng& rng, const PipelineOptions& opts = {}) {
  data.validate();
  require(k >= 1, "cluster_pipeline: k must be at least 1");
  PipelineResult out;
  out.sigma = sigma ? *sigma : (data.sigma ? *data.sigma : median_sigma(data.X));
  const AffinityPack pack = normalize_affinity(gaussian_kernel(data.X, out.sigma));
  require(k + (opts.drop_first ? 1 : 0) <= data.points(), "cluster_pipeline: k exceeds N");
  out.embedding = detail::embed_columns(pack, k, opts.drop_first, Solver::Auto);
  const Matrix coords = opts.row_normalize ? normalize_rows(out.embedding.Vk) : out.embedding.Vk;
  out.assignment = kmeans(coords, k, rng, opts.kmeans.restarts, opts.kmeans);
  if (data.labels) out.rho = misclassification_rate(out.assignment.labels, *data.labels);
  return out;
}

}  // namespace specperturb

#endif  // SPECPERTURB_EMBEDDING_HPP
