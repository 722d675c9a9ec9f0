#ifndef SPECPERTURB_SYNTHGEN_HPP
#define SPECPERTURB_SYNTHGEN_HPP

// Seeded synthetic instances: noisy block affinities, clouds that are sparse
// in a random orthogonal basis, and low-rank clustered data.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "specperturb/affinity.hpp"
#include "specperturb/numkernel.hpp"

namespace specperturb {

// ---------------------------------------------------------------------------
// Block affinities

struct BlockAffinitySpec {
  std::vector<int> block_sizes;
  double eps = 0.1;
  std::uint64_t seed = 0;

  int points() const { return std::accumulate(block_sizes.begin(), block_sizes.end(), 0); }

  void validate() const {
    require(!block_sizes.empty(), "BlockAffinitySpec: no blocks");
    for (int b : block_sizes) require(b >= 1, "BlockAffinitySpec: block sizes must be positive");
    require(points() >= 2, "BlockAffinitySpec: need N >= 2");
    require(eps >= 0.0 && std::isfinite(eps), "BlockAffinitySpec: eps must be >= 0");
  }
};

struct BlockAffinity {
  Matrix W;
  std::vector<int> labels;
};

/// W = blockdiag(ones) + (U + U^T)/2 with U_ij uniform on [0, eps].
inline BlockAffinity block_affinity(const BlockAffinitySpec& spec) {
  spec.validate();
  const Eigen::Index n = spec.points();
  BlockAffinity out;
  out.W = Matrix::Zero(n, n);
  Eigen::Index start = 0;
  for (std::size_t b = 0; b < spec.block_sizes.size(); ++b) {
    const Eigen::Index len = spec.block_sizes[b];
    out.W.block(start, start, len, len).setOnes();
    for (Eigen::Index i = 0; i < len; ++i) out.labels.push_back(static_cast<int>(b));
    start += len;
  }
  if (spec.eps > 0.0) {
    SeededRng rng(spec.seed);
    Matrix u(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) u(i, j) = rng.uniform(0.0, spec.eps);
    out.W += 0.5 * (u + u.transpose());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sparse clouds

struct SparseCloudSpec {
  int N = 100;
  int n = 100;
  int s = 3;
  int k = 2;
  double noise = 0.1;
  std::uint64_t basis_seed = 0;
  std::uint64_t point_seed = 1;

  void validate() const {
    require(N >= 2 && n >= 1, "SparseCloudSpec: need N >= 2 and n >= 1");
    require(s >= 1 && s <= n, "SparseCloudSpec: need 1 <= s <= n");
    require(k >= 1 && k <= N, "SparseCloudSpec: need 1 <= k <= N");
    require(static_cast<long>(k) * s <= n, "SparseCloudSpec: k*s > n, disjoint supports impossible");
    require(noise >= 0.0 && std::isfinite(noise), "SparseCloudSpec: noise must be >= 0");
  }
};

struct SparseCloud {
  DataMatrix data;
  Matrix B;          // n x n orthogonal, B x_i = y_i
  Matrix Y;          // N x n sparse coefficients
  std::vector<std::vector<int>> supports;  // one per cluster
};

/// Point i belongs to cluster floor(i k / N). Centers have coefficients
/// +-U[1,2] on disjoint supports; noise is Gaussian on the same support.
inline SparseCloud sparse_cloud_full(const SparseCloudSpec& spec) {
  spec.validate();
  SparseCloud out;
  SeededRng basis_rng(spec.basis_seed);
  out.B = random_orthonormal(static_cast<std::size_t>(spec.n), static_cast<std::size_t>(spec.n), basis_rng);

  SeededRng rng(spec.point_seed);
  std::vector<int> perm(static_cast<std::size_t>(spec.n));
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  Matrix centers = Matrix::Zero(spec.k, spec.n);
  for (int c = 0; c < spec.k; ++c) {
    std::vector<int> sup(perm.begin() + c * spec.s, perm.begin() + (c + 1) * spec.s);
    std::sort(sup.begin(), sup.end());
    for (int j : sup) centers(c, j) = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(1.0, 2.0);
    out.supports.push_back(std::move(sup));
  }

  out.Y = Matrix::Zero(spec.N, spec.n);
  std::vector<int> labels(static_cast<std::size_t>(spec.N));
  for (int i = 0; i < spec.N; ++i) {
    const int c = static_cast<int>(static_cast<long>(i) * spec.k / spec.N);
    labels[static_cast<std::size_t>(i)] = c;
    for (int j : out.supports[static_cast<std::size_t>(c)]) {
      out.Y(i, j) = centers(c, j);
      if (spec.noise > 0.0) out.Y(i, j) += spec.noise * rng.normal();
    }
  }
  out.data.X = out.Y * out.B;  // row form of x_i = B^T y_i
  out.data.labels = std::move(labels);
  return out;
}

inline DataMatrix sparse_cloud(const SparseCloudSpec& spec) { return sparse_cloud_full(spec).data; }

// ---------------------------------------------------------------------------
// Low-rank clustered data

struct LowRankSpec {
  int N = 1000;
  int n = 500;
  int r = 3;
  int k = 3;
  double noise = 0.1;  // in-subspace jitter
  double separation = 1.0;
  std::uint64_t seed = 0;
  // Extra directions orthogonal to the rank-r subspace; direction t gets
  // Gaussian coefficients with standard deviation inflate_scale * inflate_decay^t.
  int inflate = 0;
  double inflate_scale = 0.0;
  double inflate_decay = 1.0;

  void validate() const {
    require(N >= 2 && n >= 1, "LowRankSpec: need N >= 2 and n >= 1");
    require(r >= 1 && r <= std::min(N, n), "LowRankSpec: need 1 <= r <= min(N, n)");
    require(k >= 1 && k <= r, "LowRankSpec: need 1 <= k <= r");
    require(noise >= 0.0 && separation > 0.0, "LowRankSpec: noise >= 0 and separation > 0 required");
    require(inflate >= 0 && r + inflate <= std::min(N, n), "LowRankSpec: r + inflate exceeds min(N, n)");
    require(inflate_scale >= 0.0 && inflate_decay > 0.0, "LowRankSpec: bad inflation parameters");
  }
};

/// X = (separation e_c + noise g_i) V_r^T plus any inflation directions.
inline DataMatrix lowrank_images(const LowRankSpec& spec) {
  spec.validate();
  SeededRng rng(spec.seed);
  const int total = spec.r + spec.inflate;
  const Matrix basis = random_orthonormal(static_cast<std::size_t>(spec.n), static_cast<std::size_t>(total), rng);
  Matrix coeff = Matrix::Zero(spec.N, total);
  std::vector<int> labels(static_cast<std::size_t>(spec.N));
  for (int i = 0; i < spec.N; ++i) {
    const int c = static_cast<int>(static_cast<long>(i) * spec.k / spec.N);
    labels[static_cast<std::size_t>(i)] = c;
    coeff(i, c) = spec.separation;
    if (spec.noise > 0.0)
      for (int t = 0; t < spec.r; ++t) coeff(i, t) += spec.noise * rng.normal();
  }
  double mag = spec.inflate_scale;
  for (int t = 0; t < spec.inflate; ++t) {
    for (int i = 0; i < spec.N; ++i) coeff(i, spec.r + t) = mag * rng.normal();
    mag *= spec.inflate_decay;
  }
  DataMatrix out;
  out.X = coeff * basis.transpose();
  out.labels = std::move(labels);
  return out;
}

}  // namespace specperturb

#endif  // SPECPERTURB_SYNTHGEN_HPP
