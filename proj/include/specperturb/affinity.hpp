#ifndef SPECPERTURB_AFFINITY_HPP
#define SPECPERTURB_AFFINITY_HPP

// Gaussian-kernel graph and its normalized forms:
//   W_ij = exp(-|x_i - x_j|^2 / (2 sigma)),  D_ii = sum_k W_ik (self weight included),
//   A = D^{-1/2} W D^{-1/2},  P = D^{-1} W.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "specperturb/numkernel.hpp"

namespace specperturb {

/// N points as rows of X, with optional ground-truth labels.
struct DataMatrix {
  Matrix X;
  std::optional<std::vector<int>> labels;
  std::optional<double> sigma;

  Eigen::Index points() const { return X.rows(); }
  Eigen::Index dim() const { return X.cols(); }

  void validate() const {
    require(X.rows() >= 2, "DataMatrix: need at least 2 points");
    require(X.cols() >= 1, "DataMatrix: need at least 1 feature");
    require_finite(X, "DataMatrix");
    if (labels) {
      require(static_cast<Eigen::Index>(labels->size()) == X.rows(),
              "DataMatrix: label count does not match point count");
      for (int l : *labels)
        require(l >= 0 && l < X.rows(), "DataMatrix: label out of range");
    }
    if (sigma) require(*sigma > 0.0, "DataMatrix: sigma must be positive");
  }
};

struct AffinityPack {
  Matrix W;
  Vector D;  // degrees
  Matrix A;  // symmetric normalized
  Matrix P;  // row stochastic
};

/// Pairwise squared Euclidean distances computed from explicit row
/// differences (no Gram-matrix shortcut), symmetric with a zero diagonal.
inline Matrix pairwise_sq_distances(const Matrix& X) {
  const RowMajorMatrix rows = X;
  const Eigen::Index n = rows.rows();
  Matrix d2 = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = (rows.row(i) - rows.row(j)).squaredNorm();
      d2(i, j) = v;
      d2(j, i) = v;
    }
  }
  return d2;
}

/// Median of the N(N-1)/2 pairwise squared distances (lower median for an
/// even count).
inline double median_sigma(const Matrix& X) {
  require(X.rows() >= 2, "median_sigma: need at least 2 points");
  const Matrix d2 = pairwise_sq_distances(X);
  std::vector<double> vals;
  vals.reserve(static_cast<std::size_t>(X.rows() * (X.rows() - 1) / 2));
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = i + 1; j < X.rows(); ++j) vals.push_back(d2(i, j));
  const auto mid = vals.begin() + static_cast<std::ptrdiff_t>((vals.size() - 1) / 2);
  std::nth_element(vals.begin(), mid, vals.end());
  if (!(*mid > 0.0)) throw NumericalError("median_sigma: median pairwise distance is zero");
  return *mid;
}

inline Matrix kernel_from_sq_distances(const Matrix& d2, double sigma) {
  require(sigma > 0.0 && std::isfinite(sigma), "gaussian_kernel: sigma must be positive");
  Matrix w = (-d2.array() / (2.0 * sigma)).exp().matrix();
  w.diagonal().setOnes();
  return w;
}

inline Matrix gaussian_kernel(const Matrix& X, double sigma) {
  require(sigma > 0.0 && std::isfinite(sigma), "gaussian_kernel: sigma must be positive");
  require_finite(X, "gaussian_kernel");
  return kernel_from_sq_distances(pairwise_sq_distances(X), sigma);
}

inline Matrix gaussian_kernel(const DataMatrix& data, double sigma) {
  return gaussian_kernel(data.X, sigma);
}

/// Degree normalization of a symmetric non-negative weight matrix.
inline AffinityPack normalize_affinity(const Matrix& W) {
  require(W.rows() == W.cols() && W.rows() >= 1, "normalize_affinity: W must be square");
  require_finite(W, "normalize_affinity");
  require(W.minCoeff() >= 0.0, "normalize_affinity: W has negative entries");
  const double scale = std::max(1e-300, W.cwiseAbs().maxCoeff());
  require((W - W.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale,
          "normalize_affinity: W is not symmetric");
  const Eigen::Index n = W.rows();
  AffinityPack pack;
  pack.W = W;
  pack.D = W.rowwise().sum();
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(pack.D(i) > 0.0))
      throw InvalidArgument("normalize_affinity: vertex " + std::to_string(i) +
                            " is isolated (zero row sum)");
  const Vector root = pack.D.cwiseSqrt();
  pack.A.resize(n, n);
  pack.P.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      pack.A(i, j) = W(i, j) / (root(i) * root(j));
      pack.P(i, j) = W(i, j) / pack.D(i);
    }
  }
  // Force exact symmetry; W(i,j)/(r_i r_j) and W(j,i)/(r_j r_i) can differ
  // only when W itself is asymmetric in the last bit.
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = j + 1; i < n; ++i) pack.A(j, i) = pack.A(i, j);
  return pack;
}

/// The same kernel and normalization applied to perturbed data (compressed,
/// completed or noisy rows).
inline AffinityPack perturbed_affinity(const Matrix& X_perturbed, double sigma) {
  return normalize_affinity(gaussian_kernel(X_perturbed, sigma));
}

inline AffinityPack perturbed_affinity(const DataMatrix& data, double sigma) {
  return perturbed_affinity(data.X, sigma);
}

/// Unit vector D^{1/2} 1 / |D^{1/2} 1|, the eigenvector of A with eigenvalue 1.
inline Vector stationary_direction(const AffinityPack& pack) {
  Vector u = pack.D.cwiseSqrt();
  return u / u.norm();
}

}  // namespace specperturb

#endif  // SPECPERTURB_AFFINITY_HPP
