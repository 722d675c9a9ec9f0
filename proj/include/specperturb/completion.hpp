#ifndef SPECPERTURB_COMPLETION_HPP
#define SPECPERTURB_COMPLETION_HPP

// Nuclear-norm matrix completion by soft-impute: repeatedly soft-threshold
// the singular values of P_Omega(M) + P_Omega^perp(X) along a decreasing
// lambda schedule with warm starts.
//
// The iterate is held in factored form U diag(s) V^T so that the imputed
// matrix is "sparse residual + low rank". Small problems take a dense SVD
// each step; larger ones use block subspace iteration warm-started from the
// previous right singular vectors, growing the block until its smallest
// computed singular value falls below lambda.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "specperturb/numkernel.hpp"

namespace specperturb {

struct ObservationMask {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> entries;  // row-major order, unique

  double p() const {
    return static_cast<double>(entries.size()) / (static_cast<double>(rows) * static_cast<double>(cols));
  }

  void validate() const {
    require(rows >= 1 && cols >= 1, "ObservationMask: shape must be positive");
    require(!entries.empty(), "ObservationMask: no observed entries");
    for (std::size_t e = 0; e < entries.size(); ++e) {
      const auto [i, j] = entries[e];
      require(i >= 0 && i < rows && j >= 0 && j < cols,
              "ObservationMask: entry (" + std::to_string(i) + "," + std::to_string(j) + ") out of range");
      if (e > 0) require(entries[e - 1] < entries[e], "ObservationMask: entries must be sorted and unique");
    }
  }
};

struct PartialMatrix {
  ObservationMask mask;
  std::vector<double> values;  // one per mask entry

  void validate() const {
    mask.validate();
    require(values.size() == mask.entries.size(), "PartialMatrix: one value per observed entry required");
    for (double v : values) require(std::isfinite(v), "PartialMatrix: observed values must be finite");
  }
};

struct CompletionResult {
  Matrix Xhat;
  int iterations = 0;
  double lambda_final = 0.0;
  double observed_residual = 0.0;  // |P_Omega(Xhat) - P_Omega(M)|_F
  bool converged = false;
  std::vector<double> stage_residuals;  // observed residual at the end of each lambda
  std::vector<int> stage_iterations;
  Eigen::Index rank = 0;  // singular values kept by the final threshold
};

/// Each entry observed independently with probability p, scanned row-major.
inline ObservationMask sample_mask(Eigen::Index rows, Eigen::Index cols, double p, SeededRng& rng) {
  require(rows >= 1 && cols >= 1, "sample_mask: shape must be positive");
  require(p > 0.0 && p <= 1.0, "sample_mask: p must lie in (0, 1]");
  require(p * static_cast<double>(rows) * static_cast<double>(cols) >= 1.0,
          "sample_mask: p*N*n < 1 gives a degenerate mask");
  ObservationMask mask;
  mask.rows = rows;
  mask.cols = cols;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      if (p >= 1.0 || rng.uniform() < p) mask.entries.emplace_back(i, j);
  if (mask.entries.empty()) throw InvalidArgument("sample_mask: sampled mask is empty");
  return mask;
}

inline PartialMatrix observe(const Matrix& X, const ObservationMask& mask) {
  require(X.rows() == mask.rows && X.cols() == mask.cols, "observe: shape mismatch");
  PartialMatrix pm{mask, {}};
  pm.values.reserve(mask.entries.size());
  for (const auto& [i, j] : mask.entries) pm.values.push_back(X(i, j));
  return pm;
}

inline double observed_residual(const Matrix& Xhat, const PartialMatrix& observed) {
  double s = 0.0;
  for (std::size_t e = 0; e < observed.values.size(); ++e) {
    const auto [i, j] = observed.mask.entries[e];
    const double d = Xhat(i, j) - observed.values[e];
    s += d * d;
  }
  return std::sqrt(s);
}

/// Theoretical completion error 4 sqrt((2+p) min(N,n) / p) delta + 2 delta.
inline double completion_error_bound(double p, Eigen::Index rows, Eigen::Index cols, double delta_noise) {
  require(p > 0.0 && p <= 1.0, "completion_error_bound: p must lie in (0, 1]");
  require(delta_noise >= 0.0, "completion_error_bound: delta must be non-negative");
  const double mn = static_cast<double>(std::min(rows, cols));
  return 4.0 * std::sqrt((2.0 + p) * mn / p) * delta_noise + 2.0 * delta_noise;
}

namespace detail {

/// Z = S + U diag(s) V^T with S supported on the observed entries.
struct SparsePlusLowRank {
  Eigen::Index rows, cols;
  const std::vector<std::pair<Eigen::Index, Eigen::Index>>* entries;
  std::vector<double> sparse;
  Matrix U;
  Vector s;
  Matrix V;

  // The sparse part is accumulated into transposed (column-major) buffers
  // so each observed entry touches two contiguous length-b columns.
  Matrix times(const Matrix& B) const {  // Z B, B is cols x b
    const Matrix bt = B.transpose();
    Matrix acc = Matrix::Zero(B.cols(), rows);
    scatter(bt, acc, false);
    Matrix out = acc.transpose();
    if (s.size() > 0) out += U * (s.asDiagonal() * (V.transpose() * B));
    return out;
  }

  Matrix transpose_times(const Matrix& C) const {  // Z^T C, C is rows x b
    const Matrix ct = C.transpose();
    Matrix acc = Matrix::Zero(C.cols(), cols);
    scatter(ct, acc, true);
    Matrix out = acc.transpose();
    if (s.size() > 0) out += V * (s.asDiagonal() * (U.transpose() * C));
    return out;
  }

  void scatter(const Matrix& src, Matrix& dst, bool transposed) const {
    const Eigen::Index b = src.rows();
    const double* in = src.data();
    double* out = dst.data();
    for (std::size_t e = 0; e < sparse.size(); ++e) {
      const auto [i, j] = (*entries)[e];
      const Eigen::Index to = transposed ? j : i, from = transposed ? i : j;
      const double v = sparse[e];
      double* d = out + to * b;
      const double* x = in + from * b;
      for (Eigen::Index t = 0; t < b; ++t) d[t] += v * x[t];
    }
  }

  Matrix dense() const {
    Matrix z = Matrix::Zero(rows, cols);
    if (s.size() > 0) z = U * s.asDiagonal() * V.transpose();
    for (std::size_t e = 0; e < sparse.size(); ++e) {
      const auto [i, j] = (*entries)[e];
      z(i, j) += sparse[e];
    }
    return z;
  }
};

inline Matrix orthonormal_columns(const Matrix& Y) {
  Eigen::HouseholderQR<Matrix> qr(Y);
  return qr.householderQ() * Matrix::Identity(Y.rows(), Y.cols());
}

struct Factors {
  Matrix U;
  Vector s;
  Matrix V;
};

inline Factors truncate_positive(const Matrix& U, const Vector& sv, const Matrix& V, double lambda) {
  Eigen::Index keep = 0;
  while (keep < sv.size() && sv(keep) - lambda > 0.0) ++keep;
  Factors f;
  f.U = U.leftCols(keep);
  f.s = (sv.head(keep).array() - lambda).matrix();
  f.V = V.leftCols(keep);
  return f;
}

/// Top singular triplets of Z by block subspace iteration, block size b,
/// started from `warm` (n x r) padded with a fixed Gaussian block.
inline SvdResult block_singular_triplets(const SparsePlusLowRank& z, Eigen::Index b, const Matrix& warm,
                                         int power_iters) {
  SeededRng rng(0x5EEDC0DEULL);
  Matrix omega(z.cols, b);
  const Eigen::Index r = std::min<Eigen::Index>(warm.cols(), b);
  if (r > 0) omega.leftCols(r) = warm.leftCols(r);
  for (Eigen::Index j = r; j < b; ++j)
    for (Eigen::Index i = 0; i < z.cols; ++i) omega(i, j) = rng.normal();
  Matrix q = orthonormal_columns(z.times(omega));
  for (int it = 0; it < power_iters; ++it) {
    const Matrix w = orthonormal_columns(z.transpose_times(q));
    q = orthonormal_columns(z.times(w));
  }
  // bt = (Q^T Z)^T = Q2 tri and tri = Ur S Vr^T give Z ~ (Q Vr) S (Q2 Ur)^T.
  const Matrix bt = z.transpose_times(q);
  Eigen::HouseholderQR<Matrix> qr(bt);
  const Matrix q2 = qr.householderQ() * Matrix::Identity(bt.rows(), bt.cols());
  const Matrix tri = qr.matrixQR().topRows(bt.cols()).triangularView<Eigen::Upper>();
  const SvdResult small = svd(tri);
  return SvdResult{q * small.V, small.singular_values, q2 * small.U};
}

inline Factors svt_step(const SparsePlusLowRank& z, double lambda, Eigen::Index dense_max, int power_iters) {
  const Eigen::Index min_dim = std::min(z.rows, z.cols);
  if (min_dim <= dense_max) {
    const SvdResult full = svd(z.dense());
    return truncate_positive(full.U, full.singular_values, full.V, lambda);
  }
  Eigen::Index b = std::max<Eigen::Index>(z.s.size() + 8, 10);
  while (true) {
    if (b >= min_dim) {
      const SvdResult full = svd(z.dense());
      return truncate_positive(full.U, full.singular_values, full.V, lambda);
    }
    const SvdResult part = block_singular_triplets(z, b, z.V, power_iters);
    if (part.singular_values(b - 1) <= lambda)
      return truncate_positive(part.U, part.singular_values, part.V, lambda);
    b *= 2;
  }
}

inline double factored_sq_norm(const Factors& f) { return f.s.squaredNorm(); }

/// |X_a - X_b|_F^2 for factored X's, without forming them.
inline double factored_sq_distance(const Factors& a, const Factors& b) {
  double cross = 0.0;
  if (a.s.size() > 0 && b.s.size() > 0) {
    const Matrix uu = a.U.transpose() * b.U;
    const Matrix vv = b.V.transpose() * a.V;
    cross = (a.s.asDiagonal() * uu * b.s.asDiagonal() * vv).trace();
  }
  return std::max(0.0, factored_sq_norm(a) + factored_sq_norm(b) - 2.0 * cross);
}

inline void refresh_residual(SparsePlusLowRank& z, const PartialMatrix& observed, const Factors& x) {
  z.U = x.U;
  z.s = x.s;
  z.V = x.V;
  const Matrix us = (x.U * x.s.asDiagonal()).transpose();  // r x N
  const Matrix vt = x.V.transpose();                       // r x n
  for (std::size_t e = 0; e < observed.values.size(); ++e) {
    const auto [i, j] = observed.mask.entries[e];
    const double xij = x.s.size() > 0 ? us.col(i).dot(vt.col(j)) : 0.0;
    z.sparse[e] = observed.values[e] - xij;
  }
}

inline double sparse_residual_norm(const SparsePlusLowRank& z) {
  double s = 0.0;
  for (double r : z.sparse) s += r * r;
  return std::sqrt(s);
}

}  // namespace detail

/// Largest singular value of P_Omega(M).
inline double observed_spectral_norm(const PartialMatrix& observed) {
  observed.validate();
  detail::SparsePlusLowRank z{observed.mask.rows, observed.mask.cols, &observed.mask.entries,
                              observed.values, Matrix(), Vector(), Matrix()};
  const Eigen::Index min_dim = std::min(z.rows, z.cols);
  if (min_dim <= kJacobiMaxDim) return spectral_norm(z.dense());
  const Eigen::Index b = std::min<Eigen::Index>(8, min_dim);
  return detail::block_singular_triplets(z, b, Matrix(), 30).singular_values(0);
}

/// Geometric schedule from sigma_1(P_Omega(M))/2 down to final_ratio*sigma_1.
inline std::vector<double> default_lambda_schedule(const PartialMatrix& observed, int steps = 10,
                                                   double final_ratio = 1e-4) {
  require(steps >= 1, "default_lambda_schedule: steps must be positive");
  require(final_ratio > 0.0 && final_ratio < 0.5, "default_lambda_schedule: final_ratio must lie in (0, 0.5)");
  const double s1 = observed_spectral_norm(observed);
  std::vector<double> out;
  if (s1 == 0.0) return out;
  const double hi = s1 / 2.0, lo = final_ratio * s1;
  for (int t = 0; t < steps; ++t) {
    const double frac = steps == 1 ? 1.0 : static_cast<double>(t) / static_cast<double>(steps - 1);
    out.push_back(hi * std::pow(lo / hi, frac));
  }
  return out;
}

struct SoftImputeOptions {
  int lambda_steps = 10;
  double lambda_final_ratio = 1e-4;
  double tol = 1e-6;
  int max_iter = 500;           // per lambda
  Eigen::Index dense_max = 16;  // use a full SVD when min(N, n) is at most this
  int power_iters = 1;          // subspace iterations per step on the large path
};

/// Soft-thresholds the singular values of Z by lambda.
inline Matrix singular_value_threshold(const Matrix& Z, double lambda) {
  require(lambda >= 0.0, "singular_value_threshold: lambda must be non-negative");
  const SvdResult s = svd(Z);
  const detail::Factors f = detail::truncate_positive(s.U, s.singular_values, s.V, lambda);
  if (f.s.size() == 0) return Matrix::Zero(Z.rows(), Z.cols());
  return f.U * f.s.asDiagonal() * f.V.transpose();
}

/// Soft-impute along an explicit non-increasing lambda schedule. `converged`
/// refers to the last lambda; hitting max_iter is reported, not thrown.
inline CompletionResult soft_impute(const PartialMatrix& observed, const std::vector<double>& schedule,
                                    const SoftImputeOptions& opts) {
  observed.validate();
  require(opts.tol > 0.0, "soft_impute: tol must be positive");
  require(opts.max_iter >= 1, "soft_impute: max_iter must be positive");
  require(opts.power_iters >= 0, "soft_impute: power_iters must be non-negative");
  for (std::size_t t = 0; t < schedule.size(); ++t) {
    require(schedule[t] > 0.0 && std::isfinite(schedule[t]), "soft_impute: lambdas must be positive");
    if (t > 0) require(schedule[t] <= schedule[t - 1], "soft_impute: schedule must be non-increasing");
  }

  detail::SparsePlusLowRank z{observed.mask.rows, observed.mask.cols, &observed.mask.entries,
                              std::vector<double>(observed.values.size(), 0.0), Matrix(), Vector(), Matrix()};
  detail::Factors x{Matrix(z.rows, 0), Vector(0), Matrix(z.cols, 0)};
  detail::refresh_residual(z, observed, x);

  CompletionResult out;
  out.converged = true;
  for (double lambda : schedule) {
    bool stage_converged = false;
    int it = 0;
    while (it < opts.max_iter) {
      ++it;
      detail::Factors next = detail::svt_step(z, lambda, opts.dense_max, opts.power_iters);
      const double change2 = detail::factored_sq_distance(next, x);
      const double base2 = detail::factored_sq_norm(x);
      x = std::move(next);
      detail::refresh_residual(z, observed, x);
      if (base2 == 0.0 ? change2 == 0.0 : std::sqrt(change2 / base2) <= opts.tol) {
        stage_converged = true;
        break;
      }
    }
    out.iterations += it;
    out.stage_iterations.push_back(it);
    out.stage_residuals.push_back(detail::sparse_residual_norm(z));
    out.lambda_final = lambda;
    out.converged = stage_converged;
  }

  out.Xhat = Matrix::Zero(z.rows, z.cols);
  if (x.s.size() > 0) out.Xhat = x.U * x.s.asDiagonal() * x.V.transpose();
  out.rank = x.s.size();
  out.observed_residual = observed_residual(out.Xhat, observed);
  return out;
}

inline CompletionResult soft_impute(const PartialMatrix& observed, const std::vector<double>& schedule,
                                    double tol, int max_iter) {
  SoftImputeOptions opts;
  opts.tol = tol;
  opts.max_iter = max_iter;
  return soft_impute(observed, schedule, opts);
}

/// Soft-impute with the default geometric schedule.
inline CompletionResult soft_impute(const PartialMatrix& observed, const SoftImputeOptions& opts = {}) {
  const std::vector<double> schedule =
      default_lambda_schedule(observed, opts.lambda_steps, opts.lambda_final_ratio);
  return soft_impute(observed, schedule, opts);
}

}  // namespace specperturb

#endif  // SPECPERTURB_COMPLETION_HPP
