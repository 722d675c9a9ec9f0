#ifndef SPECPERTURB_NUMKERNEL_HPP
#define SPECPERTURB_NUMKERNEL_HPP

// Dense linear algebra and seeded random generation shared by every other
// module. Small problems go through the Jacobi kernels written here; large
// ones are handed to Eigen's tridiagonal / divide-and-conquer solvers. Both
// routes produce the same ordering and sign convention.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "specperturb/error.hpp"

namespace specperturb {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline void require_finite(const Matrix& m, const std::string& what) {
  if (!m.allFinite()) throw InvalidArgument(what + ": matrix contains NaN or infinity");
}

// ---------------------------------------------------------------------------
// Random numbers

/// splitmix64 stream with Box-Muller normals. Identical seeds give identical
/// streams on every platform.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n) {
    require(n > 0, "SeededRng::below: n must be positive");
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return static_cast<std::size_t>(x % bound);
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Derive an independent stream seed from a base seed and a stream tag.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  SeededRng rng(base ^ (0xD1B54A32D192ED03ULL * (stream + 1)));
  return rng.next_u64();
}

/// m x n matrix of i.i.d. standard normals, filled row by row, so the first
/// rows of a taller matrix drawn from the same seed coincide.
inline Matrix gaussian_matrix(std::size_t m, std::size_t n, SeededRng& rng) {
  require(m >= 1 && n >= 1, "gaussian_matrix: dimensions must be positive");
  Matrix g(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = rng.normal();
  return g;
}

/// Orthonormal n x k basis from the QR factorization of a Gaussian matrix,
/// with the diagonal of R made positive.
inline Matrix random_orthonormal(std::size_t n, std::size_t k, SeededRng& rng) {
  require(k <= n, "random_orthonormal: k must not exceed n");
  const Matrix g = gaussian_matrix(n, k, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(g.rows(), g.cols());
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < q.cols(); ++j)
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  return q;
}

// ---------------------------------------------------------------------------
// Sign convention

/// Flip v so that its entry of largest magnitude is positive (ties: lowest
/// index). Returns true if a flip happened.
inline bool canonicalize_sign(Eigen::Ref<Vector> v) {
  Eigen::Index best = 0;
  double best_abs = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v(i));
    if (a > best_abs) {
      best_abs = a;
      best = i;
    }
  }
  if (v.size() > 0 && v(best) < 0.0) {
    v = -v;
    return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Symmetric eigendecomposition

enum class Solver { Auto, Jacobi, Library };

/// Dimension above which Auto dispatches to the library routines.
inline constexpr Eigen::Index kJacobiMaxDim = 128;

struct SymEigResult {
  Vector eigenvalues;   // non-increasing
  Matrix eigenvectors;  // column i pairs with eigenvalue i
};

namespace detail {

inline double symmetry_defect(const Matrix& s) {
  return (s - s.transpose()).cwiseAbs().maxCoeff();
}

/// Cyclic Jacobi. Sweeps until the off-diagonal Frobenius norm drops to
/// 1e-12 of the input norm, at most 100 sweeps.
inline void jacobi_eigen(const Matrix& s, Vector& values, Matrix& vectors) {
  const Eigen::Index n = s.rows();
  Matrix a = s;
  Matrix v = Matrix::Identity(n, n);
  const double target = 1e-12 * s.norm();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i)
        if (i != j) off += a(i, j) * a(i, j);
    if (std::sqrt(off) <= target) break;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }
  values = a.diagonal();
  vectors = std::move(v);
}

/// Sort descending (stable on index) and apply the sign convention.
inline SymEigResult finish_eigen(const Vector& values, const Matrix& vectors) {
  const Eigen::Index n = values.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return values(x) > values(y); });
  SymEigResult out{Vector(n), Matrix(vectors.rows(), n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.eigenvalues(i) = values(order[static_cast<std::size_t>(i)]);
    out.eigenvectors.col(i) = vectors.col(order[static_cast<std::size_t>(i)]);
    canonicalize_sign(out.eigenvectors.col(i));
  }
  return out;
}

}  // namespace detail

/// Eigendecomposition of a symmetric matrix, eigenvalues sorted descending.
/// In every eigenvector the entry of largest magnitude is positive.
inline SymEigResult sym_eig(const Matrix& s, Solver solver = Solver::Auto) {
  require(s.rows() == s.cols(), "sym_eig: matrix must be square");
  require(s.rows() >= 1, "sym_eig: matrix must be non-empty");
  require_finite(s, "sym_eig");
  const double scale = std::max(1e-300, s.cwiseAbs().maxCoeff());
  if (detail::symmetry_defect(s) > 1e-12 * scale)
    throw InvalidArgument("sym_eig: matrix is not symmetric (defect " +
                          std::to_string(detail::symmetry_defect(s)) + ")");
  const bool use_jacobi =
      solver == Solver::Jacobi || (solver == Solver::Auto && s.rows() <= kJacobiMaxDim);
  if (use_jacobi) {
    Vector values;
    Matrix vectors;
    detail::jacobi_eigen(s, values, vectors);
    return detail::finish_eigen(values, vectors);
  }
  const Matrix sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success) throw NumericalError("sym_eig: eigensolver did not converge");
  return detail::finish_eigen(es.eigenvalues(), es.eigenvectors());
}

// ---------------------------------------------------------------------------
// Singular value decomposition

struct SvdResult {
  Matrix U;                // rows x r, orthonormal columns
  Vector singular_values;  // r = min(rows, cols), non-increasing, >= 0
  Matrix V;                // cols x r, orthonormal columns

  /// Number of singular values above tol_ratio * sigma_1.
  Eigen::Index rank(double tol_ratio = 1e-10) const {
    if (singular_values.size() == 0 || singular_values(0) == 0.0) return 0;
    const double cut = tol_ratio * singular_values(0);
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < singular_values.size(); ++i)
      if (singular_values(i) > cut) ++r;
    return r;
  }

  Matrix reconstruct() const { return U * singular_values.asDiagonal() * V.transpose(); }
};

namespace detail {

/// Extend the columns of q flagged in `missing` to an orthonormal set by
/// Gram-Schmidt against the coordinate axes.
inline void complete_orthonormal(Matrix& q, const std::vector<bool>& missing) {
  const Eigen::Index n = q.rows();
  Eigen::Index axis = 0;
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    if (!missing[static_cast<std::size_t>(j)]) continue;
    while (axis < n) {
      Vector cand = Vector::Unit(n, axis++);
      for (int pass = 0; pass < 2; ++pass)
        for (Eigen::Index i = 0; i < q.cols(); ++i)
          if (i != j && (!missing[static_cast<std::size_t>(i)] || i < j))
            cand -= q.col(i).dot(cand) * q.col(i);
      const double nrm = cand.norm();
      if (nrm > 1e-8) {
        q.col(j) = cand / nrm;
        break;
      }
    }
  }
}

/// One-sided (Hestenes) Jacobi on a matrix with rows >= cols.
inline SvdResult jacobi_svd_tall(const Matrix& m) {
  const Eigen::Index rows = m.rows(), cols = m.cols();
  Matrix u = m;
  Matrix v = Matrix::Identity(cols, cols);
  const double eps = std::numeric_limits<double>::epsilon();
  for (int sweep = 0; sweep < 100; ++sweep) {
    bool rotated = false;
    for (Eigen::Index p = 0; p < cols - 1; ++p) {
      for (Eigen::Index q = p + 1; q < cols; ++q) {
        const double alpha = u.col(p).squaredNorm();
        const double beta = u.col(q).squaredNorm();
        const double gamma = u.col(p).dot(u.col(q));
        if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Eigen::Index k = 0; k < rows; ++k) {
          const double up = u(k, p), uq = u(k, q);
          u(k, p) = c * up - s * uq;
          u(k, q) = s * up + c * uq;
        }
        for (Eigen::Index k = 0; k < cols; ++k) {
          const double vp = v(k, p), vq = v(k, q);
          v(k, p) = c * vp - s * vq;
          v(k, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }
  Vector sv(cols);
  for (Eigen::Index j = 0; j < cols; ++j) sv(j) = u.col(j).norm();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(cols));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return sv(x) > sv(y); });
  SvdResult out{Matrix(rows, cols), Vector(cols), Matrix(cols, cols)};
  const double floor = sv.size() ? sv.maxCoeff() * eps * static_cast<double>(rows) : 0.0;
  std::vector<bool> missing(static_cast<std::size_t>(cols), false);
  for (Eigen::Index j = 0; j < cols; ++j) {
    const Eigen::Index src = order[static_cast<std::size_t>(j)];
    out.singular_values(j) = sv(src);
    out.V.col(j) = v.col(src);
    if (sv(src) > floor && sv(src) > 0.0) {
      out.U.col(j) = u.col(src) / sv(src);
    } else {
      out.U.col(j).setZero();
      missing[static_cast<std::size_t>(j)] = true;
    }
  }
  complete_orthonormal(out.U, missing);
  return out;
}

inline void canonicalize_svd_signs(SvdResult& r) {
  for (Eigen::Index j = 0; j < r.U.cols(); ++j)
    if (canonicalize_sign(r.U.col(j))) r.V.col(j) *= -1.0;
}

}  // namespace detail

/// Thin SVD, M = U diag(sigma) V^T with sigma sorted descending. Each column
/// of U has its largest-magnitude entry positive.
inline SvdResult svd(const Matrix& m, Solver solver = Solver::Auto) {
  require(m.rows() >= 1 && m.cols() >= 1, "svd: matrix must be non-empty");
  require_finite(m, "svd");
  const bool use_jacobi = solver == Solver::Jacobi ||
                          (solver == Solver::Auto && std::min(m.rows(), m.cols()) <= kJacobiMaxDim);
  SvdResult out;
  if (use_jacobi) {
    if (m.rows() >= m.cols()) {
      out = detail::jacobi_svd_tall(m);
    } else {
      SvdResult t = detail::jacobi_svd_tall(m.transpose());
      out = SvdResult{std::move(t.V), std::move(t.singular_values), std::move(t.U)};
    }
  } else {
    Eigen::BDCSVD<Matrix> dc(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    out = SvdResult{dc.matrixU(), dc.singularValues(), dc.matrixV()};
  }
  detail::canonicalize_svd_signs(out);
  return out;
}

/// Largest singular value.
inline double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  if (std::min(m.rows(), m.cols()) <= kJacobiMaxDim) return svd(m).singular_values(0);
  Eigen::BDCSVD<Matrix> dc(m);
  return dc.singularValues()(0);
}

/// Spectral norm of a symmetric matrix via its extreme eigenvalues.
inline double symmetric_spectral_norm(const Matrix& s) {
  if (s.rows() <= kJacobiMaxDim) return spectral_norm(s);
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (s + s.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace specperturb

#endif  // SPECPERTURB_NUMKERNEL_HPP
