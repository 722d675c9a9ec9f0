#ifndef SPECPERTURB_SENSING_HPP
#define SPECPERTURB_SENSING_HPP

// Gaussian compressed-sensing measurements of data rows and the empirical
// restricted-isometry constant over the dataset's difference vectors.

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

#include "specperturb/affinity.hpp"
#include "specperturb/numkernel.hpp"

namespace specperturb {

/// Applied operator (1/sqrt(m)) Phi with Phi an m x n standard Gaussian
/// matrix drawn from `seed`. Reports persist (kind, m, n, seed), never entries.
class MeasurementOperator {
 public:
  enum class Kind { Gaussian, Identity };

  static MeasurementOperator gaussian(std::size_t m, std::size_t n, std::uint64_t seed) {
    require(m >= 1 && n >= 1, "MeasurementOperator: m and n must be positive");
    SeededRng rng(seed);
    MeasurementOperator op(Kind::Gaussian, m, n, seed);
    op.applied_ = gaussian_matrix(m, n, rng) / std::sqrt(static_cast<double>(m));
    return op;
  }

  /// Exact identity on R^n, for tests and baselines.
  static MeasurementOperator identity(std::size_t n) {
    require(n >= 1, "MeasurementOperator: n must be positive");
    MeasurementOperator op(Kind::Identity, n, n, 0);
    op.applied_ = Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    return op;
  }

  Kind kind() const { return kind_; }
  std::size_t m() const { return m_; }
  std::size_t n() const { return n_; }
  std::uint64_t seed() const { return seed_; }
  double scale() const { return kind_ == Kind::Gaussian ? 1.0 / std::sqrt(static_cast<double>(m_)) : 1.0; }
  /// The scaled matrix actually applied to each row.
  const Matrix& matrix() const { return applied_; }

 private:
  MeasurementOperator(Kind kind, std::size_t m, std::size_t n, std::uint64_t seed)
      : kind_(kind), m_(m), n_(n), seed_(seed) {}

  Kind kind_;
  std::size_t m_, n_;
  std::uint64_t seed_;
  Matrix applied_;
};

/// Row i of the result is (1/sqrt(m)) Phi x_i.
inline Matrix measure(const Matrix& X, const MeasurementOperator& op) {
  require(static_cast<std::size_t>(X.cols()) == op.n(),
          "measure: operator expects dimension " + std::to_string(op.n()) + ", data has " +
              std::to_string(X.cols()));
  require_finite(X, "measure");
  if (op.kind() == MeasurementOperator::Kind::Identity) return X;
  return X * op.matrix().transpose();
}

inline DataMatrix measure(const DataMatrix& data, const MeasurementOperator& op) {
  DataMatrix out;
  out.X = measure(data.X, op);
  out.labels = data.labels;
  out.sigma = data.sigma;
  return out;
}

struct RipEstimate {
  double delta_emp = 0.0;
  std::pair<Eigen::Index, Eigen::Index> worst_pair{0, 0};
  std::size_t pairs_checked = 0;
  std::size_t pairs_skipped = 0;  // identical rows
};

/// Largest relative distortion of squared pairwise distances between the
/// rows of X and the rows of `measured`. Uses the same distance routine as
/// the kernel, so the affinity bounds built on it hold exactly.
inline RipEstimate rip_delta_between(const Matrix& X, const Matrix& measured) {
  require(X.rows() == measured.rows(), "empirical_rip_delta: row count mismatch");
  const Matrix d = pairwise_sq_distances(X);
  const Matrix dm = pairwise_sq_distances(measured);
  RipEstimate est;
  bool have = false;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < X.rows(); ++j) {
      if (d(i, j) == 0.0) {
        ++est.pairs_skipped;
        continue;
      }
      ++est.pairs_checked;
      const double dist = std::abs(dm(i, j) / d(i, j) - 1.0);
      if (!have || dist > est.delta_emp) {
        est.delta_emp = dist;
        est.worst_pair = {i, j};
        have = true;
      }
    }
  }
  if (!have) throw NumericalError("empirical_rip_delta: all rows identical, no valid pairs");
  return est;
}

inline RipEstimate empirical_rip_delta(const Matrix& X, const MeasurementOperator& op) {
  return rip_delta_between(X, measure(X, op));
}

inline RipEstimate empirical_rip_delta(const DataMatrix& data, const MeasurementOperator& op) {
  return empirical_rip_delta(data.X, op);
}

/// c * (2s / eps^2) * ln(n / (eps^2 * 2s)) before rounding and clamping.
inline double required_measurements_unclamped(std::size_t s, std::size_t n, double eps, double c) {
  require(eps > 0.0 && eps < 1.0, "required_measurements: eps must lie in (0, 1)");
  require(s >= 1, "required_measurements: s must be at least 1");
  require(n > s, "required_measurements: n must exceed s");
  require(c > 0.0, "required_measurements: c must be positive");
  const double two_s = 2.0 * static_cast<double>(s);
  return c * (two_s / (eps * eps)) * std::log(static_cast<double>(n) / (eps * eps * two_s));
}

/// Measurement count for RIP on 2s-sparse difference vectors, clamped to [1, n].
inline std::size_t required_measurements(std::size_t s, std::size_t n, double eps, double c = 1.0) {
  const double raw = std::ceil(required_measurements_unclamped(s, n, eps, c));
  if (!(raw >= 1.0)) return 1;
  if (raw >= static_cast<double>(n)) return n;
  return static_cast<std::size_t>(raw);
}

}  // namespace specperturb

#endif  // SPECPERTURB_SENSING_HPP
