#ifndef SPECPERTURB_TESTS_ORACLES_HPP
#define SPECPERTURB_TESTS_ORACLES_HPP

// Reference computations written independently of the library: plain loops,
// closed forms and brute force. Slow on purpose.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline double sq_dist(const Mat& X, Eigen::Index i, Eigen::Index j) {
  double s = 0.0;
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    const double d = X(i, c) - X(j, c);
    s += d * d;
  }
  return s;
}

inline Mat kernel(const Mat& X, double sigma) {
  const Eigen::Index n = X.rows();
  Mat W(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) W(i, j) = i == j ? 1.0 : std::exp(-sq_dist(X, i, j) / (2.0 * sigma));
  return W;
}

inline Mat normalized(const Mat& W) {
  const Eigen::Index n = W.rows();
  std::vector<double> deg(static_cast<std::size_t>(n), 0.0);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) deg[static_cast<std::size_t>(i)] += W(i, j);
  Mat A(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      A(i, j) = W(i, j) / std::sqrt(deg[static_cast<std::size_t>(i)] * deg[static_cast<std::size_t>(j)]);
  return A;
}

inline double median_sq_dist(const Mat& X) {
  std::vector<double> v;
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = i + 1; j < X.rows(); ++j) v.push_back(sq_dist(X, i, j));
  std::sort(v.begin(), v.end());
  return v[(v.size() - 1) / 2];
}

/// Misclassification rate by trying every relabeling of `labels` onto the
/// reference alphabet and counting disagreements directly.
inline double misclassification(const std::vector<int>& labels, const std::vector<int>& ref) {
  std::set<int> la(labels.begin(), labels.end()), lr(ref.begin(), ref.end());
  const std::vector<int> a(la.begin(), la.end());
  std::vector<int> targets(lr.begin(), lr.end());
  while (targets.size() < a.size()) targets.push_back(-1 - static_cast<int>(targets.size()));
  std::sort(targets.begin(), targets.end());
  std::size_t best = labels.size();
  do {
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const auto pos = static_cast<std::size_t>(std::lower_bound(a.begin(), a.end(), labels[i]) - a.begin());
      if (targets[pos] != ref[i]) ++wrong;
    }
    best = std::min(best, wrong);
  } while (std::next_permutation(targets.begin(), targets.end()));
  return static_cast<double>(best) / static_cast<double>(labels.size());
}

/// Sum of singular values of [[a, b], [c, d]]: sqrt(|M|_F^2 + 2|det M|).
inline double nuclear_norm_2x2(double a, double b, double c, double d) {
  return std::sqrt(a * a + b * b + c * c + d * d + 2.0 * std::abs(a * d - b * c));
}

/// Grid minimizer of the nuclear norm of [[1, 2], [2, x]] over [lo, hi].
inline double grid_min_missing(double lo, double hi, double step) {
  double best_x = lo, best = std::numeric_limits<double>::infinity();
  for (double x = lo; x <= hi + 1e-12; x += step) {
    const double v = nuclear_norm_2x2(1.0, 2.0, 2.0, x);
    if (v < best - 1e-15) {
      best = v;
      best_x = x;
    }
  }
  return best_x;
}

inline double required_measurements(double s, double n, double eps, double c) {
  const double raw = std::ceil(c * (2.0 * s / (eps * eps)) * std::log(n / (eps * eps * 2.0 * s)));
  return std::clamp(raw, 1.0, n);
}

inline double completion_bound(double p, double N, double n, double delta) {
  return 4.0 * std::sqrt((2.0 + p) * std::min(N, n) / p) * delta + 2.0 * delta;
}

/// Angle between two lines through the origin.
inline double line_angle(const Vec& v, const Vec& w) {
  const double c = std::abs(v.dot(w)) / (v.norm() * w.norm());
  return std::acos(std::min(1.0, c));
}

/// Brute-force RIP constant over all row pairs.
inline double rip_delta(const Mat& X, const Mat& Y) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = i + 1; j < X.rows(); ++j) {
      const double d = sq_dist(X, i, j);
      if (d == 0.0) continue;
      worst = std::max(worst, std::abs(sq_dist(Y, i, j) / d - 1.0));
    }
  return worst;
}

/// Largest eigenvalue magnitude of a symmetric matrix by power iteration.
inline double power_norm(const Mat& S, int iters = 2000) {
  Vec v = Vec::Ones(S.rows()) / std::sqrt(static_cast<double>(S.rows()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) += 1e-3 * static_cast<double>(i % 7);
  v.normalize();
  double lam = 0.0;
  for (int t = 0; t < iters; ++t) {
    Vec w = S * v;
    lam = w.norm();
    if (lam == 0.0) return 0.0;
    v = w / lam;
  }
  return lam;
}

}  // namespace oracle

#endif  // SPECPERTURB_TESTS_ORACLES_HPP
