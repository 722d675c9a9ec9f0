#ifndef SPECPERTURB_SUBSPACE_HPP
#define SPECPERTURB_SUBSPACE_HPP

// Canonical angles, orthogonal Procrustes alignment and projector distances
// between two k-dimensional subspaces given by orthonormal bases.

#include <algorithm>
#include <cmath>
#include <vector>

#include "specperturb/numkernel.hpp"

namespace specperturb {

struct SubspaceComparison {
  int k = 0;
  Vector cos_gammas;  // singular values of V^T Vt, descending, clamped to [0, 1]
  Vector angles;      // canonical angles, ascending
  double max_angle = 0.0;
  Matrix Q;           // k x k orthogonal, minimizes |Vt - V Q|_F
  double sin_theta_fro = 0.0;
  double proj_dist_fro = 0.0;
  double embed_dist_2 = 0.0;  // |Vt - V Q|_2
  double max_row_dist = 0.0;  // max_i |vt(i) - v(i) Q|_2
  Vector row_dists;
};

namespace detail {

inline void require_orthonormal_pair(const Matrix& V, const Matrix& Vt, const char* who) {
  require(V.rows() == Vt.rows() && V.cols() == Vt.cols(),
          std::string(who) + ": bases must have the same shape");
  require(V.cols() >= 1 && V.cols() <= V.rows(), std::string(who) + ": need 1 <= k <= N");
  const Matrix I = Matrix::Identity(V.cols(), V.cols());
  require((V.transpose() * V - I).cwiseAbs().maxCoeff() <= 1e-8,
          std::string(who) + ": first basis is not orthonormal");
  require((Vt.transpose() * Vt - I).cwiseAbs().maxCoeff() <= 1e-8,
          std::string(who) + ": second basis is not orthonormal");
}

inline Vector clamped_cosines(const Vector& s) {
  return s.cwiseMax(0.0).cwiseMin(1.0);
}

/// Vt - V V^T Vt; its singular values are the sines of the canonical angles.
inline Matrix orthogonal_residual(const Matrix& V, const Matrix& Vt) {
  return Vt - V * (V.transpose() * Vt);
}

/// arccos loses half the digits near 0, so small angles come from the sines.
inline Vector angles_from(const Vector& cosines, const Matrix& residual) {
  const Vector sd = svd(residual).singular_values;  // descending
  const Eigen::Index k = cosines.size();
  Vector angles(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const double c = cosines(i);
    const double sn = std::min(1.0, sd(k - 1 - i));
    angles(i) = c * c >= 0.5 ? std::asin(sn) : std::acos(c);
  }
  return angles;
}

}  // namespace detail

/// theta_i = arccos(gamma_i), gamma_i the singular values of V^T Vt; returned
/// ascending so the last entry is the largest angle.
inline Vector canonical_angles(const Matrix& V, const Matrix& Vt) {
  detail::require_orthonormal_pair(V, Vt, "canonical_angles");
  const Vector cosines = detail::clamped_cosines(svd(V.transpose() * Vt).singular_values);
  return detail::angles_from(cosines, detail::orthogonal_residual(V, Vt));
}

struct ProcrustesResult {
  Matrix Q;
  double embed_dist_2 = 0.0;
  Vector row_dists;
};

/// Q = Y Z^T from V^T Vt = Y diag(cos theta) Z^T.
inline ProcrustesResult procrustes_align(const Matrix& V, const Matrix& Vt) {
  detail::require_orthonormal_pair(V, Vt, "procrustes_align");
  const SvdResult s = svd(V.transpose() * Vt);
  ProcrustesResult out;
  out.Q = s.U * s.V.transpose();
  const Matrix diff = Vt - V * out.Q;
  out.embed_dist_2 = spectral_norm(diff);
  out.row_dists = diff.rowwise().norm();
  return out;
}

/// |V V^T - Vt Vt^T|_F = sqrt(2) |Vt - V V^T Vt|_F, without forming the
/// N x N projectors.
inline double projection_distance(const Matrix& V, const Matrix& Vt) {
  detail::require_orthonormal_pair(V, Vt, "projection_distance");
  return std::sqrt(2.0) * detail::orthogonal_residual(V, Vt).norm();
}

inline SubspaceComparison compare_subspaces(const Matrix& V, const Matrix& Vt) {
  detail::require_orthonormal_pair(V, Vt, "compare_subspaces");
  SubspaceComparison out;
  out.k = static_cast<int>(V.cols());
  const SvdResult s = svd(V.transpose() * Vt);
  out.cos_gammas = detail::clamped_cosines(s.singular_values);
  const Matrix residual = detail::orthogonal_residual(V, Vt);
  out.angles = detail::angles_from(out.cos_gammas, residual);
  out.max_angle = out.angles.size() ? out.angles.maxCoeff() : 0.0;
  out.sin_theta_fro = residual.norm();
  out.proj_dist_fro = std::sqrt(2.0) * out.sin_theta_fro;
  out.Q = s.U * s.V.transpose();
  const Matrix diff = Vt - V * out.Q;
  out.embed_dist_2 = spectral_norm(diff);
  out.row_dists = diff.rowwise().norm();
  out.max_row_dist = out.row_dists.maxCoeff();
  return out;
}

}  // namespace specperturb

#endif  // SPECPERTURB_SUBSPACE_HPP
