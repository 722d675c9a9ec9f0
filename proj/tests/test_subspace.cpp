#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "specperturb/subspace.hpp"

using namespace specperturb;

namespace {

Matrix basis(Eigen::Index n, Eigen::Index k, SeededRng& rng) {
  return random_orthonormal(static_cast<std::size_t>(n), static_cast<std::size_t>(k), rng);
}

Vector unit(Eigen::Index n, Eigen::Index i) { return Vector::Unit(n, i); }

}  // namespace

TEST(CanonicalAngles, SameSpan) {
  SeededRng rng(1);
  const Matrix V = basis(10, 3, rng);
  const Vector a = canonical_angles(V, V);
  EXPECT_LE(a.maxCoeff(), 1e-7);
}

TEST(CanonicalAngles, OneDimensionalExamples) {
  const Vector e1 = unit(3, 0), e2 = unit(3, 1);
  EXPECT_NEAR(canonical_angles(e1, e2)(0), std::numbers::pi / 2, 1e-14);
  const Vector d = (e1 + e2) / std::sqrt(2.0);
  EXPECT_NEAR(canonical_angles(e1, d)(0), std::numbers::pi / 4, 1e-14);
  EXPECT_NEAR(canonical_angles(e1, d)(0), oracle::line_angle(e1, d), 1e-14);
}

TEST(CanonicalAngles, OneDimensionalMatchesLineAngle) {
  SeededRng rng(2);
  for (int t = 0; t < 50; ++t) {
    const Matrix v = basis(6, 1, rng), w = basis(6, 1, rng);
    EXPECT_NEAR(canonical_angles(v, w)(0), oracle::line_angle(v.col(0), w.col(0)), 1e-12);
  }
}

TEST(CanonicalAngles, RejectsBadBases) {
  Matrix V = Matrix::Zero(4, 2);
  V(0, 0) = 1;
  V(1, 1) = 2;
  const Matrix W = Matrix::Identity(4, 2);
  EXPECT_THROW(canonical_angles(V, W), InvalidArgument);
  EXPECT_THROW(canonical_angles(W, Matrix::Identity(4, 3)), InvalidArgument);
}

TEST(Procrustes, IdentityAndRotation) {
  SeededRng rng(3);
  const Matrix V = basis(12, 3, rng);
  const ProcrustesResult same = procrustes_align(V, V);
  EXPECT_LE((same.Q - Matrix::Identity(3, 3)).norm(), 1e-10);
  EXPECT_LE(same.embed_dist_2, 1e-10);
  const Matrix R = basis(3, 3, rng);
  const ProcrustesResult rot = procrustes_align(V, V * R);
  EXPECT_LE((rot.Q - R).norm(), 1e-10);
  EXPECT_LE(rot.embed_dist_2, 1e-10);
  EXPECT_LE(rot.row_dists.maxCoeff(), 1e-10);
}

TEST(Procrustes, SignFlip) {
  SeededRng rng(4);
  const Matrix v = basis(8, 1, rng);
  const ProcrustesResult r = procrustes_align(v, -v);
  EXPECT_NEAR(r.Q(0, 0), -1.0, 1e-14);
  EXPECT_LE(r.embed_dist_2, 1e-14);
}

TEST(Procrustes, GlobalMinimizerAgainstRandomRotations) {
  SeededRng rng(5);
  for (int t = 0; t < 5; ++t) {
    const Matrix V = basis(20, 3, rng), Vt = basis(20, 3, rng);
    const ProcrustesResult r = procrustes_align(V, Vt);
    const double best = (Vt - V * r.Q).norm();
    EXPECT_LE((r.Q.transpose() * r.Q - Matrix::Identity(3, 3)).norm(), 1e-10);
    for (int i = 0; i < 200; ++i) {
      Matrix R = basis(3, 3, rng);
      if (i % 2) R.col(0) *= -1.0;  // include reflections
      EXPECT_LE(best, (Vt - V * R).norm() + 1e-12);
    }
  }
}

TEST(ProjectionDistance, Examples) {
  SeededRng rng(6);
  const Matrix V = basis(9, 2, rng);
  EXPECT_LE(projection_distance(V, V), 1e-7);
  EXPECT_NEAR(projection_distance(unit(3, 0), unit(3, 2)), std::sqrt(2.0), 1e-14);
  const Matrix W = basis(9, 2, rng);
  const Matrix diff = V * V.transpose() - W * W.transpose();
  EXPECT_NEAR(projection_distance(V, W), diff.norm(), 1e-12);
}

TEST(CompareSubspaces, PropertiesOnRandomPairs) {
  SeededRng rng(7);
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index n = 3 + static_cast<Eigen::Index>(rng.below(30));
    const Eigen::Index k = 1 + static_cast<Eigen::Index>(rng.below(static_cast<std::size_t>(std::min<Eigen::Index>(n, 6))));
    const Matrix V = basis(n, k, rng);
    // Nearby and far pairs.
    Matrix Vt = basis(n, k, rng);
    if (t % 2) {
      Vt = V + 0.05 * gaussian_matrix(static_cast<std::size_t>(n), static_cast<std::size_t>(k), rng);
      Vt = Eigen::HouseholderQR<Matrix>(Vt).householderQ() * Matrix::Identity(n, k);
    }
    const SubspaceComparison c = compare_subspaces(V, Vt);
    const double dk = static_cast<double>(k);
    EXPECT_NEAR(c.proj_dist_fro, std::sqrt(2.0) * c.sin_theta_fro, 1e-8);
    EXPECT_NEAR(c.proj_dist_fro * c.proj_dist_fro + 2.0 * (V.transpose() * Vt).squaredNorm(), 2.0 * dk, 1e-8);
    EXPECT_LE((c.Q.transpose() * c.Q - Matrix::Identity(k, k)).norm(), 1e-10);
    for (Eigen::Index i = 0; i < k; ++i) {
      EXPECT_GE(c.angles(i), 0.0);
      EXPECT_LE(c.angles(i), std::numbers::pi / 2 + 1e-15);
      const double cs = std::cos(c.angles(i)), sn = std::sin(c.angles(i));
      EXPECT_LE((cs - 1) * (cs - 1), sn * sn + 1e-15);
      if (i) {
        EXPECT_LE(c.angles(i - 1), c.angles(i));
      }
    }
    EXPECT_DOUBLE_EQ(c.max_angle, c.angles.maxCoeff());
    EXPECT_LE(c.max_row_dist, c.embed_dist_2 + 1e-12);
  }
}

TEST(CompareSubspaces, RightRotationInvariance) {
  SeededRng rng(8);
  for (int t = 0; t < 20; ++t) {
    const Matrix V = basis(15, 3, rng), Vt = basis(15, 3, rng);
    const Matrix R1 = basis(3, 3, rng), R2 = basis(3, 3, rng);
    const SubspaceComparison a = compare_subspaces(V, Vt);
    const SubspaceComparison b = compare_subspaces(V * R1, Vt * R2);
    EXPECT_LE((a.angles - b.angles).cwiseAbs().maxCoeff(), 1e-7);
    EXPECT_NEAR(a.sin_theta_fro, b.sin_theta_fro, 1e-8);
    EXPECT_NEAR(a.proj_dist_fro, b.proj_dist_fro, 1e-8);
    EXPECT_NEAR(a.embed_dist_2, b.embed_dist_2, 1e-8);
    EXPECT_NEAR(a.max_row_dist, b.max_row_dist, 1e-8);
    // Q transforms covariantly: Q_b = R1^T Q_a R2.
    EXPECT_LE((b.Q - R1.transpose() * a.Q * R2).norm(), 1e-8);
  }
}
