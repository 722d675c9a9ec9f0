#include <cmath>

#include <gtest/gtest.h>

#include "specperturb/numkernel.hpp"

using namespace specperturb;

namespace {

Matrix random_symmetric(Eigen::Index n, SeededRng& rng) {
  const Matrix g = gaussian_matrix(static_cast<std::size_t>(n), static_cast<std::size_t>(n), rng);
  return 0.5 * (g + g.transpose());
}

void expect_eigen_invariants(const Matrix& S, const SymEigResult& r) {
  const Eigen::Index n = S.rows();
  const Matrix& V = r.eigenvectors;
  EXPECT_LE((S * V - V * r.eigenvalues.asDiagonal()).norm(), 1e-8 * std::max(1.0, S.norm()));
  EXPECT_LE((V.transpose() * V - Matrix::Identity(n, n)).norm(), 1e-10);
  for (Eigen::Index i = 1; i < n; ++i) EXPECT_GE(r.eigenvalues(i - 1), r.eigenvalues(i));
}

void expect_sign_convention(const Matrix& V) {
  for (Eigen::Index j = 0; j < V.cols(); ++j) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < V.rows(); ++i)
      if (std::abs(V(i, j)) > std::abs(V(best, j))) best = i;
    EXPECT_GT(V(best, j), 0.0) << "column " << j;
  }
}

}  // namespace

TEST(SymEig, Identity) {
  const SymEigResult r = sym_eig(Matrix::Identity(2, 2));
  EXPECT_DOUBLE_EQ(r.eigenvalues(0), 1.0);
  EXPECT_DOUBLE_EQ(r.eigenvalues(1), 1.0);
  expect_eigen_invariants(Matrix::Identity(2, 2), r);
}

TEST(SymEig, SwapMatrix) {
  Matrix s(2, 2);
  s << 0, 1, 1, 0;
  const SymEigResult r = sym_eig(s);
  EXPECT_NEAR(r.eigenvalues(0), 1.0, 1e-14);
  EXPECT_NEAR(r.eigenvalues(1), -1.0, 1e-14);
  const double h = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(std::abs(r.eigenvectors(0, 0)), h, 1e-12);
  EXPECT_NEAR(r.eigenvectors(0, 0), r.eigenvectors(1, 0), 1e-12);
  EXPECT_NEAR(r.eigenvectors(0, 1), -r.eigenvectors(1, 1), 1e-12);
  expect_sign_convention(r.eigenvectors);
}

TEST(SymEig, BlockOnesAndOne) {
  Matrix s = Matrix::Zero(3, 3);
  s.block(0, 0, 2, 2).setOnes();
  s(2, 2) = 1.0;
  const SymEigResult r = sym_eig(s);
  EXPECT_NEAR(r.eigenvalues(0), 2.0, 1e-13);
  EXPECT_NEAR(r.eigenvalues(1), 1.0, 1e-13);
  EXPECT_NEAR(r.eigenvalues(2), 0.0, 1e-13);
}

TEST(SymEig, RejectsBadInput) {
  EXPECT_THROW(sym_eig(Matrix::Zero(2, 3)), InvalidArgument);
  Matrix a(2, 2);
  a << 1, 2, 3, 4;
  EXPECT_THROW(sym_eig(a), InvalidArgument);
}

TEST(SymEig, RandomInvariantsJacobi) {
  SeededRng rng(11);
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.below(50));
    const Matrix S = random_symmetric(n, rng);
    const SymEigResult r = sym_eig(S, Solver::Jacobi);
    expect_eigen_invariants(S, r);
    expect_sign_convention(r.eigenvectors);
  }
}

TEST(SymEig, SolversAgree) {
  SeededRng rng(12);
  for (int t = 0; t < 20; ++t) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.below(40));
    const Matrix S = random_symmetric(n, rng);
    const SymEigResult a = sym_eig(S, Solver::Jacobi);
    const SymEigResult b = sym_eig(S, Solver::Library);
    expect_eigen_invariants(S, b);
    EXPECT_LE((a.eigenvalues - b.eigenvalues).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, S.norm()));
    // Generic spectra are simple, so the sign convention pins the vectors.
    EXPECT_LE((a.eigenvectors - b.eigenvectors).cwiseAbs().maxCoeff(), 1e-7);
  }
}

TEST(SymEig, LargeUsesLibraryPath) {
  SeededRng rng(13);
  const Matrix S = random_symmetric(160, rng);
  const SymEigResult r = sym_eig(S);
  expect_eigen_invariants(S, r);
  expect_sign_convention(r.eigenvectors);
}

TEST(SymEig, BitDeterministic) {
  SeededRng rng(14);
  const Matrix S = random_symmetric(30, rng);
  const SymEigResult a = sym_eig(S);
  const SymEigResult b = sym_eig(S);
  EXPECT_TRUE((a.eigenvalues.array() == b.eigenvalues.array()).all());
  EXPECT_TRUE((a.eigenvectors.array() == b.eigenvectors.array()).all());
}

TEST(Svd, Diagonal) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 3.0;
  m(1, 1) = 1.0;
  const SvdResult r = svd(m);
  EXPECT_NEAR(r.singular_values(0), 3.0, 1e-14);
  EXPECT_NEAR(r.singular_values(1), 1.0, 1e-14);
  EXPECT_LE((r.U - Matrix::Identity(2, 2)).norm(), 1e-12);
  EXPECT_LE((r.V - Matrix::Identity(2, 2)).norm(), 1e-12);
}

TEST(Svd, ZeroMatrix) {
  const SvdResult r = svd(Matrix::Zero(3, 2));
  EXPECT_EQ(r.singular_values.size(), 2);
  EXPECT_EQ(r.singular_values.maxCoeff(), 0.0);
  EXPECT_EQ(r.rank(), 0);
}

TEST(Svd, RankOneGram) {
  Matrix m(2, 2);
  m << 1, 2, 2, 4;
  // Oracle: M^T M = [[5,10],[10,20]] has trace 25 and determinant 0, so its
  // eigenvalues are 25 and 0 and the singular values are 5 and 0.
  const Matrix g = m.transpose() * m;
  const double tr = g.trace(), det = g.determinant();
  const double l1 = 0.5 * (tr + std::sqrt(tr * tr - 4 * det));
  const SvdResult r = svd(m);
  EXPECT_NEAR(r.singular_values(0), std::sqrt(l1), 1e-12);
  EXPECT_NEAR(r.singular_values(0), 5.0, 1e-12);
  EXPECT_NEAR(r.singular_values(1), 0.0, 1e-12);
  EXPECT_EQ(r.rank(), 1);
}

TEST(Svd, RandomReconstruction) {
  SeededRng rng(21);
  for (int t = 0; t < 100; ++t) {
    const std::size_t rows = 1 + rng.below(100), cols = 1 + rng.below(100);
    const Matrix m = gaussian_matrix(rows, cols, rng);
    const SvdResult r = svd(m);
    EXPECT_LE((r.reconstruct() - m).norm(), 1e-8 * m.norm());
    const Eigen::Index k = r.singular_values.size();
    EXPECT_LE((r.U.transpose() * r.U - Matrix::Identity(k, k)).norm(), 1e-10);
    EXPECT_LE((r.V.transpose() * r.V - Matrix::Identity(k, k)).norm(), 1e-10);
    for (Eigen::Index i = 0; i < k; ++i) {
      EXPECT_GE(r.singular_values(i), 0.0);
      if (i) {
        EXPECT_GE(r.singular_values(i - 1), r.singular_values(i));
      }
    }
  }
}

TEST(Svd, WideAndTallAgreeWithLibrary) {
  SeededRng rng(22);
  for (auto [rows, cols] : {std::pair<std::size_t, std::size_t>{7, 40}, {40, 7}, {12, 12}}) {
    const Matrix m = gaussian_matrix(rows, cols, rng);
    const SvdResult a = svd(m, Solver::Jacobi);
    const SvdResult b = svd(m, Solver::Library);
    EXPECT_LE((a.singular_values - b.singular_values).cwiseAbs().maxCoeff(), 1e-10 * m.norm());
  }
}

TEST(Svd, RankRevealing) {
  SeededRng rng(23);
  const Matrix a = gaussian_matrix(30, 3, rng), b = gaussian_matrix(3, 20, rng);
  EXPECT_EQ(svd(a * b).rank(), 3);
}

TEST(GaussianMatrix, SameSeedSameEntry) {
  SeededRng a(7), b(7);
  EXPECT_EQ(gaussian_matrix(1, 1, a)(0, 0), gaussian_matrix(1, 1, b)(0, 0));
}

TEST(GaussianMatrix, MeanNearZero) {
  SeededRng rng(99);
  const Matrix g = gaussian_matrix(100, 100, rng);
  EXPECT_LE(std::abs(g.mean()), 5.0 / 100.0);
  // Variance check as well, loose band.
  EXPECT_NEAR((g.array() - g.mean()).square().mean(), 1.0, 0.06);
}

TEST(GaussianMatrix, ShapeAndErrors) {
  SeededRng rng(1);
  const Matrix g = gaussian_matrix(2, 3, rng);
  EXPECT_EQ(g.rows(), 2);
  EXPECT_EQ(g.cols(), 3);
  EXPECT_THROW(gaussian_matrix(0, 3, rng), InvalidArgument);
  EXPECT_THROW(gaussian_matrix(3, 0, rng), InvalidArgument);
}

TEST(SeededRng, StreamsReproduceAndDiffer) {
  SeededRng a(5), b(5), c(6);
  for (int i = 0; i < 10; ++i) {
    const double x = a.normal();
    EXPECT_EQ(x, b.normal());
    EXPECT_NE(x, c.normal());
  }
  EXPECT_NE(derive_seed(1, 1), derive_seed(1, 2));
  EXPECT_EQ(derive_seed(9, 3), derive_seed(9, 3));
}

TEST(SeededRng, UniformRangeAndBelow) {
  SeededRng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_LT(rng.below(7), 7u);
  }
}

TEST(RandomOrthonormal, Columns) {
  SeededRng rng(4);
  const Matrix q = random_orthonormal(50, 8, rng);
  EXPECT_LE((q.transpose() * q - Matrix::Identity(8, 8)).norm(), 1e-12);
}
