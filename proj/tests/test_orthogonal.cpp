#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "givens/flops.hpp"
#include "givens/orthogonal.hpp"
#include "givens/rotation.hpp"

using givens::Matrix;
using givens::orthogonality_defect;
using givens::random_orthogonal;

TEST(OrthogonalityDefect, IdentityIsZero) {
  EXPECT_EQ(orthogonality_defect(Matrix::Identity(4, 4)), 0.0);
}

TEST(OrthogonalityDefect, ScaledIdentity) {
  // U = 2I at d=2: U^T U - I = 3I, Frobenius norm 3*sqrt(2)
  Matrix u = 2.0 * Matrix::Identity(2, 2);
  EXPECT_NEAR(orthogonality_defect(u), 3.0 * std::sqrt(2.0), 1e-14);
}

TEST(OrthogonalityDefect, RejectsNonSquare) {
  EXPECT_THROW(orthogonality_defect(Matrix::Zero(3, 2)), givens::shape_error);
}

TEST(RandomOrthogonal, RejectsZeroDimension) {
  EXPECT_THROW(random_orthogonal(0, 1), givens::shape_error);
}

TEST(RandomOrthogonal, DimensionOneIsSignOnly) {
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull}) {
    Matrix u = random_orthogonal(1, seed).matrix();
    EXPECT_NEAR(std::abs(u(0, 0)), 1.0, 1e-15);
    Matrix again = random_orthogonal(1, seed).matrix();
    EXPECT_EQ(u(0, 0), again(0, 0));
  }
}

TEST(RandomOrthogonal, DeterministicGivenSeed) {
  Matrix a = random_orthogonal(8, 123).matrix();
  Matrix b = random_orthogonal(8, 123).matrix();
  EXPECT_TRUE(a.isApprox(b, 0.0));  // bitwise identical
  Matrix c = random_orthogonal(8, 124).matrix();
  EXPECT_FALSE(a.isApprox(c, 1e-12));
}

TEST(RandomOrthogonal, LargeDimensionDefect) {
  Matrix u = random_orthogonal(50, 9).matrix();
  EXPECT_LE(orthogonality_defect(u), 1e-12);
}

TEST(OrthogonalMatrix, ConstructorEnforcesInvariant) {
  EXPECT_NO_THROW(givens::OrthogonalMatrix(Matrix::Identity(3, 3)));
  Matrix bad = Matrix::Identity(3, 3);
  bad(0, 0) = 1.5;
  EXPECT_THROW(givens::OrthogonalMatrix{bad}, givens::shape_error);
}

// Long product of random rotations applied to the identity stays on the
// manifold without any re-orthogonalization. The full-length version runs in
// the acceptance suite; this keeps a faster smoke check in the unit tests.
TEST(OrthogonalMatrix, RotationDriftStaysSmall) {
  const int d = 20;
  Matrix u = Matrix::Identity(d, d);
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> angle(-givens::pi, givens::pi);
  std::uniform_int_distribution<int> idx(0, d - 1);
  givens::FlopCounter fc;
  for (int t = 0; t < 20000; ++t) {
    int i = idx(rng), j = idx(rng);
    if (i == j) continue;
    if (i > j) std::swap(i, j);
    rotate_columns(u, givens::GivensRotation{i, j, angle(rng)}, fc);
  }
  EXPECT_LE(orthogonality_defect(u), 1e-10);
}
