#include "mckelm/kernels.hpp"

#include "oracles.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace mckelm;

TEST(Rbf, ZeroDistanceAndHandValue) {
  Eigen::Vector2d x(0.3, -2.0);
  EXPECT_EQ(rbf_kernel(x, x, 3.7), 1.0);
  EXPECT_NEAR(rbf_kernel(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 0), 1.0), 0.36787944117144233, 1e-15);
  EXPECT_THROW(rbf_kernel(Eigen::Vector2d(0, 0), Eigen::Vector3d(0, 0, 0), 1.0), Error);
}

TEST(ChiSquare, ZeroOverZeroRuleAndDomain) {
  Eigen::Vector2d x(0.25, 0.0);
  EXPECT_EQ(chi_square_kernel(x, x, 2.0), 1.0);
  // second component is 0/0 and contributes nothing: (1-0)^2/(1+0) = 1
  EXPECT_NEAR(chi_square_kernel(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 0), 1.0), 0.36787944117144233, 1e-15);
  try {
    chi_square_kernel(Eigen::Vector2d(-0.1, 0.5), Eigen::Vector2d(0, 0), 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::domain);
  }
}

TEST(Kernels, SymmetricAndBoundedOnRandomPairs) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix xy = oracle::random_matrix(2, 6, rng);
    const auto x = xy.row(0);
    const auto y = xy.row(1);
    for (double param : {0.1, 1.0, 10.0}) {
      const double r1 = rbf_kernel(x, y, param), r2 = rbf_kernel(y, x, param);
      const double c1 = chi_square_kernel(x, y, param), c2 = chi_square_kernel(y, x, param);
      EXPECT_EQ(r1, r2);
      EXPECT_EQ(c1, c2);
      EXPECT_GT(r1, 0.0);
      EXPECT_LT(r1, 1.0);
      EXPECT_GT(c1, 0.0);
      EXPECT_LT(c1, 1.0);
    }
  }
}

TEST(KernelMatrix, SingleRowAndExactSymmetry) {
  Matrix one(1, 3);
  one << 0.1, 0.2, 0.3;
  EXPECT_EQ(kernel_matrix(one, {}), Matrix::Constant(1, 1, 1.0));

  std::mt19937_64 rng(1);
  const Matrix x = oracle::random_matrix(25, 4, rng);
  for (auto kind : {KernelKind::rbf, KernelKind::chi_square}) {
    const Matrix k = kernel_matrix(x, {kind, 1.0, 1.0});
    EXPECT_EQ((k - k.transpose()).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_TRUE((k.diagonal().array() == 1.0).all());
  }
}

TEST(KernelMatrix, PositiveSemidefiniteOnRandomSets) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 2 + rng() % 19;
    const std::size_t d = 1 + rng() % 5;
    const Matrix x = oracle::random_matrix(n, d, rng);
    for (auto kind : {KernelKind::rbf, KernelKind::chi_square}) {
      const Matrix k = kernel_matrix(x, {kind, 1.0, 1.0});
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k);
      EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-8) << "n=" << n << " kind=" << to_string(kind);
    }
  }
  // frozen case: 10 random rows in [0,1]^2, RBF gamma = 1
  const Matrix x = oracle::random_matrix(10, 2, rng);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(kernel_matrix(x, {KernelKind::rbf, 1.0, 1.0}));
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-8);
}

TEST(KernelMatrix, ChiSquareRejectsOutOfRangeRow) {
  Matrix x(2, 2);
  x << 0.5, 0.5, 1.2, 0.1;
  EXPECT_THROW(kernel_matrix(x, {KernelKind::chi_square, 1.0, 1.0}), Error);
}

TEST(CrossMatrix, ConsistencyShapeAndZeroDistance) {
  std::mt19937_64 rng(3);
  const Matrix s = oracle::random_matrix(3, 4, rng);
  for (auto kind : {KernelKind::rbf, KernelKind::chi_square}) {
    const KernelParams p{kind, 2.0, 0.5};
    EXPECT_EQ(kernel_cross_matrix(s, s, p), kernel_matrix(s, p));
  }
  const Matrix q = s.topRows(2);
  const Matrix k = kernel_cross_matrix(q, s, {});
  EXPECT_EQ(k.rows(), 2);
  EXPECT_EQ(k.cols(), 3);
  EXPECT_EQ(k(1, 1), 1.0);
  EXPECT_THROW(kernel_cross_matrix(Matrix::Zero(1, 2), s, {}), Error);
}

TEST(CrossMatrix, ThreadedMatchesSerial) {
  std::mt19937_64 rng(4);
  const Matrix q = oracle::random_matrix(40, 3, rng);
  const Matrix s = oracle::random_matrix(30, 3, rng);
  EXPECT_EQ(kernel_cross_matrix(q, s, {}, 4), kernel_cross_matrix(q, s, {}, 1));
  EXPECT_EQ(kernel_matrix(s, {}, 4), kernel_matrix(s, {}, 1));
}

TEST(KernelParams, Validation) {
  EXPECT_THROW((KernelParams{KernelKind::rbf, 0.0, 1.0}.validate()), Error);
  EXPECT_THROW((KernelParams{KernelKind::chi_square, 1.0, -1.0}.validate()), Error);
  EXPECT_NO_THROW((KernelParams{KernelKind::rbf, 1.0, -1.0}.validate()));
}
