#include <lgpr/linalg.hpp>

#include <gtest/gtest.h>

using namespace lgpr;

TEST(Linalg, WellConditionedMatrixKeepsBaseJitter) {
  Matrix K = Matrix::Identity(6, 6) * 2.0;
  K(0, 1) = K(1, 0) = 0.5;
  const Cholesky c = robust_cholesky(K, "x");
  EXPECT_DOUBLE_EQ(c.jitter, kJitterRelative * K.diagonal().mean());
}

TEST(Linalg, RankDeficientMatrixEscalatesUntilConditioned) {
  const Matrix K = Matrix::Ones(8, 8);
  const Cholesky c = robust_cholesky(K, "x");
  EXPECT_GT(c.jitter, kJitterRelative);
  EXPECT_LE(c.jitter, kJitterRelativeMax);
  EXPECT_GE(c.llt.rcond() * 8.0, kConditionFloor);
  // one step less would not have been conditioned enough
  Matrix A = K;
  A.diagonal().array() += c.jitter / 10.0;
  EXPECT_LT(Eigen::LLT<Matrix>(A).rcond() * 8.0, kConditionFloor);
}

TEST(Linalg, IndefiniteMatrixFailsWithMessage) {
  Matrix K = Matrix::Identity(3, 3);
  K(2, 2) = -1.0;
  try {
    robust_cholesky(K, "ill-conditioned inducing matrix");
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "ill-conditioned inducing matrix");
  }
}

TEST(Linalg, LogDetAndInverseIncludeJitter) {
  Matrix K(2, 2);
  K << 2.0, 0.3, 0.3, 1.0;
  const Cholesky c = robust_cholesky(K, "x");
  Matrix A = K;
  A.diagonal().array() += c.jitter;
  EXPECT_NEAR(c.log_det(), std::log(A.determinant()), 1e-12);
  EXPECT_TRUE((c.inverse() * A).isApprox(Matrix::Identity(2, 2), 1e-12));
}
