#include <gtest/gtest.h>

#include <random>

#include "lgbfgs/correction.hpp"
#include "lgbfgs/kernels.hpp"
#include "stores.hpp"

using namespace lgbfgs;

TEST(ScaleFactor, Examples) {
  EXPECT_EQ(scale_factor(3.0, {}, 10.0, 0), 1.0);
  EXPECT_EQ(scale_factor(3.0, {CorrectionMode::basic}, 0.0, 5), 1.0);
  EXPECT_DOUBLE_EQ(scale_factor(0.5, {CorrectionMode::basic}, 2.0, 5), 2.0);
  EXPECT_DOUBLE_EQ(scale_factor(0.0, {CorrectionMode::delta, 0.1, 0.5}, 0.0, 2), 1.025);
  EXPECT_THROW(scale_factor(-1.0, {}, 1.0, 0), InvalidArgument);
}

TEST(CorrectionConfig, Validation) {
  EXPECT_NO_THROW((CorrectionConfig{CorrectionMode::delta, 0.1, 0.5}.validate()));
  EXPECT_THROW((CorrectionConfig{CorrectionMode::delta, 0.0, 0.5}.validate()), InvalidArgument);
  EXPECT_THROW((CorrectionConfig{CorrectionMode::delta, 0.1, 1.0}.validate()), InvalidArgument);
}

TEST(Phi, Examples) {
  Vector diag(2);
  diag << 1, 4;
  const QuadraticObjective q = QuadraticObjective::diagonal(diag);
  EXPECT_EQ(compute_phi(q, Vector::Ones(2), Vector::Ones(2)), 0.0);
  EXPECT_DOUBLE_EQ(compute_phi(q, Vector::Zero(2), Vector::Ones(2)), std::sqrt(5.0));
}

TEST(ApplyScaling, IdentityAndRejection) {
  std::mt19937_64 rng(1);
  const PairStore s = oracle::random_store(rng, oracle::random_spd(rng, 4), 3, 3, 0.5);
  const PairStore same = apply_scaling(s, 1.0);
  EXPECT_EQ(same.h0_scale(), s.h0_scale());
  for (Index k = 0; k < s.size(); ++k) EXPECT_EQ(same[k].r, s[k].r);
  EXPECT_THROW(apply_scaling(s, 0.9), InvalidArgument);
}

TEST(ApplyScaling, SmallExample) {
  PairStore s(2, 1, 1.0);
  Vector r(2);
  r << 2, 0;
  s = insert_c1(s, {0, r});
  const PairStore t = apply_scaling(s, 2.0);
  Matrix want = Matrix::Zero(2, 2);
  want.diagonal() << 4, 2;
  EXPECT_LE((dense_B_from_pairs(t) - want).norm(), 1e-14);
}

TEST(ApplyScaling, DenseHDividesByPsi) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const Index d = 2 + static_cast<Index>(rng() % 10);
    const Index m = 1 + static_cast<Index>(rng() % static_cast<std::uint64_t>(std::min<Index>(d, 6)));
    const PairStore s = oracle::random_store(rng, oracle::random_spd(rng, d), m, m, 0.8);
    const double psi = std::uniform_real_distribution<double>(1.0, 5.0)(rng);
    EXPECT_LE(oracle::rel(oracle::replay_H(apply_scaling(s, psi)), Matrix(oracle::replay_H(s) / psi)), 1e-10);
  }
}

// Scaling B0 and every r by ψ scales the whole BFGS chain by ψ, with general directions.
TEST(ScaledChain, DirectChainScalesByPsi) {
  std::mt19937_64 rng(3);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Index d = 2 + static_cast<Index>(rng() % 8);
    const Index len = 1 + static_cast<Index>(rng() % 6);
    const Matrix A = oracle::random_spd(rng, d);
    const Matrix B0 = oracle::random_spd(rng, d);
    const double psi = std::uniform_real_distribution<double>(1.0, 4.0)(rng);
    Matrix B = B0, Bs = psi * B0;
    for (Index u = 0; u < len; ++u) {
      const Vector s = oracle::random_vector(rng, d);
      B = oracle::bfgs(B, s, A * s);
      Bs = oracle::bfgs(Bs, s, psi * (A * s));
    }
    worst = std::max(worst, oracle::rel(Bs, Matrix(psi * B)));
  }
  EXPECT_LE(worst, 1e-10);
}

// With B_t ⪰ ∇²f and correction ψ ≥ 1 the scaled matrix stays above the Hessian.
TEST(ScaledChain, ScalingPreservesDominance) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const Index d = 5;
    const Matrix A = oracle::random_spd(rng, d);
    const double big = A.eigenvalues().real().maxCoeff();
    PairStore s(d, d, 1.0 / big);
    for (Index i : oracle::permutation(rng, d)) {
      if (s.size() == 3) break;
      s = insert_c1(s, {i, A.col(i)});
    }
    const Matrix B = dense_B_from_pairs(apply_scaling(s, 1.5));
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<Matrix>(Matrix(B - A)).eigenvalues().minCoeff(), -1e-9);
  }
}
