#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lgbfgs/diagnostics.hpp"
#include "lgbfgs/synth.hpp"
#include "stores.hpp"

using namespace lgbfgs;

namespace {

Matrix diag(std::initializer_list<double> v) {
  Vector d(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) d(i++) = x;
  return d.asDiagonal();
}

std::vector<Index> iota_vec(Index n) {
  std::vector<Index> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), Index{0});
  return v;
}

}  // namespace

TEST(LambdaF, ZeroAtMinimizerAndExplicitForm) {
  std::mt19937_64 rng(1);
  const QuadraticObjective q(oracle::random_spd(rng, 6), oracle::random_vector(rng, 6));
  EXPECT_LE(lambda_f(q, q.minimizer()), 1e-12);
  const Vector x = oracle::random_vector(rng, 6);
  const Vector g = eval_value_grad(q, x).grad;
  EXPECT_NEAR(lambda_f(q, x), std::sqrt(g.dot(q.hessian().inverse() * g)), 1e-10);
}

TEST(LambdaF, SpectralBounds) {
  std::mt19937_64 rng(2);
  const LogisticObjective lg = synth_logistic({8, 80, 1e-2, 1.0, 3});
  const QuadraticObjective q = synth_quadratic({geometric_spectrum(8, 0.1, 10.0), -1, -1, true, 4});
  for (int k = 0; k < 20; ++k) {
    const Vector x = oracle::random_vector(rng, 8);
    for (const auto& [gn, lam, mu, L] :
         {std::tuple{eval_value_grad(lg, x).grad.norm(), lambda_f(lg, x), lg.info().mu, lg.info().lipschitz_L},
          std::tuple{eval_value_grad(q, x).grad.norm(), lambda_f(q, x), q.info().mu, q.info().lipschitz_L}}) {
      EXPECT_GE(lam, gn / std::sqrt(L) * (1 - 1e-10));
      EXPECT_LE(lam, gn / std::sqrt(mu) * (1 + 1e-10));
    }
  }
}

TEST(LambdaF, DenseAndCgAgree) {
  std::mt19937_64 rng(3);
  for (Index d : {5, 40, 200}) {
    const LogisticObjective lg = synth_logistic({d, 3 * d, 1e-3, 1.0, static_cast<std::uint64_t>(d)});
    for (int k = 0; k < 3; ++k) {
      const Vector x = oracle::random_vector(rng, d) / std::sqrt(static_cast<double>(d));
      const double a = lambda_f_dense(lg, x);
      EXPECT_NEAR(lambda_f_cg(lg, x), a, 1e-8 * std::max(1.0, a)) << "d=" << d;
    }
  }
}

TEST(Sigma, Examples) {
  std::mt19937_64 rng(4);
  const Matrix A = oracle::random_spd(rng, 5);
  EXPECT_NEAR(sigma_metric(A, A), 0.0, 1e-12);
  EXPECT_NEAR(sigma_metric(A, Matrix(2.0 * A)), 5.0, 1e-12);
  EXPECT_NEAR(sigma_metric(diag({1, 2}), diag({2, 2})), 1.0, 1e-15);
  EXPECT_THROW(sigma_metric(diag({1, -1}), diag({1, 1})), CurvatureError);
}

TEST(Beta, Examples) {
  const BetaResult r = beta_subset(diag({1, 2, 4}), {0, 1});
  ASSERT_EQ(r.betas.size(), 2);
  EXPECT_DOUBLE_EQ(r.betas(0), 4.0);
  EXPECT_DOUBLE_EQ(r.betas(1), 2.0);
  EXPECT_DOUBLE_EQ(r.beta_tau, 2.0);
  EXPECT_DOUBLE_EQ(beta_subset(diag({1, 2, 4}), {0, 1, 2}).beta_tau, 1.0);
  EXPECT_THROW(beta_subset(diag({1, 0, 4}), {1}), InvalidArgument);
  EXPECT_THROW(beta_subset(diag({1, 2}), {}), InvalidArgument);
}

TEST(Beta, InfinityVariant) {
  EXPECT_EQ(beta_tau_or_inf(diag({1, 0, 4}), {1}), std::numeric_limits<double>::infinity());
  EXPECT_EQ(beta_tau_or_inf(Matrix::Zero(3, 3), {0, 1}), std::numeric_limits<double>::infinity());
  EXPECT_DOUBLE_EQ(beta_tau_or_inf(diag({1, 0, 4}), {0, 1}), 4.0);
}

TEST(Beta, FullBasisBoundsAndMonotonicity) {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 50; ++k) {
    const Index d = 2 + static_cast<Index>(rng() % 12);
    const Matrix E = oracle::random_spd(rng, d, 0.05);
    EXPECT_DOUBLE_EQ(beta_subset(E, iota_vec(d)).beta_tau, 1.0);
    const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(E).eigenvalues();
    const double cond = ev.maxCoeff() / ev.minCoeff();
    const BetaResult all = beta_subset(E, iota_vec(d));
    for (Index i = 0; i < d; ++i) {
      EXPECT_GE(all.betas(i), 1.0);
      EXPECT_LE(all.betas(i), cond * (1 + 1e-12));
    }
    auto perm = oracle::permutation(rng, d);
    const std::size_t small = 1 + rng() % static_cast<std::uint64_t>(d);
    const std::vector<Index> sub1(perm.begin(), perm.begin() + static_cast<long>(small));
    const std::vector<Index> sub2(perm.begin(), perm.begin() + static_cast<long>(1 + (small + rng() % d) % d));
    const auto& [lo, hi] = sub1.size() <= sub2.size() ? std::pair{sub1, sub2} : std::pair{sub2, sub1};
    EXPECT_GE(beta_subset(E, lo).beta_tau, beta_subset(E, hi).beta_tau);
  }
}

TEST(TraceMetricStep, NonNegativeOnRandomCorrectedStates) {
  std::mt19937_64 rng(6);
  const Index d = 5;
  const LogisticObjective lg = synth_logistic({d, 60, 0.05, 1.0, 6});
  const double CM = lg.info().self_concordant_CM;
  int checked = 0;
  for (int k = 0; k < 100; ++k) {
    const Vector x = 0.3 * oracle::random_vector(rng, d);
    const Vector x_next = x + 1e-3 * oracle::random_vector(rng, d);
    const Matrix Hx = dense_hessian(lg, x);
    // B ⪰ ∇²f(x), then the corrected greedy update at x_next.
    const Matrix B = Hx + 0.2 * oracle::random_spd(rng, d, 0.1);
    const double psi = 1.0 + CM * weighted_norm(lg, x, Vector(x_next - x));
    const Matrix Bs = psi * B;
    const Vector hd = dense_hessian(lg, x_next).diagonal();
    Index best = 0;
    for (Index i = 1; i < d; ++i)
      if (Bs(i, i) / hd(i) > Bs(best, best) / hd(best)) best = i;
    const Matrix Bn = oracle::bfgs(Bs, oracle::e(d, best), hess_column(lg, x_next, best));
    EXPECT_GE(prop3_residual(lg, x, x_next, B, Bn, iota_vec(d)), -1e-9);
    ++checked;
  }
  EXPECT_EQ(checked, 100);
}

TEST(TraceMetricStep, RejectsNonDominatingMatrix) {
  const QuadraticObjective q = QuadraticObjective::diagonal(Vector::Constant(2, 2.0));
  EXPECT_THROW(prop3_residual(q, Vector::Zero(2), Vector::Ones(2), diag({1, 1}), diag({1, 1}), {0, 1}),
               HypothesisError);
}

TEST(TheoryCurves, SpotValues) {
  RateParams p{1.0, 2.0, 4, 1.0, 0, 0.0, 0.5, 0.0};
  const TheoryCurves c0 = theory_curves(p, 0);
  EXPECT_EQ(c0.prop2_bound, 1.0);
  EXPECT_EQ(c0.region_eps_prop2, std::numeric_limits<double>::infinity());
  const TheoryCurves c2 = theory_curves(p, 2);
  EXPECT_DOUBLE_EQ(c2.thm2_bound, 0.669921875);
  EXPECT_DOUBLE_EQ(c2.prop2_bound, 0.5625);
  EXPECT_DOUBLE_EQ(c2.appF_bound, 0.421875);
  EXPECT_DOUBLE_EQ(c2.region_eps_thm1, std::log(2.0) / 72.0);
  p.C_M = 2.0;
  EXPECT_DOUBLE_EQ(theory_curves(p, 2).region_eps_prop2, std::log(1.5) / 16.0);
  p.C_beta = 0.5;
  EXPECT_THROW(theory_curves(p, 1), InvalidArgument);
}

TEST(TheoryCurves, ClosedFormRateMonotone) {
  RateParams p{0.1, 3.0, 6, 2.0, 3, 0.0, 0.5, 0.0};
  double prev = 2.0;
  for (long t = 0; t < 60; ++t) {
    const double b = theory_curves(p, t).thm2_bound;
    EXPECT_LE(b, prev);
    prev = b;
  }
  double prev_c = 0.0;
  for (double cb : {1.0, 1.5, 3.0, 10.0}) {
    p.C_beta = cb;
    const double b = theory_curves(p, 10).thm2_bound;
    EXPECT_GE(b, prev_c);
    prev_c = b;
  }
}

TEST(TheoryCurves, LoggedBetaRateAndOnset) {
  EXPECT_EQ(detect_t0({1.0}, 1.0, 1.0, 1), std::optional<long>(1));
  EXPECT_EQ(detect_t0({1.0, 1.0, 1.0}, 1.0, 2.0, 1), std::optional<long>(2));
  EXPECT_FALSE(detect_t0({50.0, 50.0}, 1.0, 2.0, 3).has_value());
  EXPECT_DOUBLE_EQ(thm1_bound({1.0, 1.0}, 1.0, 2.0, 1, 0, 2), 0.125);
  // Constant β equal to C_β reproduces the closed-form curve.
  const RateParams p{1.0, 2.0, 4, 1.5, 2, 0.0, 0.5, 0.0};
  const std::vector<double> betas(20, 1.5);
  EXPECT_NEAR(thm1_bound(betas, 1.0, 2.0, 4, 2, 5), theory_curves(p, 5).thm2_bound, 1e-15);
  EXPECT_THROW(thm1_bound({1.0}, 1.0, 2.0, 1, 0, 3), InvalidArgument);
}
