#pragma once

// Theoretical quantities and empirical theorem checks: the Newton decrement λ_f,
// the trace metric σ, relative condition numbers, the per-step Hessian-approximation
// inequality, and rate-bound curves. All dense work here is for verification at
// small d; the solvers never form B_t themselves.

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "lgbfgs/objective.hpp"

namespace lgbfgs {

/// Largest d for which lambda_f factors the dense Hessian.
inline constexpr Index kDenseLambdaMaxDim = 2000;

/// λ_f(x) = √(gᵀ ∇²f(x)⁻¹ g) via a dense Cholesky factorization.
template <Objective O>
double lambda_f_dense(const O& obj, const Vector& x) {
  const Vector g = eval_value_grad(obj, x).grad;
  const Eigen::LLT<Matrix> llt(dense_hessian(obj, x));
  if (llt.info() != Eigen::Success) throw CurvatureError("lambda_f: Hessian not positive definite");
  return std::sqrt(std::max(0.0, g.dot(llt.solve(g))));
}

/// λ_f(x) by conjugate gradients on ∇²f(x) y = g to relative residual `tol`.
template <Objective O>
double lambda_f_cg(const O& obj, const Vector& x, double tol = 1e-10, Index max_iter = -1) {
  const Vector g = eval_value_grad(obj, x).grad;
  const double gnorm = g.norm();
  if (gnorm == 0.0) return 0.0;
  if (max_iter < 0) max_iter = 10 * obj.info().dim + 100;
  Vector y = Vector::Zero(g.size());
  Vector res = g;
  Vector p = res;
  double rr = res.squaredNorm();
  for (Index it = 0; it < max_iter; ++it) {
    if (std::sqrt(rr) <= tol * gnorm) return std::sqrt(std::max(0.0, g.dot(y)));
    const Vector Ap = obj.hess_vec(x, p);
    const double alpha = rr / p.dot(Ap);
    y += alpha * p;
    res -= alpha * Ap;
    const double rr_new = res.squaredNorm();
    p = res + (rr_new / rr) * p;
    rr = rr_new;
  }
  if (std::sqrt(rr) <= tol * gnorm) return std::sqrt(std::max(0.0, g.dot(y)));
  throw Error("lambda_f: conjugate gradients did not converge");
}

template <Objective O>
double lambda_f(const O& obj, const Vector& x) {
  return obj.info().dim <= kDenseLambdaMaxDim ? lambda_f_dense(obj, x) : lambda_f_cg(obj, x);
}

/// σ(A, B) = Tr(A⁻¹B) − d.
inline double sigma_metric(const Matrix& hessian, const Matrix& B) {
  const Eigen::LLT<Matrix> llt(hessian);
  if (llt.info() != Eigen::Success) throw CurvatureError("sigma_metric: Hessian not positive definite");
  return llt.solve(B).trace() - static_cast<double>(hessian.rows());
}

template <Objective O>
double sigma_metric(const O& obj, const Vector& x, const Matrix& B) {
  return sigma_metric(dense_hessian(obj, x), B);
}

struct BetaResult {
  Vector betas;  // β(e_i) for each subset entry, in subset order
  double beta_tau = 0.0;
};

/// β(e_i) = max_k E_kk / E_ii; β_τ = min over the subset.
inline BetaResult beta_subset(const Matrix& E, const std::vector<Index>& subset) {
  if (subset.empty()) throw InvalidArgument("beta_subset: empty subset");
  const double top = E.diagonal().maxCoeff();
  BetaResult out;
  out.betas.resize(static_cast<Index>(subset.size()));
  out.beta_tau = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < subset.size(); ++k) {
    detail::require_index(subset[k], E.rows(), "beta_subset");
    const double e = E(subset[k], subset[k]);
    if (!(e > 0.0)) throw InvalidArgument("beta_subset: zero diagonal entry at index " + std::to_string(subset[k]));
    out.betas(static_cast<Index>(k)) = top / e;
    out.beta_tau = std::min(out.beta_tau, top / e);
  }
  return out;
}

/// β_τ that tolerates a vanished diagonal along some subset vectors: such a direction
/// carries no approximation error and gets β = +∞. All-zero gives +∞ (factor 1).
inline double beta_tau_or_inf(const Matrix& E, const std::vector<Index>& subset) {
  const double top = E.diagonal().maxCoeff();
  double best = std::numeric_limits<double>::infinity();
  if (!(top > 0.0)) return best;
  for (Index i : subset) {
    const double e = E(i, i);
    if (e > 0.0) best = std::min(best, top / e);
  }
  return best;
}

/// Right-hand side minus left-hand side of the per-step trace-metric contraction
///   σ(∇²f(x₊), B₊) ≤ (1 − μ/(β_τ d L)) (1+φC_M)² (σ(∇²f(x), B) + 2dφC_M/(1+φC_M)),
/// with β_τ taken on (1+φC_M)B − ∇²f(x₊) over the subset. Nonnegative under the hypotheses.
template <Objective O>
double prop3_residual(const O& obj, const Vector& x, const Vector& x_next, const Matrix& B_before,
                      const Matrix& B_after, const std::vector<Index>& tau_subset) {
  const ObjectiveInfo& info = obj.info();
  const double dd = static_cast<double>(info.dim);
  const Matrix Hx = dense_hessian(obj, x);
  const Matrix Hn = dense_hessian(obj, x_next);

  const Eigen::SelfAdjointEigenSolver<Matrix> eig(B_before - Hx, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-9 * std::max(1.0, Hx.norm())) {
    throw HypothesisError("prop3_residual: B_before does not dominate the Hessian");
  }

  const double phi = std::sqrt(std::max(0.0, (x_next - x).dot(Hx * (x_next - x))));
  const double scale = 1.0 + phi * info.self_concordant_CM;
  const double beta = beta_tau_or_inf(scale * B_before - Hn, tau_subset);
  const double contraction = 1.0 - info.mu / (beta * dd * info.lipschitz_L);
  const double rhs = contraction * scale * scale *
                     (sigma_metric(Hx, B_before) + 2.0 * dd * phi * info.self_concordant_CM / scale);
  return rhs - sigma_metric(Hn, B_after);
}

struct RateParams {
  double mu = 1.0;
  double L = 1.0;
  Index d = 1;
  double C_beta = 1.0;
  long t0 = 0;
  double C_M = 0.0;
  double q = 0.5;
  double delta0 = 0.0;

  void validate() const {
    if (!(mu > 0.0 && L >= mu && d > 0)) throw InvalidArgument("RateParams: need 0 < mu <= L, d > 0");
    if (!(C_beta >= 1.0)) throw InvalidArgument("RateParams: C_beta must be >= 1");
    if (t0 < 0) throw InvalidArgument("RateParams: t0 must be >= 0");
  }
};

/// Bounds normalized by λ_f(x₀). prop2_bound is indexed by the absolute iteration t;
/// thm2_bound and appF_bound bound λ_f(x_{t+t0+1}).
struct TheoryCurves {
  double prop2_bound = 1.0;
  double thm2_bound = 1.0;
  double appF_bound = 1.0;
  double region_eps_prop2 = 0.0;
  double region_eps_thm1 = 0.0;
};

inline TheoryCurves theory_curves(const RateParams& p, long t) {
  p.validate();
  const double lin = 1.0 - p.mu / (2.0 * p.L);
  const double dd = static_cast<double>(p.d);
  const double tt = static_cast<double>(t);
  const double t0 = static_cast<double>(p.t0);
  TheoryCurves c;
  c.prop2_bound = std::pow(lin, tt);
  c.thm2_bound = std::pow(1.0 - p.mu / (p.C_beta * dd * p.L), tt * (tt + 1.0) / 2.0) * std::pow(lin, t0);
  const double rate = std::pow(p.q, t0 + 1.0) * p.mu / (p.C_beta * dd * p.L);
  c.appF_bound = std::min(std::exp(-rate * tt) * std::pow(lin, t0), std::pow(lin, tt + t0 + 1.0));
  c.region_eps_prop2 = p.C_M == 0.0 ? std::numeric_limits<double>::infinity()
                                    : p.mu * std::log(1.5) / (4.0 * p.L * p.C_M);
  c.region_eps_thm1 = p.mu * std::log(2.0) / (4.0 * (2.0 * dd + 1.0) * p.L);
  return c;
}

/// Smallest t0 with (2dL/μ) Π_{u=1}^{t0} (1 − μ/(β_u d L)) ≤ 1, where betas[u−1] = β_{u,τ}.
inline std::optional<long> detect_t0(const std::vector<double>& betas, double mu, double L, Index d) {
  const double dd = static_cast<double>(d);
  double prod = 2.0 * dd * L / mu;
  if (prod <= 1.0) return 0;
  for (std::size_t u = 0; u < betas.size(); ++u) {
    prod *= 1.0 - mu / (betas[u] * dd * L);
    if (prod <= 1.0) return static_cast<long>(u + 1);
  }
  return std::nullopt;
}

/// Π_{u=t0+1}^{t+t0} (1 − μ/(β_u d L))^{t+t0+1−u} (1 − μ/2L)^{t0}, betas[u−1] = β_{u,τ}.
inline double thm1_bound(const std::vector<double>& betas, double mu, double L, Index d, long t0, long t) {
  const double dd = static_cast<double>(d);
  double bound = std::pow(1.0 - mu / (2.0 * L), static_cast<double>(t0));
  for (long u = t0 + 1; u <= t + t0; ++u) {
    if (static_cast<std::size_t>(u) > betas.size()) throw InvalidArgument("thm1_bound: not enough logged betas");
    const double f = 1.0 - mu / (betas[static_cast<std::size_t>(u - 1)] * dd * L);
    bound *= std::pow(f, static_cast<double>(t + t0 + 1 - u));
  }
  return bound;
}

}  // namespace lgbfgs
