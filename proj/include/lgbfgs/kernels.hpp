#pragma once

// BFGS kernels: dense direct and inverse updates, the dense inverse built from a
// pair store (the reference every limited-memory routine is checked against),
// the two-loop recursion and compact-representation products B·e_i.

#include <deque>
#include <string>
#include <vector>

#include "lgbfgs/pair_store.hpp"
#include "lgbfgs/types.hpp"

namespace lgbfgs {

/// B₊ = B + rrᵀ/(rᵀs) − Bssᵀ B/(sᵀBs).
inline Matrix dense_bfgs_update(const Matrix& B, const Vector& s, const Vector& r) {
  detail::require_dim(s.size(), B.rows(), "dense_bfgs_update: s");
  detail::require_dim(r.size(), B.rows(), "dense_bfgs_update: r");
  const double sr = s.dot(r);
  if (!(sr > 0.0)) throw CurvatureError("dense_bfgs_update: sᵀr = " + std::to_string(sr) + " <= 0");
  const Vector Bs = B * s;
  const double sBs = s.dot(Bs);
  if (!(sBs > 0.0)) throw CurvatureError("dense_bfgs_update: sᵀBs <= 0, B not positive definite");
  Matrix out = B + r * r.transpose() / sr - Bs * Bs.transpose() / sBs;
  return 0.5 * (out + out.transpose());
}

/// H₊ = (I − rsᵀ/(sᵀr))ᵀ H (I − rsᵀ/(sᵀr)) + ssᵀ/(sᵀr), expanded to rank-two form.
inline Matrix dense_inv_bfgs_update(const Matrix& H, const Vector& s, const Vector& r) {
  detail::require_dim(s.size(), H.rows(), "dense_inv_bfgs_update: s");
  detail::require_dim(r.size(), H.rows(), "dense_inv_bfgs_update: r");
  const double sr = s.dot(r);
  if (!(sr > 0.0)) throw CurvatureError("dense_inv_bfgs_update: sᵀr = " + std::to_string(sr) + " <= 0");
  const double rho = 1.0 / sr;
  const Vector Hr = H * r;
  const double rHr = r.dot(Hr);
  if (!(rHr > 0.0)) throw CurvatureError("dense_inv_bfgs_update: rᵀHr <= 0, H not positive definite");
  Matrix out = H - rho * (s * Hr.transpose() + Hr * s.transpose()) +
               (rho * rho * rHr + rho) * s * s.transpose();
  return 0.5 * (out + out.transpose());
}

/// Sequential inverse updates over the store, starting from h0_scale·I.
inline Matrix dense_H_from_pairs(const PairStore& store) {
  const Index d = store.dim();
  Matrix H = store.h0_scale() * Matrix::Identity(d, d);
  for (const auto& p : store.pairs()) H = dense_inv_bfgs_update(H, detail::unit(d, p.basis_index), p.r);
  return H;
}

/// Sequential direct updates from (1/h0_scale)·I; the inverse of dense_H_from_pairs.
inline Matrix dense_B_from_pairs(const PairStore& store) {
  const Index d = store.dim();
  Matrix B = Matrix::Identity(d, d) / store.h0_scale();
  for (const auto& p : store.pairs()) B = dense_bfgs_update(B, detail::unit(d, p.basis_index), p.r);
  return B;
}

/// H_t·v by the two-loop recursion, O(τ̂ d), with s_u = e_{i_u}.
inline Vector apply_H(const PairStore& store, const Vector& v) {
  detail::require_dim(v.size(), store.dim(), "apply_H");
  const auto& pairs = store.pairs();
  const std::size_t m = pairs.size();
  std::vector<double> alpha(m), rho(m);
  Vector q = v;
  for (std::size_t k = m; k-- > 0;) {
    const double sr = pairs[k].curvature();
    if (!(sr > 0.0)) throw CurvatureError("two-loop: stored pair with sᵀr <= 0");
    rho[k] = 1.0 / sr;
    alpha[k] = rho[k] * q(pairs[k].basis_index);
    q.noalias() -= alpha[k] * pairs[k].r;
  }
  q *= store.h0_scale();
  for (std::size_t k = 0; k < m; ++k) {
    const double beta = rho[k] * pairs[k].r.dot(q);
    q(pairs[k].basis_index) += alpha[k] - beta;
  }
  return q;
}

/// −H_t g.
inline Vector two_loop_direction(const PairStore& store, const Vector& g) {
  detail::require_finite(g, "two_loop_direction");
  return -apply_H(store, g);
}

/// H·v for general (s, y) pairs, oldest first; used by the classic L-BFGS baseline.
inline Vector apply_H_general(double h0_scale, const std::deque<Vector>& S, const std::deque<Vector>& Y,
                              const Vector& v) {
  const std::size_t m = S.size();
  std::vector<double> alpha(m), rho(m);
  Vector q = v;
  for (std::size_t k = m; k-- > 0;) {
    rho[k] = 1.0 / S[k].dot(Y[k]);
    alpha[k] = rho[k] * S[k].dot(q);
    q.noalias() -= alpha[k] * Y[k];
  }
  q *= h0_scale;
  for (std::size_t k = 0; k < m; ++k) {
    const double beta = rho[k] * Y[k].dot(q);
    q.noalias() += (alpha[k] - beta) * S[k];
  }
  return q;
}

/// Compact representation B = B₀ − [B₀S R] M⁻¹ [B₀S R]ᵀ with B₀ = γI, γ = 1/h0_scale,
///   M = [[SᵀB₀S, L], [Lᵀ, −D]],  L = strictly lower part of SᵀR,  D = diag(SᵀR).
/// Because the s_u are distinct coordinate vectors, SᵀB₀S = γI and M is inverted by
/// block elimination through the Cholesky factor of K = D + LᵀL/γ. The factorization is
/// built once per object; columns and diagonal entries are then O(τ̂ d) and O(τ̂²).
class CompactB {
 public:
  explicit CompactB(const PairStore& store) : store_(&store), gamma_(1.0 / store.h0_scale()) {
    const Index m = store.size();
    if (m == 0) return;
    const auto& pairs = store.pairs();
    Matrix StR(m, m);  // (SᵀR)_{ik} = r_k[idx_i]
    for (Index i = 0; i < m; ++i) {
      for (Index k = 0; k < m; ++k) StR(i, k) = pairs[k].r(pairs[i].basis_index);
    }
    L_ = StR.triangularView<Eigen::StrictlyLower>();
    Matrix K = L_.transpose() * L_ / gamma_;
    K.diagonal() += StR.diagonal();
    llt_.compute(K);
    if (llt_.info() != Eigen::Success) {
      throw CurvatureError("compact representation: singular middle matrix");
    }
  }

  /// B_t e_i.
  Vector column(Index i) const {
    const Index d = store_->dim();
    detail::require_index(i, d, "compact_B_column");
    Vector col = Vector::Zero(d);
    col(i) = gamma_;
    const Index m = store_->size();
    if (m == 0) return col;
    const auto [u, v] = solve_middle(i);
    const auto& pairs = store_->pairs();
    for (Index k = 0; k < m; ++k) {
      col(pairs[k].basis_index) -= gamma_ * u(k);
      col.noalias() -= v(k) * pairs[k].r;
    }
    return col;
  }

  /// e_iᵀ B_t e_i.
  double diagonal(Index i) const {
    detail::require_index(i, store_->dim(), "compact_B_diagonal");
    const Index m = store_->size();
    if (m == 0) return gamma_;
    const auto [a, b] = rhs(i);
    const auto [u, v] = solve_middle(a, b);
    return gamma_ - a.dot(u) - b.dot(v);
  }

 private:
  // Right-hand side [B₀S R]ᵀ e_i = [γ Sᵀe_i; Rᵀe_i].
  std::pair<Vector, Vector> rhs(Index i) const {
    const auto& pairs = store_->pairs();
    const Index m = store_->size();
    Vector a = Vector::Zero(m), b(m);
    for (Index k = 0; k < m; ++k) {
      if (pairs[k].basis_index == i) a(k) = gamma_;
      b(k) = pairs[k].r(i);
    }
    return {a, b};
  }

  std::pair<Vector, Vector> solve_middle(Index i) const {
    const auto [a, b] = rhs(i);
    return solve_middle(a, b);
  }

  // M [u; v] = [a; b]:  γu + Lv = a,  Lᵀu − Dv = b.
  std::pair<Vector, Vector> solve_middle(const Vector& a, const Vector& b) const {
    Vector v = llt_.solve(L_.transpose() * a / gamma_ - b);
    Vector u = (a - L_ * v) / gamma_;
    return {u, v};
  }

  const PairStore* store_;
  double gamma_;
  Matrix L_;
  Eigen::LLT<Matrix> llt_;
};

inline Vector compact_B_column(const PairStore& store, Index i) { return CompactB(store).column(i); }

inline double compact_B_diagonal(const PairStore& store, Index i) { return CompactB(store).diagonal(i); }

}  // namespace lgbfgs
