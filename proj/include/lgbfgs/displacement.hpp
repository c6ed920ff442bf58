#pragma once

// Case-C3 displacement aggregation. A new pair (e_i, r_new) arrives whose basis
// index i is already stored at position j < τ̂−1. Pair j is dropped and the
// downstream gradient variations are rewritten as
//
//   R̂_{j+1:τ̂} = (H_{0:j−1})⁻¹ S_{j+1:τ̂} [A 0] + r_j [b 0] + R_{j+1:τ̂},
//
// with A ∈ R^{(τ̂−j)×(τ̂−j−1)}, b ∈ R^{τ̂−j−1}, so that the inverse Hessian approximation
// of the shortened store equals the one built from the full augmented history.
//
// Two coefficient solvers share that contract:
//
//  closed_form  Write the full-history and aggregated inverses in compact form over
//               the prefix operator G = H_{0:j−1}. Both equal G + S K Sᵀ − S Zᵀ G − G Z Sᵀ
//               for S = S_{j+1:τ̂}, and two such forms coincide iff G Z_a = G Z_f + S C and
//               K_a = K_f + C + Cᵀ for some C. Keeping the upper triangle of SᵀR̂ equal to
//               that of SᵀR fixes b in closed form and reduces the remaining condition to
//               Λᵀ M⁻¹ Λ = Ψ with M = Sᵀ G⁻¹ S and Λ strictly lower triangular, solved one
//               column at a time from the right (a linear system plus one scalar
//               quadratic per column). Cost O(τ² d + τ⁴); G is applied by the two-loop
//               recursion on the prefix and G⁻¹S by its compact representation.
//
//  oracle_fit   Levenberg–Marquardt on (A, b) with the dense inverse-Hessian mismatch as
//               residual. Needs dense d×d work; intended for small problems and as a
//               cross-check of the closed form.
//
//  coordinate   Dense constructive solve. With s = e_k the inverse update keeps H outside
//               row/column k and rebuilds that row/column from H_{¬k,¬k} and r. The last
//               update (e_i, r_new) therefore only reads H_{¬i,¬i}, and it suffices to pick
//               each r̂_k so that the aggregated chain reproduces the full chain off row and
//               column i. Setting ŵ_i = 0 in ŵ = r̂_{¬k}/r̂_k gives a linear solve per pair and
//               a curvature no smaller than the original one, so a solution always exists.
//               When τ̂−j is close to d the closed-form branch (which keeps triu(SᵀR̂)) can
//               have no real root while other solutions exist; closed_form then falls back
//               to this path.

#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include <cmath>
#include <string>
#include <vector>

#include "lgbfgs/kernels.hpp"
#include "lgbfgs/log.hpp"
#include "lgbfgs/pair_store.hpp"

namespace lgbfgs {

enum class AggregationMethod { closed_form, oracle_fit, coordinate };

struct AggregationCoeffs {
  Matrix A;  // (τ̂−j) × (τ̂−j−1)
  Vector b;  // τ̂−j−1
};

/// Everything the aggregation formula reads, gathered once per C3 event.
struct AggregationWorkspace {
  PairStore h_prefix;               // pairs 0..j−1, defines H_{0:j−1}
  std::vector<Index> tail_indices;  // basis indices of s_{j+1..τ̂}; the last equals pair j's
  Matrix R_block;                   // r_{j+1..τ̂}, new pair last (d × (τ̂−j))
  Matrix BS_block;                  // (H_{0:j−1})⁻¹ S_{j+1:τ̂}                   (d × (τ̂−j))
  Vector r_j;

  AggregationWorkspace(const PairStore& store, Index j, const CurvaturePair& new_pair)
      : h_prefix(store.prefix(j)) {
    const Index m = store.size();
    const Index d = store.dim();
    const Index p = m - j;
    r_j = store[j].r;
    R_block.resize(d, p);
    for (Index k = j + 1; k < m; ++k) {
      tail_indices.push_back(store[k].basis_index);
      R_block.col(k - j - 1) = store[k].r;
    }
    tail_indices.push_back(new_pair.basis_index);
    R_block.col(p - 1) = new_pair.r;
    const CompactB Bprefix(h_prefix);
    BS_block.resize(d, p);
    for (Index k = 0; k < p; ++k) BS_block.col(k) = Bprefix.column(tail_indices[static_cast<std::size_t>(k)]);
  }

  Index tail_size() const { return static_cast<Index>(tail_indices.size()); }
};

namespace detail {

inline void check_c3(const PairStore& store, Index j, const CurvaturePair& new_pair) {
  check_pair(store, new_pair, "aggregation");
  if (j < 0 || j >= store.size() - 1) {
    throw InvalidArgument("aggregation: C3 needs 0 <= j < size-1, got j=" + std::to_string(j));
  }
  if (store[j].basis_index != new_pair.basis_index) {
    throw InternalInconsistency("aggregation: new pair is not parallel to stored pair j");
  }
}

inline PairStore realize(const PairStore& store, Index j, const CurvaturePair& new_pair,
                         const AggregationWorkspace& ws, const AggregationCoeffs& c) {
  const Index p = ws.tail_size();
  PairStore out = store.prefix(j);
  auto& pairs = out.mutable_pairs();
  for (Index k = 0; k + 1 < p; ++k) {
    Vector r = ws.BS_block * c.A.col(k) + c.b(k) * ws.r_j + ws.R_block.col(k);
    pairs.push_back({ws.tail_indices[static_cast<std::size_t>(k)], std::move(r)});
  }
  pairs.push_back(new_pair);
  return out;
}

inline AggregationCoeffs closed_form_coeffs(const PairStore& store, Index j, const AggregationWorkspace& ws) {
  const Index p = ws.tail_size();
  const Index d = store.dim();

  // Full-history tail: pairs j..τ̂ with s_j repeated as the last variation.
  Matrix Yf(d, p + 1);
  Yf.col(0) = ws.r_j;
  Yf.rightCols(p) = ws.R_block;
  std::vector<Index> idx_f{store[j].basis_index};
  idx_f.insert(idx_f.end(), ws.tail_indices.begin(), ws.tail_indices.end());

  Matrix GY(d, p + 1);
  for (Index k = 0; k <= p; ++k) GY.col(k) = apply_H(ws.h_prefix, Yf.col(k));
  Matrix YGY = Yf.transpose() * GY;
  YGY = 0.5 * (YGY + YGY.transpose()).eval();

  Matrix SfY(p + 1, p + 1);
  for (Index a = 0; a <= p; ++a) {
    for (Index b = 0; b <= p; ++b) SfY(a, b) = Yf(idx_f[static_cast<std::size_t>(a)], b);
  }
  const Matrix Rf = SfY.triangularView<Eigen::Upper>();
  const Matrix Df = Rf.diagonal().asDiagonal();

  // Eᵀ maps the p tail columns onto the p+1 full-history columns (s_j = s_τ̂).
  Matrix Et = Matrix::Zero(p + 1, p);
  Et(0, p - 1) = 1.0;
  Et.bottomRows(p).setIdentity();

  const auto RfU = Rf.triangularView<Eigen::Upper>();
  const Matrix Tf = RfU.solve(Et);
  const Matrix RfInv = RfU.solve(Matrix::Identity(p + 1, p + 1));
  const Matrix Xf = RfInv.transpose() * (Df + YGY) * RfInv;
  const Matrix Kf = Et.transpose() * Xf * Et;

  const Matrix Ru = Rf.bottomRightCorner(p, p);
  const auto RuU = Ru.triangularView<Eigen::Upper>();
  const Matrix RuInv = RuU.solve(Matrix::Identity(p, p));
  const Matrix D = Ru.diagonal().asDiagonal();

  Matrix M(p, p);
  for (Index a = 0; a < p; ++a) {
    for (Index b = 0; b < p; ++b) M(a, b) = ws.BS_block(ws.tail_indices[static_cast<std::size_t>(a)], b);
  }
  M = 0.5 * (M + M.transpose()).eval();
  const Eigen::LLT<Matrix> Mllt(M);
  if (Mllt.info() != Eigen::Success) throw AggregationError("aggregation: prefix operator not positive definite");
  const Matrix Minv = Mllt.solve(Matrix::Identity(p, p));

  const Matrix StZf = SfY.bottomRows(p) * Tf;
  const Matrix N = StZf - Matrix::Identity(p, p);
  const Matrix Q0 = RuInv.transpose() * D * RuInv + Tf.transpose() * YGY * Tf - Kf;
  const Matrix Phi = N.transpose() * Minv * N - Q0;
  Matrix Psi = Ru.transpose() * Phi * Ru;
  Psi = 0.5 * (Psi + Psi.transpose()).eval();

  // Λᵀ M⁻¹ Λ = Ψ, Λ strictly lower triangular; its last column is zero.
  Matrix Lambda = Matrix::Zero(p, p);
  for (Index k = p - 2; k >= 0; --k) {
    const Index mk = p - 1 - k;
    const Matrix Ml = Minv.block(k + 1, k + 1, mk, mk);
    const Index nc = mk - 1;
    Vector x0 = Vector::Zero(mk);
    Vector nvec = Vector::Zero(mk);
    if (nc == 0) {
      nvec(0) = 1.0;
    } else {
      Matrix Ceq(nc, mk);
      Vector rhs(nc);
      for (Index l = k + 1; l <= p - 2; ++l) {
        Ceq.row(l - k - 1) = (Minv.middleRows(k + 1, mk) * Lambda.col(l)).transpose();
        rhs(l - k - 1) = Psi(k, l);
      }
      Eigen::JacobiSVD<Matrix> svd(Ceq, Eigen::ComputeFullU | Eigen::ComputeFullV);
      x0 = svd.solve(rhs);
      nvec = svd.matrixV().col(mk - 1);
    }
    const double qa = nvec.dot(Ml * nvec);
    const double qb = 2.0 * x0.dot(Ml * nvec);
    const double qc = x0.dot(Ml * x0) - Psi(k, k);
    double disc = qb * qb - 4.0 * qa * qc;
    const double scale = qb * qb + std::abs(4.0 * qa * qc);
    if (disc < 0.0) {
      if (disc < -1e-10 * scale) {
        throw AggregationError("aggregation: coefficient system has no real solution (column " +
                               std::to_string(k) + ")");
      }
      disc = 0.0;
    }
    // Root of smaller magnitude, computed without cancellation.
    const double qq = -0.5 * (qb + (qb >= 0.0 ? 1.0 : -1.0) * std::sqrt(disc));
    double theta = 0.0;
    if (qq != 0.0) {
      const double r1 = qq / qa;
      const double r2 = qc / qq;
      theta = std::abs(r2) <= std::abs(r1) ? r2 : r1;
    }
    Lambda.block(k + 1, k, mk, 1) = x0 + theta * nvec;
  }

  const Matrix W = Lambda * RuInv;
  const Matrix C = Minv * (W - N);
  const Matrix Abar = C * Ru;
  const Vector bbar = (Tf.row(0) * Ru).transpose();

  AggregationCoeffs out;
  out.A = Abar.leftCols(p - 1);
  out.b = bbar.head(p - 1);
  return out;
}

// Residual vector: dense H(aggregated) − H(augmented history), scaled by ‖H(augmented)‖_F.
struct OracleFitFunctor {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Vector;
  using ValueType = Vector;
  using JacobianType = Matrix;

  const PairStore* store;
  Index j;
  const CurvaturePair* new_pair;
  const AggregationWorkspace* ws;
  Matrix target;
  double target_norm;

  int inputs() const {
    const Index p = ws->tail_size();
    return static_cast<int>((p + 1) * (p - 1));
  }
  int values() const { return static_cast<int>(target.size()); }

  AggregationCoeffs unpack(const Vector& z) const {
    const Index p = ws->tail_size();
    AggregationCoeffs c;
    c.A = Eigen::Map<const Matrix>(z.data(), p, p - 1);
    c.b = z.tail(p - 1);
    return c;
  }

  int operator()(const Vector& z, Vector& fvec) const {
    const PairStore agg = realize(*store, j, *new_pair, *ws, unpack(z));
    for (const auto& pr : agg.pairs()) {
      if (!(pr.curvature() > 0.0)) {
        fvec = Vector::Constant(values(), 1e3);
        return 0;
      }
    }
    const Matrix diff = (dense_H_from_pairs(agg) - target) / target_norm;
    fvec = Eigen::Map<const Vector>(diff.data(), diff.size());
    return 0;
  }
};

inline Matrix augmented_history_H(const PairStore& store, const CurvaturePair& new_pair) {
  return dense_inv_bfgs_update(dense_H_from_pairs(store), unit(store.dim(), new_pair.basis_index), new_pair.r);
}

inline AggregationCoeffs oracle_fit_coeffs(const PairStore& store, Index j, const CurvaturePair& new_pair,
                                           const AggregationWorkspace& ws) {
  OracleFitFunctor f{&store, j, &new_pair, &ws, augmented_history_H(store, new_pair), 0.0};
  f.target_norm = f.target.norm();
  Eigen::NumericalDiff<OracleFitFunctor> numdiff(f);
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<OracleFitFunctor>> lm(numdiff);
  lm.parameters.xtol = 1e-15;
  lm.parameters.ftol = 1e-15;
  lm.parameters.maxfev = 4000 * (f.inputs() + 1);
  Vector z = Vector::Zero(f.inputs());
  lm.minimize(z);
  Vector fvec(f.values());
  f(z, fvec);
  const double residual = fvec.norm();
  if (!(residual <= 1e-8)) {
    throw AggregationError("aggregation: oracle fit stalled at residual " + std::to_string(residual));
  }
  return f.unpack(z);
}


/// Rewritten variations r̂_{j+1..τ̂−1} (d × (τ̂−j−1)) from the row/column argument above.
inline Matrix coordinate_variations(const PairStore& store, Index j, const CurvaturePair& new_pair) {
  const Index d = store.dim();
  const Index m = store.size();
  const Index i = new_pair.basis_index;
  Matrix Ha = dense_H_from_pairs(store.prefix(j));
  Matrix Hf = dense_inv_bfgs_update(Ha, unit(d, i), store[j].r);
  Matrix out(d, m - j - 1);
  for (Index u = j + 1; u < m; ++u) {
    const Index k = store[u].basis_index;
    const Vector& r = store[u].r;
    Vector w = r / r(k);
    w(k) = 0.0;
    std::vector<Index> rest;
    rest.reserve(static_cast<std::size_t>(d));
    for (Index l = 0; l < d; ++l)
      if (l != i && l != k) rest.push_back(l);
    const Index nr = static_cast<Index>(rest.size());
    Vector w_hat = Vector::Zero(d);
    if (nr > 0) {
      const Vector Hfw = Hf * w;
      Matrix block(nr, nr);
      Vector target(nr);
      for (Index a = 0; a < nr; ++a) {
        target(a) = Hfw(rest[static_cast<std::size_t>(a)]);
        for (Index b = 0; b < nr; ++b) block(a, b) = Ha(rest[static_cast<std::size_t>(a)], rest[static_cast<std::size_t>(b)]);
      }
      const Eigen::LLT<Matrix> llt(block);
      if (llt.info() != Eigen::Success) throw AggregationError("aggregation: principal block not positive definite");
      const Vector sol = llt.solve(target);
      for (Index a = 0; a < nr; ++a) w_hat(rest[static_cast<std::size_t>(a)]) = sol(a);
    }
    const double c_hat = 1.0 / r(k) + w.dot(Hf * w) - w_hat.dot(Ha * w_hat);
    if (!(c_hat > 0.0)) throw AggregationError("aggregation: coordinate solve lost positive curvature");
    Vector r_hat = w_hat / c_hat;
    r_hat(k) = 1.0 / c_hat;
    Ha = dense_inv_bfgs_update(Ha, unit(d, k), r_hat);
    Hf = dense_inv_bfgs_update(Hf, unit(d, k), r);
    out.col(u - j - 1) = r_hat;
  }
  return out;
}

/// (A, b) reproducing given variations through the aggregation ansatz, by least squares on
/// [(H_{0:j−1})⁻¹S, r_j]. Throws when the variations are not representable.
inline AggregationCoeffs fit_coeffs(const AggregationWorkspace& ws, const Matrix& R_hat) {
  const Index p = ws.tail_size();
  Matrix basis(ws.BS_block.rows(), p + 1);
  basis.leftCols(p) = ws.BS_block;
  basis.col(p) = ws.r_j;
  const Matrix rhs = R_hat - ws.R_block.leftCols(p - 1);
  const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(basis);
  const Matrix coef = cod.solve(rhs);
  const double resid = (basis * coef - rhs).norm();
  if (!(resid <= 1e-8 * std::max(1.0, R_hat.norm()))) {
    throw AggregationError("aggregation: variations outside the ansatz span (residual " + std::to_string(resid) + ")");
  }
  AggregationCoeffs c;
  c.A = coef.topRows(p);
  c.b = coef.row(p).transpose();
  return c;
}

inline PairStore realize_variations(const PairStore& store, Index j, const CurvaturePair& new_pair,
                                    const Matrix& R_hat) {
  PairStore out = store.prefix(j);
  auto& pairs = out.mutable_pairs();
  for (Index u = j + 1; u < store.size(); ++u) pairs.push_back({store[u].basis_index, R_hat.col(u - j - 1)});
  pairs.push_back(new_pair);
  return out;
}

}  // namespace detail

/// Coefficients (A, b) for a C3 event at stored position j. closed_form falls back to the
/// coordinate solve when its quadratic has no real root.
inline AggregationCoeffs solve_aggregation_coeffs(const PairStore& store, Index j, const CurvaturePair& new_pair,
                                                  AggregationMethod method = AggregationMethod::closed_form) {
  detail::check_c3(store, j, new_pair);
  const AggregationWorkspace ws(store, j, new_pair);
  switch (method) {
    case AggregationMethod::oracle_fit: return detail::oracle_fit_coeffs(store, j, new_pair, ws);
    case AggregationMethod::coordinate:
      return detail::fit_coeffs(ws, detail::coordinate_variations(store, j, new_pair));
    case AggregationMethod::closed_form: break;
  }
  try {
    return detail::closed_form_coeffs(store, j, ws);
  } catch (const AggregationError& e) {
    log::debug(std::string("aggregation: closed form unavailable, using coordinate solve: ") + e.what());
    return detail::fit_coeffs(ws, detail::coordinate_variations(store, j, new_pair));
  }
}

/// Store after dropping pair j and rewriting r_{j+1..τ̂−1}; the new pair goes last and the
/// size is unchanged.
inline PairStore aggregate_c3(const PairStore& store, Index j, const CurvaturePair& new_pair,
                              AggregationMethod method = AggregationMethod::closed_form) {
  detail::check_c3(store, j, new_pair);
  const AggregationWorkspace ws(store, j, new_pair);
  PairStore out = [&] {
    switch (method) {
      case AggregationMethod::oracle_fit:
        return detail::realize(store, j, new_pair, ws, detail::oracle_fit_coeffs(store, j, new_pair, ws));
      case AggregationMethod::coordinate:
        return detail::realize_variations(store, j, new_pair, detail::coordinate_variations(store, j, new_pair));
      case AggregationMethod::closed_form: break;
    }
    try {
      return detail::realize(store, j, new_pair, ws, detail::closed_form_coeffs(store, j, ws));
    } catch (const AggregationError& e) {
      log::debug(std::string("aggregation: closed form unavailable, using coordinate solve: ") + e.what());
      return detail::realize_variations(store, j, new_pair, detail::coordinate_variations(store, j, new_pair));
    }
  }();
  for (Index k = j; k < out.size(); ++k) {
    if (!(out[k].curvature() > 0.0)) {
      throw AggregationError("aggregation: modified pair " + std::to_string(k) + " lost positive curvature");
    }
  }
  return out;
}

}  // namespace lgbfgs
