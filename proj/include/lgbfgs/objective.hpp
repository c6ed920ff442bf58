#pragma once

// Objective access contract plus the two concrete objectives: l2-regularized
// logistic regression and strongly convex quadratics.
//
// An objective exposes value/gradient in one pass, Hessian-vector products,
// single Hessian columns and Hessian diagonal entries; the Hessian is never
// materialized. Objects are immutable after construction.

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <span>
#include <utility>

#include "lgbfgs/dataset.hpp"
#include "lgbfgs/types.hpp"

namespace lgbfgs {

struct ObjectiveInfo {
  Index dim = 0;
  double mu = 0.0;           // strong convexity modulus
  double lipschitz_L = 0.0;  // gradient Lipschitz constant
  double hess_lip_CL = 0.0;  // Hessian Lipschitz constant
  double self_concordant_CM = 0.0;

  static ObjectiveInfo make(Index dim, double mu, double L, double CL) {
    if (dim <= 0) throw InvalidArgument("objective dimension must be positive");
    if (!(mu > 0.0)) throw InvalidArgument("strong convexity modulus must be positive");
    if (!(L >= mu)) throw InvalidArgument("Lipschitz constant must be >= mu");
    if (!(CL >= 0.0)) throw InvalidArgument("Hessian Lipschitz constant must be >= 0");
    return {dim, mu, L, CL, CL / std::pow(mu, 1.5)};
  }
};

struct ValueGrad {
  double value = 0.0;
  Vector grad;
};

template <class O>
concept Objective = requires(const O& o, const Vector& x, const Vector& v, Index i,
                             std::span<const Index> idx) {
  { o.info() } -> std::convertible_to<const ObjectiveInfo&>;
  { o.value_grad(x) } -> std::same_as<ValueGrad>;
  { o.hess_vec(x, v) } -> std::same_as<Vector>;
  { o.hess_column(x, i) } -> std::same_as<Vector>;
  { o.hess_diagonal(x, idx) } -> std::same_as<Vector>;
};

/// f(x) = ½ xᵀAx − bᵀx with A symmetric positive definite.
class QuadraticObjective {
 public:
  /// mu and L default to the extreme eigenvalues of A.
  QuadraticObjective(Matrix A, Vector b) : A_(std::move(A)), b_(std::move(b)) {
    detail::require_dim(A_.cols(), A_.rows(), "QuadraticObjective: A must be square");
    detail::require_dim(b_.size(), A_.rows(), "QuadraticObjective: offset");
    if (!A_.isApprox(A_.transpose(), 1e-12)) throw InvalidArgument("QuadraticObjective: A not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(A_, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0)) throw InvalidArgument("QuadraticObjective: A not positive definite");
    info_ = ObjectiveInfo::make(A_.rows(), lo, hi, 0.0);
  }

  /// Explicit constants; the spectrum of A must lie in [mu, L].
  QuadraticObjective(Matrix A, Vector b, double mu, double L) : QuadraticObjective(std::move(A), std::move(b)) {
    // eigensolver error is absolute, of order d·eps·‖A‖
    const double slack = 1e-12 * static_cast<double>(std::max<Index>(A_.rows(), 1)) * L;
    if (info_.mu < mu - slack || info_.lipschitz_L > L + slack) {
      throw InvalidArgument("QuadraticObjective: spectrum outside [mu, L]");
    }
    info_ = ObjectiveInfo::make(A_.rows(), mu, L, 0.0);
  }

  static QuadraticObjective diagonal(const Vector& spectrum) {
    return QuadraticObjective(spectrum.asDiagonal().toDenseMatrix(), Vector::Zero(spectrum.size()));
  }

  const ObjectiveInfo& info() const { return info_; }
  const Matrix& hessian() const { return A_; }
  const Vector& offset() const { return b_; }

  Vector minimizer() const { return A_.llt().solve(b_); }

  ValueGrad value_grad(const Vector& x) const {
    Vector Ax = A_ * x;
    return {0.5 * x.dot(Ax) - b_.dot(x), Ax - b_};
  }
  Vector hess_vec(const Vector&, const Vector& v) const { return A_ * v; }
  Vector hess_column(const Vector&, Index i) const { return A_.col(i); }
  Vector hess_diagonal(const Vector&, std::span<const Index> idx) const {
    Vector out(static_cast<Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) out(static_cast<Index>(k)) = A_(idx[k], idx[k]);
    return out;
  }

 private:
  Matrix A_;
  Vector b_;
  ObjectiveInfo info_;
};

/// f(x) = (1/N) Σ ln(1 + exp(−y_i z_iᵀx)) + (μ/2)‖x‖².
class LogisticObjective {
 public:
  /// Maximum of |d³/dt³ ln(1 + e^t)| over t, i.e. of |σ''|.
  static double sigmoid_curvature_bound() { return 1.0 / (6.0 * std::sqrt(3.0)); }

  /// `hess_lip_CL` < 0 selects the analytic bound max|σ''|·max_i‖z_i‖³.
  LogisticObjective(const Dataset& ds, double reg_mu, double hess_lip_CL = -1.0) {
    if (ds.n_samples() == 0) throw InvalidArgument("LogisticObjective: empty dataset");
    const Index n = ds.n_samples();
    const Index d = ds.n_features;
    std::vector<Eigen::Triplet<double>> trip;
    for (Index i = 0; i < n; ++i) {
      const auto& row = ds.rows[i];
      for (std::size_t k = 0; k < row.indices.size(); ++k) {
        trip.emplace_back(i, row.indices[k], row.values[k]);
      }
    }
    Z_.resize(n, d);
    Z_.setFromTriplets(trip.begin(), trip.end());
    Zc_ = Z_;
    y_.resize(n);
    for (Index i = 0; i < n; ++i) y_(i) = ds.labels[i];

    const double zmax = ds.max_row_norm();
    const double L = ds.normalized && zmax > 0.0 ? 0.25 + reg_mu : 0.25 * zmax * zmax + reg_mu;
    const double CL = hess_lip_CL >= 0.0 ? hess_lip_CL
                                          : sigmoid_curvature_bound() * (ds.normalized && zmax > 0.0 ? 1.0 : zmax * zmax * zmax);
    if (reg_mu == 0.0) {
      // Plain (not strongly convex) logistic loss: usable for evaluation, C_M undefined.
      info_ = {d, 0.0, L, CL, std::numeric_limits<double>::infinity()};
    } else {
      info_ = ObjectiveInfo::make(d, reg_mu, L, CL);
    }
  }

  const ObjectiveInfo& info() const { return info_; }
  Index n_samples() const { return Z_.rows(); }

  ValueGrad value_grad(const Vector& x) const {
    const Vector margin = y_.cwiseProduct(Z_ * x);
    double loss = 0.0;
    Vector w(margin.size());
    for (Index i = 0; i < margin.size(); ++i) {
      const double m = margin(i);
      // ln(1 + e^{-m}) and σ(−m), both evaluated without overflow.
      loss += m > 0.0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
      w(i) = -y_(i) * sigmoid(-m);
    }
    const double inv_n = 1.0 / static_cast<double>(n_samples());
    Vector g = inv_n * (Z_.transpose() * w) + info_.mu * x;
    return {loss * inv_n + 0.5 * info_.mu * x.squaredNorm(), std::move(g)};
  }

  Vector hess_vec(const Vector& x, const Vector& v) const {
    const Vector D = curvature_weights(x);
    const Vector Zv = Z_ * v;
    return (Z_.transpose() * D.cwiseProduct(Zv)) / static_cast<double>(n_samples()) + info_.mu * v;
  }

  /// Column i touches only the samples with a nonzero in feature i.
  Vector hess_column(const Vector& x, Index i) const {
    const Vector D = curvature_weights(x);
    Vector col = Vector::Zero(info_.dim);
    for (SparseCol::InnerIterator it(Zc_, i); it; ++it) {
      const double w = D(it.row()) * it.value();
      for (SparseRowMat::InnerIterator jt(Z_, it.row()); jt; ++jt) col(jt.col()) += w * jt.value();
    }
    col /= static_cast<double>(n_samples());
    col(i) += info_.mu;
    return col;
  }

  /// Diagonal entries for all requested indices from one pass over the data.
  Vector hess_diagonal(const Vector& x, std::span<const Index> idx) const {
    const Vector D = curvature_weights(x);
    Vector out(static_cast<Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      double s = 0.0;
      for (SparseCol::InnerIterator it(Zc_, idx[k]); it; ++it) s += D(it.row()) * it.value() * it.value();
      out(static_cast<Index>(k)) = s / static_cast<double>(n_samples()) + info_.mu;
    }
    return out;
  }

 private:
  using SparseRowMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;
  using SparseCol = Eigen::SparseMatrix<double, Eigen::ColMajor>;

  static double sigmoid(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
  }

  Vector curvature_weights(const Vector& x) const {
    const Vector z = Z_ * x;
    Vector D(z.size());
    for (Index i = 0; i < z.size(); ++i) {
      const double s = sigmoid(z(i));
      D(i) = s * (1.0 - s);
    }
    return D;
  }

  SparseRowMat Z_;
  SparseCol Zc_;
  Vector y_;
  ObjectiveInfo info_;
};

// Validated entry points. Member functions skip the checks; solvers call these.

template <Objective O>
ValueGrad eval_value_grad(const O& obj, const Vector& x) {
  detail::require_dim(x.size(), obj.info().dim, "eval_value_grad");
  detail::require_finite(x, "eval_value_grad");
  return obj.value_grad(x);
}

template <Objective O>
Vector hess_vec(const O& obj, const Vector& x, const Vector& v) {
  detail::require_dim(x.size(), obj.info().dim, "hess_vec: point");
  detail::require_dim(v.size(), obj.info().dim, "hess_vec: direction");
  return obj.hess_vec(x, v);
}

template <Objective O>
Vector hess_column(const O& obj, const Vector& x, Index i) {
  detail::require_dim(x.size(), obj.info().dim, "hess_column");
  detail::require_index(i, obj.info().dim, "hess_column");
  return obj.hess_column(x, i);
}

template <Objective O>
Vector hess_diagonal(const O& obj, const Vector& x, std::span<const Index> idx) {
  detail::require_dim(x.size(), obj.info().dim, "hess_diagonal");
  for (Index i : idx) detail::require_index(i, obj.info().dim, "hess_diagonal");
  return obj.hess_diagonal(x, idx);
}

/// √(vᵀ∇²f(x)v). Radicands in [−1e−12, 0) are clamped; anything lower means a broken Hessian.
template <Objective O>
double weighted_norm(const O& obj, const Vector& x, const Vector& v) {
  const double q = v.dot(hess_vec(obj, x, v));
  if (q < -1e-12) throw CurvatureError("weighted_norm: negative radicand " + std::to_string(q));
  return std::sqrt(std::max(q, 0.0));
}

/// Dense ∇²f(x) assembled column by column (tests and diagnostics only).
template <Objective O>
Matrix dense_hessian(const O& obj, const Vector& x) {
  const Index d = obj.info().dim;
  Matrix H(d, d);
  for (Index i = 0; i < d; ++i) H.col(i) = obj.hess_column(x, i);
  return 0.5 * (H + H.transpose());
}

}  // namespace lgbfgs
