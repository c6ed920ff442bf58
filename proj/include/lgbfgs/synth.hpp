#pragma once

// Seeded desk-scale problems: quadratics with a prescribed spectrum and logistic
// regression on Gaussian samples.

#include <cstdint>
#include <random>

#include "lgbfgs/dataset.hpp"
#include "lgbfgs/objective.hpp"

namespace lgbfgs {

/// Eigenvalues spaced geometrically from mu to L.
inline Vector geometric_spectrum(Index d, double mu, double L) {
  if (d <= 0 || !(mu > 0.0) || !(L >= mu)) throw InvalidArgument("geometric_spectrum: need d > 0, 0 < mu <= L");
  Vector s(d);
  for (Index i = 0; i < d; ++i) {
    const double w = d == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(d - 1);
    s(i) = mu * std::pow(L / mu, w);
  }
  // pow can land one ulp past L
  s(d - 1) = d == 1 ? mu : L;
  return s;
}

/// Haar-distributed orthogonal matrix from the seed.
inline Matrix random_orthogonal(Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  Matrix G(d, d);
  for (Index j = 0; j < d; ++j)
    for (Index i = 0; i < d; ++i) G(i, j) = n01(rng);
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix Q = qr.householderQ() * Matrix::Identity(d, d);
  const Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < d; ++j)
    if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
  return Q;
}

struct QuadraticSpec {
  Vector spectrum;
  double mu = -1.0;  // <= 0: smallest eigenvalue
  double L = -1.0;   // <= 0: largest eigenvalue
  bool rotate = true;
  std::uint64_t seed = 0;
};

/// A = Q diag(spectrum) Qᵀ with b Gaussian, both from the seed. Constants are taken
/// from the spectrum, not from a numerical eigensolve.
inline QuadraticObjective synth_quadratic(const QuadraticSpec& spec) {
  const Index d = spec.spectrum.size();
  if (d == 0) throw InvalidArgument("synth_quadratic: empty spectrum");
  const double lo = spec.spectrum.minCoeff();
  const double hi = spec.spectrum.maxCoeff();
  const double mu = spec.mu > 0.0 ? spec.mu : lo;
  const double L = spec.L > 0.0 ? spec.L : hi;
  if (!(lo > 0.0)) throw InvalidArgument("synth_quadratic: spectrum must be positive");
  if (lo < mu || hi > L) throw InvalidArgument("synth_quadratic: spectrum outside [mu, L]");

  std::mt19937_64 rng(spec.seed);
  Matrix A = spec.spectrum.asDiagonal().toDenseMatrix();
  if (spec.rotate && d > 1) {
    const Matrix Q = random_orthogonal(d, rng);
    A = Q * A * Q.transpose();
    A = 0.5 * (A + A.transpose()).eval();
  }
  std::normal_distribution<double> n01;
  Vector b(d);
  for (Index i = 0; i < d; ++i) b(i) = n01(rng);

  return QuadraticObjective(std::move(A), std::move(b), mu, L);
}

/// Exact constants for the unrotated diagonal case.
inline QuadraticObjective synth_diagonal_quadratic(const Vector& spectrum, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  Vector b(spectrum.size());
  for (Index i = 0; i < b.size(); ++i) b(i) = n01(rng);
  return QuadraticObjective(spectrum.asDiagonal().toDenseMatrix(), std::move(b), spectrum.minCoeff(),
                            spectrum.maxCoeff());
}

struct LogisticSpec {
  Index d = 50;
  Index n = 500;
  double mu = 1e-4;
  double separation = 0.0;  // 0: labels independent of the samples
  std::uint64_t seed = 0;
};

/// Unit-normalized Gaussian samples. Labels are sign(separation·zᵀw + ε) for a hidden
/// Gaussian w and ε ~ N(0,1), or fair coin flips when separation is 0.
inline Dataset synth_logistic_dataset(const LogisticSpec& spec) {
  if (spec.d <= 0 || spec.n <= 0) throw InvalidArgument("synth_logistic: need d > 0 and N > 0");
  if (!(spec.separation >= 0.0)) throw InvalidArgument("synth_logistic: separation must be >= 0");
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> n01;
  Vector w(spec.d);
  for (Index i = 0; i < spec.d; ++i) w(i) = n01(rng);
  w.normalize();

  Dataset ds;
  ds.n_features = spec.d;
  ds.rows.resize(static_cast<std::size_t>(spec.n));
  ds.labels.resize(static_cast<std::size_t>(spec.n));
  Vector z(spec.d);
  for (Index r = 0; r < spec.n; ++r) {
    for (Index i = 0; i < spec.d; ++i) z(i) = n01(rng);
    auto& row = ds.rows[static_cast<std::size_t>(r)];
    for (Index i = 0; i < spec.d; ++i) {
      row.indices.push_back(i);
      row.values.push_back(z(i));
    }
    const double noise = n01(rng);
    int label;
    if (spec.separation == 0.0) {
      label = noise >= 0.0 ? 1 : -1;
    } else {
      label = spec.separation * z.normalized().dot(w) + noise >= 0.0 ? 1 : -1;
    }
    ds.labels[static_cast<std::size_t>(r)] = label;
  }
  return normalize_rows(std::move(ds));
}

inline LogisticObjective synth_logistic(const LogisticSpec& spec) {
  return LogisticObjective(synth_logistic_dataset(spec), spec.mu);
}

}  // namespace lgbfgs
