#pragma once

// Random stores for property tests: distinct coordinate directions with r = A e_i for
// an SPD matrix A, so every pair has positive curvature.

#include <algorithm>
#include <numeric>
#include <random>

#include "lgbfgs/pair_store.hpp"
#include "oracles.hpp"

namespace oracle {

inline std::vector<Index> permutation(std::mt19937_64& rng, Index d) {
  std::vector<Index> p(static_cast<std::size_t>(d));
  std::iota(p.begin(), p.end(), Index{0});
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

inline lgbfgs::PairStore random_store(std::mt19937_64& rng, const Matrix& A, Index capacity, Index m, double h0) {
  const auto perm = permutation(rng, A.rows());
  lgbfgs::PairStore store(A.rows(), capacity, h0);
  for (Index k = 0; k < m; ++k) {
    const Index i = perm[static_cast<std::size_t>(k)];
    store = lgbfgs::insert_c1(store, {i, A.col(i)});
  }
  return store;
}

/// H from the store, replayed with the explicit-inverse oracle.
inline Matrix replay_H(const lgbfgs::PairStore& store) {
  const Index d = store.dim();
  Matrix H = store.h0_scale() * Matrix::Identity(d, d);
  for (const auto& p : store.pairs()) H = inv_bfgs(H, e(d, p.basis_index), p.r);
  return H;
}

}  // namespace oracle
