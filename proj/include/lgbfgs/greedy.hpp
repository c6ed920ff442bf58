#pragma once

#include <numeric>
#include <vector>

#include "lgbfgs/kernels.hpp"
#include "lgbfgs/objective.hpp"
#include "lgbfgs/pair_store.hpp"

namespace lgbfgs {

/// Which basis vectors the greedy step may choose from.
///  fixed_prefix: e_0..e_{τ−1} always.
///  adaptive:     the whole basis until the store is full, then the stored indices.
enum class SubsetPolicy { fixed_prefix, adaptive };

inline std::vector<Index> subset_indices(SubsetPolicy policy, const PairStore& store, Index d) {
  std::vector<Index> out;
  if (policy == SubsetPolicy::fixed_prefix) {
    out.resize(static_cast<std::size_t>(store.capacity()));
    std::iota(out.begin(), out.end(), Index{0});
    return out;
  }
  if (store.size() < store.capacity()) {
    out.resize(static_cast<std::size_t>(d));
    std::iota(out.begin(), out.end(), Index{0});
    return out;
  }
  return store.indices();
}

struct GreedyChoice {
  Index basis_index = 0;
  Vector r;
  double ratio = 0.0;  // e_iᵀB_t e_i / e_iᵀ∇²f e_i at the chosen index
};

/// argmax over candidates of (e_iᵀ B_t e_i)/(e_iᵀ ∇²f(x_next) e_i), smallest index on ties,
/// with r = ∇²f(x_next) e_i. `store` must already carry the correction scaling.
template <Objective O>
GreedyChoice greedy_pair(const O& obj, const Vector& x_next, const PairStore& store,
                         const std::vector<Index>& candidates) {
  if (candidates.empty()) throw InvalidArgument("greedy_pair: empty candidate set");
  const Vector denom = hess_diagonal(obj, x_next, candidates);
  const CompactB B(store);
  GreedyChoice best;
  bool have = false;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const Index i = candidates[k];
    const double h = denom(static_cast<Index>(k));
    if (!(h > 0.0)) {
      throw CurvatureError("greedy_pair: non-positive Hessian diagonal at index " + std::to_string(i));
    }
    const double ratio = B.diagonal(i) / h;
    if (!have || ratio > best.ratio || (ratio == best.ratio && i < best.basis_index)) {
      best.basis_index = i;
      best.ratio = ratio;
      have = true;
    }
  }
  best.r = obj.hess_column(x_next, best.basis_index);
  return best;
}

}  // namespace lgbfgs
