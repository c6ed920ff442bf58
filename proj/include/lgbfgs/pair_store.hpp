#pragma once

// Bounded history of curvature pairs whose variable variations are coordinate
// basis vectors. A pair is (basis_index, r) with s = e_{basis_index} implicit.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "lgbfgs/types.hpp"

namespace lgbfgs {

struct CurvaturePair {
  Index basis_index = 0;
  Vector r;

  /// sᵀr with s the unit coordinate vector.
  double curvature() const { return r(basis_index); }
};

enum class Case { C1, C2, C3 };

struct CaseTag {
  Case variant = Case::C1;
  Index j = -1;  // matching stored pair for C3, otherwise -1

  static CaseTag c1() { return {Case::C1, -1}; }
  static CaseTag c2() { return {Case::C2, -1}; }
  static CaseTag c3(Index j) { return {Case::C3, j}; }

  bool operator==(const CaseTag&) const = default;

  std::string name() const {
    switch (variant) {
      case Case::C1: return "C1";
      case Case::C2: return "C2";
      case Case::C3: return "C3";
    }
    return "?";
  }
};

class PairStore {
 public:
  PairStore(Index dim, Index capacity, double h0_scale) : dim_(dim), capacity_(capacity), h0_scale_(h0_scale) {
    if (dim <= 0) throw InvalidArgument("PairStore: dimension must be positive");
    if (capacity <= 0 || capacity > dim) throw InvalidArgument("PairStore: capacity must lie in [1, d]");
    if (!(h0_scale > 0.0)) throw InvalidArgument("PairStore: h0_scale must be positive");
  }

  Index dim() const { return dim_; }
  Index capacity() const { return capacity_; }
  Index size() const { return static_cast<Index>(pairs_.size()); }
  bool empty() const { return pairs_.empty(); }
  bool full() const { return size() == capacity_; }
  double h0_scale() const { return h0_scale_; }

  const std::vector<CurvaturePair>& pairs() const { return pairs_; }
  const CurvaturePair& operator[](Index k) const { return pairs_[static_cast<std::size_t>(k)]; }

  std::vector<Index> indices() const {
    std::vector<Index> out;
    out.reserve(pairs_.size());
    for (const auto& p : pairs_) out.push_back(p.basis_index);
    return out;
  }

  std::optional<Index> position_of(Index basis_index) const {
    for (std::size_t k = 0; k < pairs_.size(); ++k) {
      if (pairs_[k].basis_index == basis_index) return static_cast<Index>(k);
    }
    return std::nullopt;
  }

  /// Store holding the first `count` pairs with the same H₀.
  PairStore prefix(Index count) const {
    PairStore out(dim_, capacity_, h0_scale_);
    out.pairs_.assign(pairs_.begin(), pairs_.begin() + count);
    return out;
  }

  /// Checks |pairs| ≤ capacity, distinct basis indices and sᵀr > 0; throws on violation.
  void check_invariants() const {
    if (size() > capacity_) throw CapacityError("PairStore: size exceeds capacity");
    std::vector<Index> idx = indices();
    std::sort(idx.begin(), idx.end());
    if (std::adjacent_find(idx.begin(), idx.end()) != idx.end()) {
      throw InternalInconsistency("PairStore: duplicate basis index");
    }
    for (const auto& p : pairs_) {
      if (!(p.curvature() > 0.0)) throw CurvatureError("PairStore: pair with non-positive curvature");
    }
  }

  // Mutation is restricted to the store-update operations below and to
  // apply_scaling / aggregate_c3, which need to rewrite gradient variations.
  std::vector<CurvaturePair>& mutable_pairs() { return pairs_; }
  void set_h0_scale(double h0) {
    if (!(h0 > 0.0)) throw InvalidArgument("PairStore: h0_scale must be positive");
    h0_scale_ = h0;
  }

 private:
  Index dim_;
  Index capacity_;
  double h0_scale_;
  std::vector<CurvaturePair> pairs_;
};

namespace detail {
inline void check_pair(const PairStore& store, const CurvaturePair& pair, const char* what) {
  require_index(pair.basis_index, store.dim(), what);
  require_dim(pair.r.size(), store.dim(), what);
  if (!(pair.curvature() > 0.0)) {
    throw CurvatureError(std::string(what) + ": sᵀr = " + std::to_string(pair.curvature()) + " <= 0");
  }
}
}  // namespace detail

/// O(τ̂) case selection by index equality.
inline CaseTag classify(const PairStore& store, Index new_index) {
  detail::require_index(new_index, store.dim(), "classify");
  const auto pos = store.position_of(new_index);
  if (!pos) {
    if (store.full()) {
      throw InternalInconsistency("classify: new basis index " + std::to_string(new_index) +
                                  " is independent of a full store");
    }
    return CaseTag::c1();
  }
  if (*pos == store.size() - 1) return CaseTag::c2();
  return CaseTag::c3(*pos);
}

inline PairStore insert_c1(PairStore store, CurvaturePair pair) {
  detail::check_pair(store, pair, "insert_c1");
  if (store.full()) throw CapacityError("insert_c1: store at capacity " + std::to_string(store.capacity()));
  if (store.position_of(pair.basis_index)) throw InternalInconsistency("insert_c1: basis index already stored");
  store.mutable_pairs().push_back(std::move(pair));
  return store;
}

inline PairStore replace_c2(PairStore store, CurvaturePair pair) {
  detail::check_pair(store, pair, "replace_c2");
  if (store.empty()) throw InternalInconsistency("replace_c2: empty store");
  if (store.pairs().back().basis_index != pair.basis_index) {
    throw InternalInconsistency("replace_c2: basis index differs from the last stored pair");
  }
  store.mutable_pairs().back() = std::move(pair);
  return store;
}

}  // namespace lgbfgs
