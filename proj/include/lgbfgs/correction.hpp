#pragma once

// Correction scaling: ψ_t = 1 + C_M φ_t (basic) or 1 + C_M φ_t + qᵗδ₀ (delta), applied
// to the store as H₀ ← H₀/ψ and r_u ← ψ r_u, which scales the implicit B_t by ψ.

#include <cmath>

#include "lgbfgs/objective.hpp"
#include "lgbfgs/pair_store.hpp"

namespace lgbfgs {

enum class CorrectionMode { off, basic, delta };

struct CorrectionConfig {
  CorrectionMode mode = CorrectionMode::off;
  double delta0 = 0.0;
  double q = 0.5;

  void validate() const {
    if (mode == CorrectionMode::delta && !(delta0 > 0.0 && q > 0.0 && q < 1.0)) {
      throw InvalidArgument("correction: delta mode needs delta0 > 0 and 0 < q < 1");
    }
  }
};

/// φ = ‖x_next − x‖ weighted by ∇²f(x).
template <Objective O>
double compute_phi(const O& obj, const Vector& x, const Vector& x_next) {
  detail::require_dim(x_next.size(), x.size(), "compute_phi");
  return weighted_norm(obj, x, Vector(x_next - x));
}

inline double scale_factor(double phi, const CorrectionConfig& cfg, double CM, long t) {
  if (!(phi >= 0.0)) throw InvalidArgument("scale_factor: phi must be >= 0");
  switch (cfg.mode) {
    case CorrectionMode::off: return 1.0;
    case CorrectionMode::basic: return 1.0 + CM * phi;
    case CorrectionMode::delta: return 1.0 + CM * phi + std::pow(cfg.q, static_cast<double>(t)) * cfg.delta0;
  }
  return 1.0;
}

inline PairStore apply_scaling(PairStore store, double psi) {
  if (!(psi >= 1.0)) throw InvalidArgument("apply_scaling: psi must be >= 1");
  if (psi == 1.0) return store;
  store.set_h0_scale(store.h0_scale() / psi);
  for (auto& p : store.mutable_pairs()) p.r *= psi;
  return store;
}

}  // namespace lgbfgs
