#pragma once

// Self-check registry behind `lgbfgs verify`. Each check draws seeded random instances,
// compares a fast path against a dense oracle (or evaluates a bound) and reports the
// worst residual against a fixed tolerance.

#include <algorithm>
#include <functional>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "lgbfgs/diagnostics.hpp"
#include "lgbfgs/solvers.hpp"
#include "lgbfgs/synth.hpp"

namespace lgbfgs::verify {

using InverseUpdate = std::function<Matrix(const Matrix&, const Vector&, const Vector&)>;

struct Options {
  InverseUpdate inverse_update = [](const Matrix& H, const Vector& s, const Vector& r) {
    return dense_inv_bfgs_update(H, s, r);
  };
};

struct CheckResult {
  std::string name;
  bool passed = false;
  double worst = 0.0;
  double tolerance = 0.0;
};

enum class Scope { kernels, aggregation, theory, all };

inline std::optional<Scope> parse_scope(const std::string& s) {
  if (s == "kernels") return Scope::kernels;
  if (s == "aggregation") return Scope::aggregation;
  if (s == "theory") return Scope::theory;
  if (s == "all") return Scope::all;
  return std::nullopt;
}

// ---- random instances ----

inline Matrix random_spd(std::mt19937_64& rng, Index d) {
  std::normal_distribution<double> n01;
  Matrix G(d, d);
  for (Index j = 0; j < d; ++j)
    for (Index i = 0; i < d; ++i) G(i, j) = n01(rng);
  return G * G.transpose() / static_cast<double>(d) + 0.1 * Matrix::Identity(d, d);
}

inline Index uniform_index(std::mt19937_64& rng, Index lo, Index hi) {
  return std::uniform_int_distribution<Index>(lo, hi)(rng);
}

inline std::vector<Index> random_permutation(std::mt19937_64& rng, Index d) {
  std::vector<Index> p(static_cast<std::size_t>(d));
  std::iota(p.begin(), p.end(), Index{0});
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

/// Store of m pairs (e_i, A e_i) on distinct random indices of an SPD matrix A.
inline PairStore random_store(std::mt19937_64& rng, const Matrix& A, Index capacity, Index m) {
  const Index d = A.rows();
  const double h0 = std::uniform_real_distribution<double>(0.2, 2.0)(rng) / A.diagonal().maxCoeff();
  PairStore store(d, capacity, h0);
  const auto perm = random_permutation(rng, d);
  for (Index k = 0; k < m; ++k) {
    const Index i = perm[static_cast<std::size_t>(k)];
    store = insert_c1(store, {i, A.col(i)});
  }
  return store;
}

struct C3Event {
  PairStore store;
  Index j = 0;
  CurvaturePair new_pair;
};

/// Full-or-partial store and a new pair repeating stored index j < τ̂−1. Each pair uses
/// its own SPD matrix so that the history is not generated by a single Hessian.
inline C3Event random_c3_event(std::mt19937_64& rng, Index max_d, Index max_m) {
  const Index d = uniform_index(rng, 3, max_d);
  const Index m = uniform_index(rng, 2, std::min(d, max_m));
  const auto perm = random_permutation(rng, d);
  PairStore store(d, m, std::uniform_real_distribution<double>(0.2, 2.0)(rng));
  for (Index k = 0; k < m; ++k) {
    const Index i = perm[static_cast<std::size_t>(k)];
    store = insert_c1(store, {i, random_spd(rng, d).col(i)});
  }
  const Index j = uniform_index(rng, 0, m - 2);
  const Index i = store[j].basis_index;
  return {store, j, {i, random_spd(rng, d).col(i)}};
}

inline double rel_err(const Vector& a, const Vector& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }
inline double rel_fro(const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

// ---- checks ----

namespace detail {

inline CheckResult result(std::string name, double worst, double tol) {
  return {std::move(name), worst <= tol, worst, tol};
}

inline Matrix fold_inverse(const PairStore& store, const InverseUpdate& upd) {
  const Index d = store.dim();
  Matrix H = Matrix::Identity(d, d) * store.h0_scale();
  for (const auto& p : store.pairs()) H = upd(H, lgbfgs::detail::unit(d, p.basis_index), p.r);
  return H;
}

}  // namespace detail

inline CheckResult check_two_loop(const Options& opt, int instances = 200) {
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int k = 0; k < instances; ++k) {
    const Index d = uniform_index(rng, 2, 20);
    const Index m = uniform_index(rng, 0, std::min<Index>(d, 10));
    const Matrix A = random_spd(rng, d);
    const PairStore store = random_store(rng, A, std::max<Index>(m, 1), m);
    std::normal_distribution<double> n01;
    Vector g(d);
    for (Index i = 0; i < d; ++i) g(i) = n01(rng);
    const Vector want = -(detail::fold_inverse(store, opt.inverse_update) * g);
    worst = std::max(worst, rel_err(two_loop_direction(store, g), want));
  }
  return detail::result("two_loop_matches_dense_inverse", worst, 1e-10);
}

inline CheckResult check_compact_columns(int instances = 200) {
  std::mt19937_64 rng(202);
  double worst = 0.0;
  for (int k = 0; k < instances; ++k) {
    const Index d = uniform_index(rng, 2, 20);
    const Index m = uniform_index(rng, 0, std::min<Index>(d, 10));
    const Matrix A = random_spd(rng, d);
    const PairStore store = random_store(rng, A, std::max<Index>(m, 1), m);
    const Matrix B = dense_B_from_pairs(store);
    const CompactB cb(store);
    for (Index i = 0; i < d; ++i) worst = std::max(worst, rel_err(cb.column(i), B.col(i)));
  }
  return detail::result("compact_B_column_matches_dense", worst, 1e-9);
}

inline CheckResult check_inverse_secant(const Options& opt, int instances = 200) {
  std::mt19937_64 rng(303);
  double worst = 0.0;
  for (int k = 0; k < instances; ++k) {
    const Index d = uniform_index(rng, 2, 20);
    const Matrix A = random_spd(rng, d);
    Matrix H = Matrix::Identity(d, d) / A.diagonal().maxCoeff();
    const auto perm = random_permutation(rng, d);
    const Index m = std::min<Index>(d, 10);
    for (Index u = 0; u < m; ++u) {
      const Vector s = lgbfgs::detail::unit(d, perm[static_cast<std::size_t>(u)]);
      const Vector r = A * s;
      H = opt.inverse_update(H, s, r);
      worst = std::max(worst, rel_err(H * r, s));
    }
  }
  return detail::result("inverse_update_secant", worst, 1e-10);
}

inline CheckResult check_direct_inverse_consistency(const Options& opt, int instances = 200) {
  std::mt19937_64 rng(404);
  double worst = 0.0;
  for (int k = 0; k < instances; ++k) {
    const Index d = uniform_index(rng, 2, 20);
    const Index m = uniform_index(rng, 0, std::min<Index>(d, 10));
    const Matrix A = random_spd(rng, d);
    const PairStore store = random_store(rng, A, std::max<Index>(m, 1), m);
    const Matrix prod = dense_B_from_pairs(store) * detail::fold_inverse(store, opt.inverse_update);
    worst = std::max(worst, (prod - Matrix::Identity(d, d)).norm() / std::sqrt(static_cast<double>(d)));
  }
  return detail::result("direct_times_inverse_is_identity", worst, 1e-8);
}

inline const char* aggregation_check_name(AggregationMethod method) {
  switch (method) {
    case AggregationMethod::closed_form: return "c3_equivalence_closed_form";
    case AggregationMethod::oracle_fit: return "c3_equivalence_oracle_fit";
    case AggregationMethod::coordinate: return "c3_equivalence_coordinate";
  }
  return "?";
}

inline CheckResult check_c3(AggregationMethod method, int events, Index max_d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int k = 0; k < events; ++k) {
    const C3Event ev = random_c3_event(rng, max_d, 5);
    const Matrix want = lgbfgs::detail::augmented_history_H(ev.store, ev.new_pair);
    const PairStore after = aggregate_c3(ev.store, ev.j, ev.new_pair, method);
    worst = std::max(worst, rel_fro(dense_H_from_pairs(after), want));
  }
  return detail::result(aggregation_check_name(method), worst, 1e-8);
}

/// C3 events on full stores with τ = d, where the tail spans the whole space.
inline CheckResult check_c3_full_store(int events = 40) {
  std::mt19937_64 rng(1313);
  double worst = 0.0;
  for (int k = 0; k < events; ++k) {
    const Index d = uniform_index(rng, 3, 20);
    const Matrix A = random_spd(rng, d);
    PairStore store = random_store(rng, A, d, d);
    // Perturb each variation with its own Hessian so the history is not a single quadratic.
    for (auto& pr : store.mutable_pairs()) pr.r = random_spd(rng, d).col(pr.basis_index);
    const Index j = uniform_index(rng, 0, std::min<Index>(d - 2, 1));
    const CurvaturePair np{store[j].basis_index, random_spd(rng, d).col(store[j].basis_index)};
    const Matrix want = lgbfgs::detail::augmented_history_H(store, np);
    worst = std::max(worst, rel_fro(dense_H_from_pairs(aggregate_c3(store, j, np)), want));
  }
  return detail::result("c3_equivalence_full_store", worst, 1e-8);
}

/// Largest pair_count − τ over LG-BFGS and L-BFGS fuzz runs; store invariants are asserted
/// every step, so a violation throws and is reported as +inf.
inline CheckResult check_memory_bound(int runs = 24, long iters = 100) {
  std::mt19937_64 rng(505);
  double worst = 0.0;
  for (int k = 0; k < runs; ++k) {
    const Index d = uniform_index(rng, 3, 16);
    SolverConfig cfg;
    cfg.tau = uniform_index(rng, 1, d);
    cfg.max_iters = iters;
    cfg.grad_tol = 0.0;
    cfg.subset_policy = k % 2 == 0 ? SubsetPolicy::fixed_prefix : SubsetPolicy::adaptive;
    try {
      std::vector<Trace> traces;
      const auto seed = static_cast<std::uint64_t>(rng());
      if (k % 3 == 2) {
        const LogisticObjective obj = synth_logistic({d, 4 * d, 1e-3, 1.0, seed});
        const Vector x0 = Vector::Zero(d);
        cfg.method = Method::lg_bfgs;
        traces.push_back(run_solver(obj, x0, cfg));
        cfg.method = Method::lbfgs;
        traces.push_back(run_solver(obj, x0, cfg));
      } else {
        const QuadraticObjective obj = synth_quadratic({geometric_spectrum(d, 1.0, 100.0), -1, -1, true, seed});
        const Vector x0 = Vector::Ones(d);
        cfg.method = Method::lg_bfgs;
        traces.push_back(run_solver(obj, x0, cfg));
        cfg.method = Method::lbfgs;
        traces.push_back(run_solver(obj, x0, cfg));
      }
      for (const auto& tr : traces)
        for (const auto& r : tr.records) worst = std::max(worst, static_cast<double>(r.pair_count - cfg.tau));
    } catch (const Error&) {
      worst = std::numeric_limits<double>::infinity();
    }
  }
  return detail::result("memory_bound_pair_count", worst, 0.0);
}

inline CheckResult check_scaled_chain(int chains = 100) {
  std::mt19937_64 rng(606);
  double worst = 0.0;
  for (int k = 0; k < chains; ++k) {
    const Index d = uniform_index(rng, 2, 10);
    const Index len = uniform_index(rng, 1, 6);
    const double psi = std::uniform_real_distribution<double>(1.0, 4.0)(rng);
    const Matrix B0 = random_spd(rng, d);
    Matrix B = B0, Bs = psi * B0;
    std::normal_distribution<double> n01;
    for (Index u = 0; u < len; ++u) {
      const Matrix A = random_spd(rng, d);
      Vector s(d);
      for (Index i = 0; i < d; ++i) s(i) = n01(rng);
      const Vector r = A * s;
      B = dense_bfgs_update(B, s, r);
      Bs = dense_bfgs_update(Bs, s, psi * r);
    }
    worst = std::max(worst, rel_fro(Bs, psi * B));
  }
  return detail::result("scaled_chain_identity", worst, 1e-10);
}

/// Max over iterations of ‖x_LG − x_greedy‖∞ / max(1, ‖x_greedy‖∞) with τ = d.
inline double full_memory_gap(Index d, long iters, std::uint64_t seed) {
  const QuadraticObjective obj = synth_quadratic({geometric_spectrum(d, 1.0, 50.0), -1, -1, true, seed});
  SolverConfig cfg;
  cfg.tau = d;
  cfg.max_iters = iters;
  cfg.grad_tol = 0.0;
  cfg.keep_iterates = true;
  cfg.correction.mode = CorrectionMode::basic;
  cfg.subset_policy = SubsetPolicy::fixed_prefix;
  const Vector x0 = Vector::Ones(d) * 3.0;
  cfg.method = Method::lg_bfgs;
  const Trace lg = run_lg_bfgs(obj, x0, cfg);
  cfg.method = Method::greedy_bfgs;
  const Trace gr = run_baseline(obj, x0, cfg);
  if (lg.records.size() != gr.records.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t t = 0; t < lg.records.size(); ++t) {
    const Vector& a = *lg.records[t].iterate;
    const Vector& b = *gr.records[t].iterate;
    worst = std::max(worst, (a - b).lpNorm<Eigen::Infinity>() / std::max(1.0, b.lpNorm<Eigen::Infinity>()));
  }
  return worst;
}

inline CheckResult check_full_memory() {
  return detail::result("full_memory_matches_greedy_bfgs", full_memory_gap(10, 50, 707), 1e-8);
}

/// Worst −residual of the per-step trace-metric inequality along a corrected LG-BFGS run,
/// with B_t reconstructed densely from the store before and after each step.
template <Objective O>
double trace_metric_worst(const O& obj, const Vector& x0, Index tau, SubsetPolicy policy, long iters) {
  SolverConfig cfg;
  cfg.tau = tau;
  cfg.grad_tol = 0.0;
  cfg.correction.mode = CorrectionMode::basic;
  cfg.subset_policy = policy;
  const Index d = obj.info().dim;
  PairStore store(d, tau, cfg.initial_h0(obj.info()));
  LgState state{0, x0, eval_value_grad(obj, x0)};
  double worst = -std::numeric_limits<double>::infinity();
  for (long t = 0; t < iters; ++t) {
    if (state.vg.grad.norm() == 0.0) break;
    LgStepResult step = lg_bfgs_step(obj, state, store, cfg);
    const std::vector<Index> subset = subset_indices(policy, store, d);
    const double res = prop3_residual(obj, state.x, step.state.x, dense_B_from_pairs(store),
                                      dense_B_from_pairs(step.store), subset);
    worst = std::max(worst, -res);
    state = std::move(step.state);
    store = std::move(step.store);
  }
  return worst;
}

inline CheckResult check_trace_metric() {
  double worst = -std::numeric_limits<double>::infinity();
  std::uint64_t seed = 808;
  for (Index d : {Index{5}, Index{20}}) {
    for (Index tau : {Index{1}, d / 2, d}) {
      for (SubsetPolicy pol : {SubsetPolicy::fixed_prefix, SubsetPolicy::adaptive}) {
        const QuadraticObjective obj = synth_quadratic({geometric_spectrum(d, 1.0, 20.0), -1, -1, true, seed++});
        worst = std::max(worst, trace_metric_worst(obj, Vector::Ones(d), tau, pol, 100));
      }
    }
  }
  return detail::result("trace_metric_step_inequality", worst, 1e-9);
}

/// Max over t ≤ iters of (λ_f(x_t) − (1 − μ/2L)ᵗ λ_f(x₀)) / λ_f(x₀) for LG-BFGS on a quadratic.
inline double linear_rate_excess(Index d, Index tau, double cond, long iters, long k0, std::uint64_t seed) {
  const QuadraticObjective obj = synth_quadratic({geometric_spectrum(d, 1.0, cond), -1, -1, true, seed});
  const Vector x0 = warm_start(obj, Vector::Ones(d) * 5.0, k0);
  SolverConfig cfg;
  cfg.tau = tau;
  cfg.max_iters = iters;
  cfg.grad_tol = 0.0;
  cfg.record_dense_diags = true;
  cfg.correction.mode = CorrectionMode::basic;
  const Trace tr = run_lg_bfgs(obj, x0, cfg);
  const double lam0 = *tr.records.front().lambda_f;
  if (lam0 == 0.0) return 0.0;
  const ObjectiveInfo& info = obj.info();
  RateParams p{info.mu, info.lipschitz_L, d, 1.0, 0, 0.0, 0.5, 0.0};
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& r : tr.records) {
    const double bound = theory_curves(p, r.t).prop2_bound;
    worst = std::max(worst, (*r.lambda_f - bound * lam0) / lam0);
  }
  return worst;
}

inline CheckResult check_linear_rate() {
  double worst = -std::numeric_limits<double>::infinity();
  std::uint64_t seed = 909;
  for (Index d : {Index{8}, Index{20}}) {
    for (double cond : {10.0, 100.0}) {
      worst = std::max(worst, linear_rate_excess(d, std::max<Index>(1, d / 2), cond, 200, 2, seed++));
    }
  }
  return detail::result("linear_rate_bound", worst, 1e-12);
}

/// Worst violation among: β_d = 1 on the full basis, and 1 ≤ β(e_i) ≤ cond(E).
inline CheckResult check_beta(int matrices = 50) {
  std::mt19937_64 rng(1010);
  double worst = 0.0;
  for (int k = 0; k < matrices; ++k) {
    const Index d = uniform_index(rng, 2, 20);
    const Matrix E = random_spd(rng, d);
    std::vector<Index> all(static_cast<std::size_t>(d));
    std::iota(all.begin(), all.end(), Index{0});
    const BetaResult b = beta_subset(E, all);
    worst = std::max(worst, std::abs(b.beta_tau - 1.0));
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(E, Eigen::EigenvaluesOnly);
    const double cond = eig.eigenvalues().maxCoeff() / eig.eigenvalues().minCoeff();
    for (Index i = 0; i < d; ++i) {
      worst = std::max(worst, 1.0 - b.betas(i));
      worst = std::max(worst, (b.betas(i) - cond) / cond);
    }
  }
  return detail::result("relative_condition_bounds", worst, 1e-12);
}

inline CheckResult check_theory_spot() {
  double worst = 0.0;
  RateParams p{1.0, 2.0, 4, 1.0, 0, 0.0, 0.5, 0.0};
  worst = std::max(worst, std::abs(theory_curves(p, 2).thm2_bound - 0.669921875));
  worst = std::max(worst, std::abs(theory_curves(p, 0).prop2_bound - 1.0));
  worst = std::max(worst, std::isinf(theory_curves(p, 0).region_eps_prop2) ? 0.0 : 1.0);
  return detail::result("rate_curve_spot_values", worst, 1e-15);
}

struct Registered {
  Scope scope;
  std::string name;
  std::function<CheckResult(const Options&)> run;
};

inline std::vector<Registered> registry() {
  return {
      {Scope::kernels, "two_loop_matches_dense_inverse", [](const Options& o) { return check_two_loop(o); }},
      {Scope::kernels, "compact_B_column_matches_dense", [](const Options&) { return check_compact_columns(); }},
      {Scope::kernels, "inverse_update_secant", [](const Options& o) { return check_inverse_secant(o); }},
      {Scope::kernels, "direct_times_inverse_is_identity",
       [](const Options& o) { return check_direct_inverse_consistency(o); }},
      {Scope::aggregation, "c3_equivalence_closed_form",
       [](const Options&) { return check_c3(AggregationMethod::closed_form, 100, 12, 1111); }},
      {Scope::aggregation, "c3_equivalence_oracle_fit",
       [](const Options&) { return check_c3(AggregationMethod::oracle_fit, 20, 8, 1212); }},
      {Scope::aggregation, "c3_equivalence_coordinate",
       [](const Options&) { return check_c3(AggregationMethod::coordinate, 100, 12, 1414); }},
      {Scope::aggregation, "c3_equivalence_full_store", [](const Options&) { return check_c3_full_store(); }},
      {Scope::aggregation, "memory_bound_pair_count", [](const Options&) { return check_memory_bound(); }},
      {Scope::theory, "scaled_chain_identity", [](const Options&) { return check_scaled_chain(); }},
      {Scope::theory, "full_memory_matches_greedy_bfgs", [](const Options&) { return check_full_memory(); }},
      {Scope::theory, "trace_metric_step_inequality", [](const Options&) { return check_trace_metric(); }},
      {Scope::theory, "linear_rate_bound", [](const Options&) { return check_linear_rate(); }},
      {Scope::theory, "relative_condition_bounds", [](const Options&) { return check_beta(); }},
      {Scope::theory, "rate_curve_spot_values", [](const Options&) { return check_theory_spot(); }},
  };
}

/// Runs every registered check in scope, printing one line per check. Returns true iff all pass.
inline bool run_suite(Scope scope, std::ostream& out, const Options& opt = {},
                      std::vector<CheckResult>* results = nullptr) {
  bool ok = true;
  for (const auto& reg : registry()) {
    if (scope != Scope::all && reg.scope != scope) continue;
    CheckResult r;
    try {
      r = reg.run(opt);
    } catch (const std::exception& e) {
      r = {reg.name, false, std::numeric_limits<double>::infinity(), 0.0};
      log::warn("verify: " + reg.name + " threw: " + e.what());
    }
    out << (r.passed ? "PASS " : "FAIL ") << r.name << " worst=" << r.worst << " tol=" << r.tolerance << "\n";
    ok = ok && r.passed;
    if (results) results->push_back(r);
  }
  return ok;
}

}  // namespace lgbfgs::verify
