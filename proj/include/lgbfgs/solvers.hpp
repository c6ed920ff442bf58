#pragma once

#include <chrono>
#include <cmath>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "lgbfgs/correction.hpp"
#include "lgbfgs/diagnostics.hpp"
#include "lgbfgs/displacement.hpp"
#include "lgbfgs/greedy.hpp"
#include "lgbfgs/kernels.hpp"
#include "lgbfgs/log.hpp"
#include "lgbfgs/objective.hpp"
#include "lgbfgs/pair_store.hpp"

namespace lgbfgs {

enum class Method { gd, lbfgs, bfgs_dense, greedy_bfgs, lg_bfgs };

/// Initial inverse scaling for the L-BFGS baseline.
enum class LbfgsH0 { fixed, barzilai_borwein };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::gd: return "gd";
    case Method::lbfgs: return "lbfgs";
    case Method::bfgs_dense: return "bfgs_dense";
    case Method::greedy_bfgs: return "greedy_bfgs";
    case Method::lg_bfgs: return "lg_bfgs";
  }
  return "?";
}

inline std::optional<Method> parse_method(const std::string& s) {
  for (Method m : {Method::gd, Method::lbfgs, Method::bfgs_dense, Method::greedy_bfgs, Method::lg_bfgs}) {
    if (s == method_name(m)) return m;
  }
  return std::nullopt;
}

struct SolverConfig {
  Method method = Method::lg_bfgs;
  double alpha = -1.0;  // <= 0 selects the default: 1 for quasi-Newton methods, 1/L for gd
  Index tau = 1;
  long max_iters = 100;
  double grad_tol = 1e-12;
  CorrectionConfig correction{};
  SubsetPolicy subset_policy = SubsetPolicy::fixed_prefix;
  long warm_start_k0 = 0;
  bool record_dense_diags = false;
  bool keep_iterates = false;
  bool check_invariants = true;
  AggregationMethod aggregation = AggregationMethod::closed_form;
  LbfgsH0 lbfgs_h0 = LbfgsH0::fixed;
  double h0_scale = -1.0;  // <= 0 selects 1/L

  double step(const ObjectiveInfo& info) const {
    if (alpha > 0.0) return alpha;
    return method == Method::gd ? 1.0 / info.lipschitz_L : 1.0;
  }
  double initial_h0(const ObjectiveInfo& info) const { return h0_scale > 0.0 ? h0_scale : 1.0 / info.lipschitz_L; }

  void validate(Index d) const {
    if (alpha <= 0.0 && alpha != -1.0) throw InvalidArgument("solver: alpha must be positive");
    if (max_iters < 0) throw InvalidArgument("solver: max_iters must be >= 0");
    if (warm_start_k0 < 0) throw InvalidArgument("solver: warm_start_k0 must be >= 0");
    if (!(grad_tol >= 0.0)) throw InvalidArgument("solver: grad_tol must be >= 0");
    if (method == Method::lbfgs || method == Method::lg_bfgs) {
      if (tau < 1) throw InvalidArgument("solver: tau must be positive");
      if (method == Method::lg_bfgs && tau > d) throw InvalidArgument("solver: tau must not exceed d for lg_bfgs");
    }
    correction.validate();
  }
};

struct IterationRecord {
  long t = 0;
  double f_value = 0.0;
  double grad_norm = 0.0;
  std::optional<double> lambda_f;
  std::optional<double> sigma;
  std::optional<double> beta_tau;
  std::optional<CaseTag> case_tag;
  Index pair_count = 0;
  double wall_time_s = 0.0;
  std::optional<Vector> iterate;
};

enum class TraceStatus { converged, max_iters, diverged };

struct Trace {
  Method method = Method::lg_bfgs;
  Index tau = 0;
  std::vector<IterationRecord> records;
  TraceStatus status = TraceStatus::max_iters;
  std::string message;
  Vector x_final;
};

namespace detail {

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// Shared record/stop bookkeeping for all drivers.
class Recorder {
 public:
  Recorder(const SolverConfig& cfg, Trace& trace) : cfg_(cfg), trace_(trace) {}

  // Returns true when the run should stop after this record.
  bool push(IterationRecord rec, const Vector& x) {
    rec.wall_time_s = clock_.seconds();
    if (cfg_.keep_iterates) rec.iterate = x;
    const double f = rec.f_value;
    const double gn = rec.grad_norm;
    const long t = rec.t;
    trace_.records.push_back(std::move(rec));
    trace_.x_final = x;
    if (!std::isfinite(f) || !std::isfinite(gn)) {
      return stop(TraceStatus::diverged, "non-finite objective or gradient at t=" + std::to_string(t));
    }
    if (have_prev_ && f > prev_f_) {
      if (++increases_ >= 20) return stop(TraceStatus::diverged, "objective increased 20 consecutive times");
    } else {
      increases_ = 0;
    }
    prev_f_ = f;
    have_prev_ = true;
    if (gn <= cfg_.grad_tol) return stop(TraceStatus::converged, "gradient tolerance reached");
    if (t >= cfg_.max_iters) return stop(TraceStatus::max_iters, "iteration budget exhausted");
    return false;
  }

 private:
  bool stop(TraceStatus s, std::string msg) {
    trace_.status = s;
    trace_.message = std::move(msg);
    if (s == TraceStatus::diverged) log::warn(std::string(method_name(trace_.method)) + ": " + trace_.message);
    return true;
  }

  const SolverConfig& cfg_;
  Trace& trace_;
  Clock clock_;
  double prev_f_ = 0.0;
  bool have_prev_ = false;
  int increases_ = 0;
};

template <Objective O>
IterationRecord base_record(const O& obj, const SolverConfig& cfg, long t, const Vector& x, const ValueGrad& vg) {
  IterationRecord rec;
  rec.t = t;
  rec.f_value = vg.value;
  rec.grad_norm = vg.grad.norm();
  if (cfg.record_dense_diags && std::isfinite(rec.grad_norm)) rec.lambda_f = lambda_f(obj, x);
  return rec;
}

/// One greedy BFGS update on dense (B, H) pairs: scales by ψ, picks the greedy basis
/// vector at x_next over the full basis, and returns the chosen index.
template <Objective O>
Index greedy_dense_update(const O& obj, const Vector& x_next, double psi, Matrix& B, Matrix& H) {
  const Index d = B.rows();
  B *= psi;
  H /= psi;
  std::vector<Index> all(static_cast<std::size_t>(d));
  for (Index i = 0; i < d; ++i) all[static_cast<std::size_t>(i)] = i;
  const Vector hd = hess_diagonal(obj, x_next, all);
  Index best = 0;
  double best_ratio = -1.0;
  for (Index i = 0; i < d; ++i) {
    if (!(hd(i) > 0.0)) throw CurvatureError("greedy_bfgs: non-positive Hessian diagonal");
    const double ratio = B(i, i) / hd(i);
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = i;
    }
  }
  const Vector s = unit(d, best);
  const Vector r = hess_column(obj, x_next, best);
  B = dense_bfgs_update(B, s, r);
  H = dense_inv_bfgs_update(H, s, r);
  return best;
}

template <Objective O>
double correction_psi(const O& obj, const CorrectionConfig& cc, const Vector& x, const Vector& x_next, long t) {
  if (cc.mode == CorrectionMode::off) return 1.0;
  return scale_factor(compute_phi(obj, x, x_next), cc, obj.info().self_concordant_CM, t);
}

}  // namespace detail

/// Runs gd, lbfgs, bfgs_dense or greedy_bfgs from x0 (no warm start applied here).
template <Objective O>
Trace run_baseline(const O& obj, const Vector& x0, const SolverConfig& cfg) {
  const ObjectiveInfo& info = obj.info();
  const Index d = info.dim;
  detail::require_dim(x0.size(), d, "run_baseline");
  cfg.validate(d);
  if (cfg.method == Method::lg_bfgs) throw InvalidArgument("run_baseline: use run_lg_bfgs for lg_bfgs");

  Trace trace;
  trace.method = cfg.method;
  trace.tau = cfg.method == Method::lbfgs ? cfg.tau : 0;
  detail::Recorder rec(cfg, trace);
  const double alpha = cfg.step(info);
  const double h0 = cfg.initial_h0(info);

  Vector x = x0;
  ValueGrad vg = eval_value_grad(obj, x);

  std::deque<Vector> S, Y;
  double lb_h0 = h0;
  Matrix B, H;
  const bool dense = cfg.method == Method::bfgs_dense || cfg.method == Method::greedy_bfgs;
  if (dense) {
    B = Matrix::Identity(d, d) / h0;
    H = Matrix::Identity(d, d) * h0;
  }

  for (long t = 0;; ++t) {
    IterationRecord r = detail::base_record(obj, cfg, t, x, vg);
    if (cfg.method == Method::lbfgs) r.pair_count = static_cast<Index>(S.size());
    if (dense) {
      r.pair_count = d;
      if (cfg.record_dense_diags) r.sigma = sigma_metric(obj, x, B);
    }
    if (rec.push(std::move(r), x)) break;

    Vector direction;
    switch (cfg.method) {
      case Method::gd: direction = -vg.grad; break;
      case Method::lbfgs: direction = -apply_H_general(lb_h0, S, Y, vg.grad); break;
      default: direction = -(H * vg.grad); break;
    }
    Vector x_next = x + alpha * direction;
    ValueGrad vg_next = eval_value_grad(obj, x_next);

    if (cfg.method == Method::lbfgs || cfg.method == Method::bfgs_dense) {
      const Vector s = x_next - x;
      const Vector y = vg_next.grad - vg.grad;
      const double sy = s.dot(y);
      if (sy > 0.0 && std::isfinite(sy)) {
        if (cfg.method == Method::lbfgs) {
          if (static_cast<Index>(S.size()) == cfg.tau) {
            S.pop_front();
            Y.pop_front();
          }
          S.push_back(s);
          Y.push_back(y);
          if (cfg.lbfgs_h0 == LbfgsH0::barzilai_borwein) lb_h0 = sy / y.squaredNorm();
        } else {
          B = dense_bfgs_update(B, s, y);
          H = dense_inv_bfgs_update(H, s, y);
        }
      } else {
        log::debug("baseline: skipped pair update with non-positive curvature");
      }
    } else if (cfg.method == Method::greedy_bfgs) {
      const double psi = detail::correction_psi(obj, cfg.correction, x, x_next, t);
      detail::greedy_dense_update(obj, x_next, psi, B, H);
    }
    x = std::move(x_next);
    vg = std::move(vg_next);
  }
  return trace;
}

/// Iterate state carried between LG-BFGS steps.
struct LgState {
  long t = 0;
  Vector x;
  ValueGrad vg;
};

struct LgStepResult {
  LgState state;
  PairStore store;
  CaseTag tag;
  double psi = 1.0;
  std::optional<double> beta_tau;  // only when dense diagnostics are requested
};

/// One iteration: direction from the current store, correction scaling, greedy pair at the
/// new point, then the C1/C2/C3 store update.
template <Objective O>
LgStepResult lg_bfgs_step(const O& obj, const LgState& state, const PairStore& store, const SolverConfig& cfg) {
  const ObjectiveInfo& info = obj.info();
  const Index d = info.dim;
  const Vector direction = two_loop_direction(store, state.vg.grad);
  Vector x_next = state.x + cfg.step(info) * direction;

  const double psi = detail::correction_psi(obj, cfg.correction, state.x, x_next, state.t);
  PairStore scaled = apply_scaling(store, psi);

  const std::vector<Index> subset = subset_indices(cfg.subset_policy, scaled, d);
  GreedyChoice choice = greedy_pair(obj, x_next, scaled, subset);

  std::optional<double> beta;
  if (cfg.record_dense_diags) {
    beta = beta_tau_or_inf(dense_B_from_pairs(scaled) - dense_hessian(obj, x_next), subset);
  }

  const CaseTag tag = classify(scaled, choice.basis_index);
  CurvaturePair pair{choice.basis_index, std::move(choice.r)};
  PairStore next = [&] {
    switch (tag.variant) {
      case Case::C1: return insert_c1(std::move(scaled), std::move(pair));
      case Case::C2: return replace_c2(std::move(scaled), std::move(pair));
      case Case::C3: return aggregate_c3(scaled, tag.j, pair, cfg.aggregation);
    }
    throw InternalInconsistency("lg_bfgs_step: unknown case");
  }();
  if (cfg.check_invariants) next.check_invariants();

  LgStepResult out{LgState{state.t + 1, x_next, eval_value_grad(obj, x_next)}, std::move(next), tag, psi, beta};
  return out;
}

/// LG-BFGS from x0 (no warm start applied here).
template <Objective O>
Trace run_lg_bfgs(const O& obj, const Vector& x0, const SolverConfig& cfg) {
  const ObjectiveInfo& info = obj.info();
  const Index d = info.dim;
  detail::require_dim(x0.size(), d, "run_lg_bfgs");
  cfg.validate(d);

  Trace trace;
  trace.method = Method::lg_bfgs;
  trace.tau = cfg.tau;
  detail::Recorder rec(cfg, trace);

  PairStore store(d, cfg.tau, cfg.initial_h0(info));
  LgState state{0, x0, eval_value_grad(obj, x0)};
  std::optional<CaseTag> tag;
  std::optional<double> beta;
  for (;;) {
    IterationRecord r = detail::base_record(obj, cfg, state.t, state.x, state.vg);
    r.case_tag = tag;
    r.beta_tau = beta;
    r.pair_count = store.size();
    if (cfg.record_dense_diags) r.sigma = sigma_metric(obj, state.x, dense_B_from_pairs(store));
    if (rec.push(std::move(r), state.x)) break;

    LgStepResult step = lg_bfgs_step(obj, state, store, cfg);
    state = std::move(step.state);
    store = std::move(step.store);
    tag = step.tag;
    beta = step.beta_tau;
  }
  return trace;
}

/// The k0-th greedy-BFGS iterate from x0.
template <Objective O>
Vector warm_start(const O& obj, const Vector& x0, long k0, const CorrectionConfig& correction = {}) {
  if (k0 < 0) throw InvalidArgument("warm_start: k0 must be >= 0");
  if (k0 == 0) return x0;
  SolverConfig cfg;
  cfg.method = Method::greedy_bfgs;
  cfg.max_iters = k0;
  cfg.grad_tol = 0.0;
  cfg.correction = correction;
  cfg.check_invariants = false;
  const Trace tr = run_baseline(obj, x0, cfg);
  return tr.x_final;
}

/// Dispatches on cfg.method after the optional greedy-BFGS warm start.
template <Objective O>
Trace run_solver(const O& obj, const Vector& x0, const SolverConfig& cfg) {
  const Vector start = warm_start(obj, x0, cfg.warm_start_k0, cfg.correction);
  return cfg.method == Method::lg_bfgs ? run_lg_bfgs(obj, start, cfg) : run_baseline(obj, start, cfg);
}

}  // namespace lgbfgs
