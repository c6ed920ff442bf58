#pragma once

// Experiment configuration (JSON), sweep execution and the trace CSV.
//
// Config keys:
//   seed            integer, required
//   problem         {"kind": "synth_logistic", "d", "n", "mu", "separation"}
//                   {"kind": "synth_quadratic", "d", "mu", "L", "rotate"} or with "spectrum": [...]
//                   {"kind": "libsvm", "path", "mu", "normalize", "bias", "n_features"}
//   solvers         [{"name", "tau": int or [int], "correction", "delta0", "q",
//                     "subset_policy", "alpha", "aggregation", "lbfgs_h0"}], non-empty
//   warm_start_k0   greedy-BFGS iterations before any solver starts (default 0)
//   max_iters, grad_tol, record_lambda_f, output, parallel
//
// A relative libsvm path is resolved against the directory of the config file.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "json.hpp"
#include "lgbfgs/dataset.hpp"
#include "lgbfgs/solvers.hpp"
#include "lgbfgs/synth.hpp"

namespace lgbfgs {

inline constexpr int kCsvSchemaVersion = 1;

/// Process exit codes of the bench harness.
enum class ExitCode : int {
  ok = 0,
  check_failed = 1,
  unknown_solver = 2,
  unreadable_dataset = 3,
  invalid_tau = 4,
  bad_config = 5,
};

class ExperimentError : public Error {
 public:
  ExperimentError(ExitCode code, const std::string& what) : Error(what), code_(code) {}
  ExitCode code() const { return code_; }

 private:
  ExitCode code_;
};

struct ProblemSpec {
  std::string kind = "synth_logistic";  // synth_logistic | synth_quadratic | libsvm
  Index d = 50;
  Index n = 500;
  double mu = 1e-4;
  double L = 1.0;
  double separation = 0.0;
  bool rotate = true;
  std::vector<double> spectrum;
  std::string path;
  bool normalize = true;
  bool bias = false;
  Index n_features = 0;  // 0: inferred

  bool operator==(const ProblemSpec&) const = default;
};

struct SolverSpec {
  std::string name;
  std::vector<Index> taus;  // empty for methods without memory
  std::string correction = "off";
  double delta0 = 0.0;
  double q = 0.5;
  std::string subset_policy = "adaptive";
  double alpha = -1.0;
  std::string aggregation = "closed_form";
  std::string lbfgs_h0 = "fixed";

  bool operator==(const SolverSpec&) const = default;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  ProblemSpec problem;
  std::vector<SolverSpec> solvers;
  long warm_start_k0 = 0;
  long max_iters = 100;
  double grad_tol = 1e-12;
  bool record_lambda_f = false;
  std::string output = "trace.csv";
  int parallel = 1;
  std::filesystem::path base_dir;  // not serialized

  bool operator==(const ExperimentConfig& o) const {
    return seed == o.seed && problem == o.problem && solvers == o.solvers && warm_start_k0 == o.warm_start_k0 &&
           max_iters == o.max_iters && grad_tol == o.grad_tol && record_lambda_f == o.record_lambda_f &&
           output == o.output && parallel == o.parallel;
  }
};

namespace detail {

using json = nlohmann::json;

[[noreturn]] inline void config_error(const std::string& field, const std::string& msg,
                                      ExitCode code = ExitCode::bad_config) {
  throw ExperimentError(code, field + ": " + msg);
}

template <class T>
T get_or(const json& j, const char* key, const std::string& where, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    config_error(where + "." + key, e.what());
  }
}

inline void reject_unknown_keys(const json& j, const std::vector<std::string>& known, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) config_error(where + "." + it.key(), "unknown key");
  }
}

}  // namespace detail

inline nlohmann::json to_json(const ExperimentConfig& c) {
  using detail::json;
  json p;
  p["kind"] = c.problem.kind;
  p["mu"] = c.problem.mu;
  if (c.problem.kind == "libsvm") {
    p["path"] = c.problem.path;
    p["normalize"] = c.problem.normalize;
    p["bias"] = c.problem.bias;
    if (c.problem.n_features > 0) p["n_features"] = c.problem.n_features;
  } else if (c.problem.kind == "synth_logistic") {
    p["d"] = c.problem.d;
    p["n"] = c.problem.n;
    p["separation"] = c.problem.separation;
  } else {
    p["L"] = c.problem.L;
    p["rotate"] = c.problem.rotate;
    if (c.problem.spectrum.empty()) p["d"] = c.problem.d;
    else p["spectrum"] = c.problem.spectrum;
  }
  json solvers = json::array();
  for (const auto& s : c.solvers) {
    json js{{"name", s.name},         {"correction", s.correction}, {"subset_policy", s.subset_policy},
            {"aggregation", s.aggregation}, {"lbfgs_h0", s.lbfgs_h0}};
    if (!s.taus.empty()) js["tau"] = s.taus;
    if (s.alpha > 0.0) js["alpha"] = s.alpha;
    if (s.correction == "delta") {
      js["delta0"] = s.delta0;
      js["q"] = s.q;
    }
    solvers.push_back(js);
  }
  return json{{"seed", c.seed},
              {"problem", p},
              {"solvers", solvers},
              {"warm_start_k0", c.warm_start_k0},
              {"max_iters", c.max_iters},
              {"grad_tol", c.grad_tol},
              {"record_lambda_f", c.record_lambda_f},
              {"output", c.output},
              {"parallel", c.parallel}};
}

inline ExperimentConfig config_from_json(const nlohmann::json& j, std::filesystem::path base_dir = {}) {
  using detail::config_error;
  using detail::get_or;
  if (!j.is_object()) config_error("config", "top level must be an object");
  detail::reject_unknown_keys(j, {"seed", "problem", "solvers", "warm_start_k0", "max_iters", "grad_tol",
                                  "record_lambda_f", "output", "parallel"},
                              "config");
  ExperimentConfig c;
  c.base_dir = std::move(base_dir);
  if (!j.contains("seed")) config_error("seed", "required");
  c.seed = get_or<std::uint64_t>(j, "seed", "config", 0);
  c.warm_start_k0 = get_or<long>(j, "warm_start_k0", "config", 0);
  c.max_iters = get_or<long>(j, "max_iters", "config", 100);
  c.grad_tol = get_or<double>(j, "grad_tol", "config", 1e-12);
  c.record_lambda_f = get_or<bool>(j, "record_lambda_f", "config", false);
  c.output = get_or<std::string>(j, "output", "config", "trace.csv");
  c.parallel = get_or<int>(j, "parallel", "config", 1);
  if (c.warm_start_k0 < 0) config_error("warm_start_k0", "must be >= 0");
  if (c.max_iters < 0) config_error("max_iters", "must be >= 0");
  if (c.parallel < 1) config_error("parallel", "must be >= 1");

  if (!j.contains("problem") || !j["problem"].is_object()) config_error("problem", "required object");
  const auto& jp = j["problem"];
  detail::reject_unknown_keys(jp, {"kind", "d", "n", "mu", "L", "separation", "rotate", "spectrum", "path",
                                   "normalize", "bias", "n_features"},
                              "problem");
  ProblemSpec& p = c.problem;
  p.kind = get_or<std::string>(jp, "kind", "problem", "");
  p.mu = get_or<double>(jp, "mu", "problem", p.mu);
  if (!(p.mu > 0.0)) config_error("problem.mu", "must be positive");
  if (p.kind == "synth_logistic") {
    p.d = get_or<Index>(jp, "d", "problem", p.d);
    p.n = get_or<Index>(jp, "n", "problem", p.n);
    p.separation = get_or<double>(jp, "separation", "problem", p.separation);
  } else if (p.kind == "synth_quadratic") {
    p.L = get_or<double>(jp, "L", "problem", p.L);
    p.rotate = get_or<bool>(jp, "rotate", "problem", p.rotate);
    p.spectrum = get_or<std::vector<double>>(jp, "spectrum", "problem", {});
    p.d = p.spectrum.empty() ? get_or<Index>(jp, "d", "problem", 10) : static_cast<Index>(p.spectrum.size());
    if (!(p.L >= p.mu)) config_error("problem.L", "must be >= mu");
  } else if (p.kind == "libsvm") {
    p.path = get_or<std::string>(jp, "path", "problem", "");
    if (p.path.empty()) config_error("problem.path", "required for libsvm problems");
    p.normalize = get_or<bool>(jp, "normalize", "problem", true);
    p.bias = get_or<bool>(jp, "bias", "problem", false);
    p.n_features = get_or<Index>(jp, "n_features", "problem", 0);
  } else {
    config_error("problem.kind", "expected synth_logistic, synth_quadratic or libsvm, got '" + p.kind + "'");
  }
  if (p.kind != "libsvm" && (p.d <= 0 || p.n <= 0)) config_error("problem.d", "dimensions must be positive");

  if (!j.contains("solvers") || !j["solvers"].is_array() || j["solvers"].empty()) {
    config_error("solvers", "at least one solver required");
  }
  for (std::size_t k = 0; k < j["solvers"].size(); ++k) {
    const auto& js = j["solvers"][k];
    const std::string where = "solvers[" + std::to_string(k) + "]";
    if (!js.is_object()) config_error(where, "must be an object");
    detail::reject_unknown_keys(js, {"name", "tau", "correction", "delta0", "q", "subset_policy", "alpha",
                                     "aggregation", "lbfgs_h0"},
                                where);
    SolverSpec s;
    s.name = get_or<std::string>(js, "name", where, "");
    if (!parse_method(s.name)) {
      config_error(where + ".name", "unknown solver '" + s.name + "'", ExitCode::unknown_solver);
    }
    if (js.contains("tau")) {
      const auto& jt = js["tau"];
      try {
        if (jt.is_array()) s.taus = jt.get<std::vector<Index>>();
        else s.taus = {jt.get<Index>()};
      } catch (const nlohmann::json::exception& e) {
        config_error(where + ".tau", e.what(), ExitCode::invalid_tau);
      }
    }
    s.correction = get_or<std::string>(js, "correction", where, s.correction);
    s.delta0 = get_or<double>(js, "delta0", where, s.delta0);
    s.q = get_or<double>(js, "q", where, s.q);
    s.subset_policy = get_or<std::string>(js, "subset_policy", where, s.subset_policy);
    s.alpha = get_or<double>(js, "alpha", where, s.alpha);
    s.aggregation = get_or<std::string>(js, "aggregation", where, s.aggregation);
    s.lbfgs_h0 = get_or<std::string>(js, "lbfgs_h0", where, s.lbfgs_h0);
    if (s.correction != "off" && s.correction != "basic" && s.correction != "delta") {
      config_error(where + ".correction", "expected off, basic or delta");
    }
    if (s.subset_policy != "fixed_prefix" && s.subset_policy != "adaptive") {
      config_error(where + ".subset_policy", "expected fixed_prefix or adaptive");
    }
    if (s.aggregation != "closed_form" && s.aggregation != "oracle_fit" && s.aggregation != "coordinate") {
      config_error(where + ".aggregation", "expected closed_form, oracle_fit or coordinate");
    }
    if (s.lbfgs_h0 != "fixed" && s.lbfgs_h0 != "barzilai_borwein") {
      config_error(where + ".lbfgs_h0", "expected fixed or barzilai_borwein");
    }
    if (js.contains("alpha") && !(s.alpha > 0.0)) config_error(where + ".alpha", "must be positive");
    c.solvers.push_back(std::move(s));
  }
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ExperimentError(ExitCode::bad_config, "config: cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::exception& e) {
    throw ExperimentError(ExitCode::bad_config, std::string("config: ") + e.what());
  }
  return config_from_json(j, path.parent_path());
}

using ProblemObjective = std::variant<QuadraticObjective, LogisticObjective>;

inline ProblemObjective build_problem(const ExperimentConfig& c) {
  const ProblemSpec& p = c.problem;
  if (p.kind == "synth_quadratic") {
    QuadraticSpec q;
    q.spectrum = p.spectrum.empty() ? geometric_spectrum(p.d, p.mu, p.L)
                                    : Eigen::Map<const Vector>(p.spectrum.data(), static_cast<Index>(p.spectrum.size()));
    q.mu = p.mu;
    q.L = p.L;
    q.rotate = p.rotate;
    q.seed = c.seed;
    try {
      return synth_quadratic(q);
    } catch (const InvalidArgument& e) {
      throw ExperimentError(ExitCode::bad_config, std::string("problem.spectrum: ") + e.what());
    }
  }
  if (p.kind == "synth_logistic") return synth_logistic({p.d, p.n, p.mu, p.separation, c.seed});

  std::filesystem::path path(p.path);
  if (path.is_relative() && !c.base_dir.empty()) path = c.base_dir / path;
  Dataset ds;
  try {
    ds = read_libsvm_file(path.string(), p.n_features > 0 ? std::optional<Index>(p.n_features) : std::nullopt);
  } catch (const Error& e) {
    throw ExperimentError(ExitCode::unreadable_dataset, "problem.path: " + std::string(e.what()));
  }
  if (p.bias) ds = append_bias(std::move(ds));
  if (p.normalize) ds = normalize_rows(std::move(ds));
  return LogisticObjective(ds, p.mu);
}

inline Index problem_dim(const ProblemObjective& obj) {
  return std::visit([](const auto& o) { return o.info().dim; }, obj);
}

/// One (solver, τ) cell of a sweep.
struct Cell {
  std::string solver;
  Index tau = 0;
  SolverConfig cfg;
};

inline std::vector<Cell> expand_cells(const ExperimentConfig& c, Index d) {
  std::vector<Cell> cells;
  for (std::size_t k = 0; k < c.solvers.size(); ++k) {
    const SolverSpec& s = c.solvers[k];
    const std::string where = "solvers[" + std::to_string(k) + "].tau";
    SolverConfig base;
    base.method = *parse_method(s.name);
    base.alpha = s.alpha;
    base.max_iters = c.max_iters;
    base.grad_tol = c.grad_tol;
    base.record_dense_diags = c.record_lambda_f;
    base.correction.mode = s.correction == "basic"   ? CorrectionMode::basic
                           : s.correction == "delta" ? CorrectionMode::delta
                                                     : CorrectionMode::off;
    base.correction.delta0 = s.delta0;
    base.correction.q = s.q;
    base.subset_policy = s.subset_policy == "adaptive" ? SubsetPolicy::adaptive : SubsetPolicy::fixed_prefix;
    base.aggregation = s.aggregation == "oracle_fit"   ? AggregationMethod::oracle_fit
                       : s.aggregation == "coordinate" ? AggregationMethod::coordinate
                                                       : AggregationMethod::closed_form;
    base.lbfgs_h0 = s.lbfgs_h0 == "barzilai_borwein" ? LbfgsH0::barzilai_borwein : LbfgsH0::fixed;
    try {
      base.correction.validate();
    } catch (const InvalidArgument& e) {
      throw ExperimentError(ExitCode::bad_config, "solvers[" + std::to_string(k) + "].correction: " + e.what());
    }
    const bool needs_tau = base.method == Method::lbfgs || base.method == Method::lg_bfgs;
    if (!needs_tau) {
      cells.push_back({s.name, 0, base});
      continue;
    }
    if (s.taus.empty()) throw ExperimentError(ExitCode::invalid_tau, where + ": required for " + s.name);
    for (Index tau : s.taus) {
      if (tau < 1) throw ExperimentError(ExitCode::invalid_tau, where + ": must be positive, got " + std::to_string(tau));
      if (base.method == Method::lg_bfgs && tau > d) {
        throw ExperimentError(ExitCode::invalid_tau,
                              where + ": " + std::to_string(tau) + " exceeds the dimension " + std::to_string(d));
      }
      Cell cell{s.name, tau, base};
      cell.cfg.tau = tau;
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

struct CellResult {
  std::string solver;
  Index tau = 0;
  Trace trace;
};

struct ExperimentResult {
  std::vector<CellResult> cells;  // sorted by (solver, tau)
  double f_best = 0.0;
};

/// Runs every cell from the shared warm-started point x = warm_start(0, k0). Cells may run
/// concurrently; results are ordered by (solver, tau) regardless of completion order.
inline ExperimentResult run_experiment(const ExperimentConfig& c) {
  const ProblemObjective obj = build_problem(c);
  const Index d = problem_dim(obj);
  std::vector<Cell> cells = expand_cells(c, d);
  std::stable_sort(cells.begin(), cells.end(),
                   [](const Cell& a, const Cell& b) { return std::tie(a.solver, a.tau) < std::tie(b.solver, b.tau); });

  const Vector x0 = std::visit([&](const auto& o) { return warm_start(o, Vector::Zero(d), c.warm_start_k0); }, obj);

  ExperimentResult res;
  res.cells.resize(cells.size());
  std::vector<std::string> errors(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < cells.size(); k = next++) {
      try {
        res.cells[k] = {cells[k].solver, cells[k].tau,
                        std::visit([&](const auto& o) { return run_solver(o, x0, cells[k].cfg); }, obj)};
      } catch (const std::exception& e) {
        errors[k] = cells[k].solver + " tau=" + std::to_string(cells[k].tau) + ": " + e.what();
      }
    }
  };
  const int workers = std::max(1, std::min<int>(c.parallel, static_cast<int>(cells.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (!e.empty()) throw Error("run_experiment: " + e);

  res.f_best = std::numeric_limits<double>::infinity();
  for (const auto& cell : res.cells)
    for (const auto& r : cell.trace.records)
      if (std::isfinite(r.f_value)) res.f_best = std::min(res.f_best, r.f_value);
  return res;
}

namespace detail {
inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace detail

/// Columns: solver,tau,iteration,f_gap,grad_norm,lambda_f,pair_count,case_tag,wall_time_s.
/// Empty lambda_f / case_tag fields mean "not recorded". wall_time_s is the only
/// non-deterministic column.
inline void write_csv(std::ostream& out, const ExperimentResult& res) {
  out << "# lgbfgs-trace schema=" << kCsvSchemaVersion << "\n";
  out << "solver,tau,iteration,f_gap,grad_norm,lambda_f,pair_count,case_tag,wall_time_s\n";
  for (const auto& cell : res.cells) {
    for (const auto& r : cell.trace.records) {
      out << cell.solver << ',' << cell.tau << ',' << r.t << ',' << detail::fmt_double(r.f_value - res.f_best) << ','
          << detail::fmt_double(r.grad_norm) << ',' << (r.lambda_f ? detail::fmt_double(*r.lambda_f) : "") << ','
          << r.pair_count << ',' << (r.case_tag ? r.case_tag->name() : "") << ',';
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.6f", r.wall_time_s);
      out << buf << '\n';
    }
  }
}

inline std::string csv_string(const ExperimentResult& res) {
  std::ostringstream os;
  write_csv(os, res);
  return os.str();
}

}  // namespace lgbfgs
