// lgbfgs: batch harness.
//
//   lgbfgs run <config.json> [--parallel N] [--output FILE|-]
//   lgbfgs verify [kernels|aggregation|theory|all]
//   lgbfgs synth <kind:key=value,...> [--output FILE|-]
//
// Log level comes from LGBFGS_LOG_LEVEL (debug, info, warn, error, off).

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "lgbfgs/experiment.hpp"
#include "lgbfgs/verify.hpp"

namespace {

using namespace lgbfgs;

int code(ExitCode c) { return static_cast<int>(c); }

// "logistic:d=50,n=500" -> kind "logistic", {d: 50, n: 500}
std::pair<std::string, std::map<std::string, std::string>> parse_synth_spec(const std::string& spec) {
  const auto colon = spec.find(':');
  std::pair<std::string, std::map<std::string, std::string>> out;
  out.first = spec.substr(0, colon);
  if (colon == std::string::npos) return out;
  std::stringstream ss(spec.substr(colon + 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ExperimentError(ExitCode::bad_config, "synth: expected key=value, got '" + item + "'");
    out.second[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return out;
}

double num(const std::map<std::string, std::string>& kv, const std::string& key, double fallback) {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw ExperimentError(ExitCode::bad_config, "synth: bad value for " + key + ": '" + it->second + "'");
  }
}

void emit(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ExperimentError(ExitCode::bad_config, "cannot write " + path);
  out << text;
}

int cmd_run(const std::string& config_path, int parallel, const std::string& output) {
  ExperimentConfig cfg = load_config(config_path);
  if (parallel > 0) cfg.parallel = parallel;
  if (!output.empty()) cfg.output = output;
  const ExperimentResult res = run_experiment(cfg);
  emit(cfg.output, csv_string(res));
  for (const auto& cell : res.cells) {
    const auto& last = cell.trace.records.back();
    std::ostringstream os;
    os << cell.solver << " tau=" << cell.tau << " iters=" << last.t << " grad_norm=" << last.grad_norm;
    log::info(os.str());
  }
  return code(ExitCode::ok);
}

int cmd_verify(const std::string& scope_name) {
  const auto scope = verify::parse_scope(scope_name);
  if (!scope) throw ExperimentError(ExitCode::bad_config, "verify: unknown scope '" + scope_name + "'");
  return verify::run_suite(*scope, std::cout) ? code(ExitCode::ok) : code(ExitCode::check_failed);
}

int cmd_synth(const std::string& spec, const std::string& output) {
  const auto [kind, kv] = parse_synth_spec(spec);
  const auto seed = static_cast<std::uint64_t>(num(kv, "seed", 0));
  if (kind == "logistic") {
    LogisticSpec ls;
    ls.d = static_cast<Index>(num(kv, "d", 50));
    ls.n = static_cast<Index>(num(kv, "n", 500));
    ls.separation = num(kv, "separation", 0.0);
    ls.seed = seed;
    std::ostringstream os;
    write_libsvm(os, synth_logistic_dataset(ls));
    emit(output, os.str());
    return code(ExitCode::ok);
  }
  if (kind == "quadratic") {
    const Index d = static_cast<Index>(num(kv, "d", 10));
    const double mu = num(kv, "mu", 1.0);
    const double L = num(kv, "L", 100.0);
    const QuadraticObjective q = synth_quadratic({geometric_spectrum(d, mu, L), mu, L, num(kv, "rotate", 1) != 0, seed});
    nlohmann::json j;
    j["mu"] = mu;
    j["L"] = L;
    j["b"] = std::vector<double>(q.offset().data(), q.offset().data() + d);
    for (Index i = 0; i < d; ++i) {
      const Vector row = q.hessian().row(i);
      j["A"].push_back(std::vector<double>(row.data(), row.data() + d));
    }
    emit(output, j.dump(1) + "\n");
    return code(ExitCode::ok);
  }
  throw ExperimentError(ExitCode::bad_config, "synth: unknown kind '" + kind + "' (expected logistic or quadratic)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Limited-memory greedy BFGS benchmark harness"};
  app.require_subcommand(1);

  std::string config_path, run_output;
  int parallel = 0;
  auto* run = app.add_subcommand("run", "Run an experiment and write the trace CSV");
  run->add_option("config", config_path, "JSON experiment config")->required();
  run->add_option("--parallel", parallel, "Run up to N (solver, tau) cells concurrently")->check(CLI::PositiveNumber);
  run->add_option("-o,--output", run_output, "Override the output path ('-' for stdout)");

  std::string scope = "all";
  auto* ver = app.add_subcommand("verify", "Run the built-in invariant checks");
  ver->add_option("scope", scope, "kernels, aggregation, theory or all");

  std::string spec, synth_output = "-";
  auto* syn = app.add_subcommand("synth", "Generate a synthetic problem");
  syn->add_option("spec", spec, "logistic:d=..,n=..,separation=..,seed=.. or quadratic:d=..,mu=..,L=..,seed=..")
      ->required();
  syn->add_option("-o,--output", synth_output, "Output path ('-' for stdout)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(config_path, parallel, run_output);
    if (*ver) return cmd_verify(scope);
    if (*syn) return cmd_synth(spec, synth_output);
  } catch (const ExperimentError& e) {
    std::cerr << "lgbfgs: " << e.what() << "\n";
    return code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "lgbfgs: " << e.what() << "\n";
    return code(ExitCode::check_failed);
  }
  return code(ExitCode::bad_config);
}
