#include <gtest/gtest.h>

#include <fstream>
#include <regex>
#include <sstream>

#include "lgbfgs/experiment.hpp"
#include "lgbfgs/verify.hpp"

using namespace lgbfgs;
using nlohmann::json;

namespace {

json base_config() {
  return json::parse(R"({
    "seed": 3,
    "problem": {"kind": "synth_logistic", "d": 12, "n": 80, "mu": 1e-3, "separation": 1.0},
    "solvers": [{"name": "lbfgs", "tau": [4]}, {"name": "lg_bfgs", "tau": [4, 12]}],
    "warm_start_k0": 3,
    "max_iters": 100,
    "grad_tol": 0.0
  })");
}

ExitCode error_code(const json& j) {
  try {
    run_experiment(config_from_json(j));
  } catch (const ExperimentError& e) {
    return e.code();
  }
  return ExitCode::ok;
}

std::string error_message(const json& j) {
  try {
    run_experiment(config_from_json(j));
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

// Wall time is the last column; everything before it must be byte-stable.
std::string strip_wall_time(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#' && line.rfind("solver,", 0) != 0) line = line.substr(0, line.rfind(','));
    out += line + "\n";
  }
  return out;
}

}  // namespace

TEST(Config, RoundTrip) {
  json j = base_config();
  j["solvers"][1]["correction"] = "delta";
  j["solvers"][1]["delta0"] = 0.2;
  j["solvers"][1]["subset_policy"] = "fixed_prefix";
  const ExperimentConfig c = config_from_json(j);
  EXPECT_EQ(config_from_json(to_json(c)), c);
  EXPECT_EQ(to_json(config_from_json(to_json(c))), to_json(c));
}

TEST(Config, Defaults) {
  const ExperimentConfig c = config_from_json(base_config());
  EXPECT_EQ(c.solvers[0].subset_policy, "adaptive");
  EXPECT_EQ(c.solvers[0].correction, "off");
  EXPECT_EQ(c.parallel, 1);
}

TEST(Config, LoadsFileWithComments) {
  const std::string path = ::testing::TempDir() + "lgbfgs_cfg.json";
  std::ofstream(path) << "// sweep\n" << base_config().dump(2) << "\n";
  const ExperimentConfig c = load_config(path);
  EXPECT_EQ(c.seed, 3u);
  EXPECT_EQ(c.solvers.size(), 2u);
}

TEST(Config, Errors) {
  json j = base_config();
  j["solvers"][0]["name"] = "bfgsx";
  EXPECT_EQ(error_code(j), ExitCode::unknown_solver);
  EXPECT_NE(error_message(j).find("solvers[0].name"), std::string::npos);

  j = base_config();
  j["solvers"][1]["tau"] = json::array({4, 13});
  EXPECT_EQ(error_code(j), ExitCode::invalid_tau);
  j["solvers"][1]["tau"] = 0;
  EXPECT_EQ(error_code(j), ExitCode::invalid_tau);

  j = base_config();
  j["problem"] = {{"kind", "libsvm"}, {"path", "/nonexistent/data.svm"}, {"mu", 1e-3}};
  EXPECT_EQ(error_code(j), ExitCode::unreadable_dataset);

  j = base_config();
  j.erase("seed");
  EXPECT_EQ(error_code(j), ExitCode::bad_config);
  j = base_config();
  j["solvers"] = json::array();
  EXPECT_EQ(error_code(j), ExitCode::bad_config);
  j = base_config();
  j["max_itres"] = 5;
  EXPECT_EQ(error_code(j), ExitCode::bad_config);
  EXPECT_NE(error_message(j).find("max_itres"), std::string::npos);
}

TEST(Experiment, CsvRowCountAndHeader) {
  json j = base_config();
  j["solvers"] = json::array({{{"name", "gd"}}, {{"name", "lg_bfgs"}, {"tau", 4}}});
  const std::string csv = csv_string(run_experiment(config_from_json(j)));
  std::istringstream in(csv);
  std::string first, second;
  std::getline(in, first);
  std::getline(in, second);
  EXPECT_EQ(first, "# lgbfgs-trace schema=1");
  EXPECT_EQ(second, "solver,tau,iteration,f_gap,grad_norm,lambda_f,pair_count,case_tag,wall_time_s");
  const long lines = std::count(csv.begin(), csv.end(), '\n');
  EXPECT_GE(lines - 2, 200);
  const std::regex row(R"(^(gd|lg_bfgs),\d+,\d+,[-0-9.e+]+,[-0-9.e+]+,[-0-9.e+]*,\d+,(C1|C2|C3)?,\d+\.\d{6}$)");
  std::string line;
  while (std::getline(in, line)) EXPECT_TRUE(std::regex_match(line, row)) << line;
}

TEST(Experiment, DeterministicAndParallelInvariant) {
  json j = base_config();
  j["record_lambda_f"] = true;
  const std::string a = strip_wall_time(csv_string(run_experiment(config_from_json(j))));
  const std::string b = strip_wall_time(csv_string(run_experiment(config_from_json(j))));
  EXPECT_EQ(a, b);
  j["parallel"] = 3;
  EXPECT_EQ(strip_wall_time(csv_string(run_experiment(config_from_json(j)))), a);
}

TEST(Experiment, CellsSortedAndMemoryBounded) {
  const ExperimentResult res = run_experiment(config_from_json(base_config()));
  ASSERT_EQ(res.cells.size(), 3u);
  EXPECT_EQ(res.cells[0].solver, "lbfgs");
  EXPECT_EQ(res.cells[1].tau, 4);
  EXPECT_EQ(res.cells[2].tau, 12);
  for (const auto& cell : res.cells)
    for (const auto& r : cell.trace.records) EXPECT_LE(r.pair_count, cell.tau);
}

TEST(Experiment, QuadraticAndLibsvmProblems) {
  json j = base_config();
  j["problem"] = {{"kind", "synth_quadratic"}, {"d", 6}, {"mu", 1.0}, {"L", 10.0}};
  j["solvers"] = json::array({{{"name", "bfgs_dense"}}, {{"name", "greedy_bfgs"}}});
  const ExperimentResult q = run_experiment(config_from_json(j));
  EXPECT_EQ(q.cells.size(), 2u);

  const std::string dir = ::testing::TempDir();
  std::ofstream(dir + "lgbfgs_tiny.svm") << "+1 1:0.5 2:1\n-1 1:-1 3:0.2\n+1 2:0.3 3:1\n-1 1:0.1\n";
  j["problem"] = {{"kind", "libsvm"}, {"path", "lgbfgs_tiny.svm"}, {"mu", 1e-2}};
  const ExperimentConfig c = config_from_json(j, dir);
  const ExperimentResult l = run_experiment(c);
  EXPECT_EQ(problem_dim(build_problem(c)), 3);
  EXPECT_GT(l.cells[0].trace.records.size(), 1u);
}

TEST(Verify, KernelsPass) {
  std::ostringstream out;
  EXPECT_TRUE(verify::run_suite(verify::Scope::kernels, out));
  EXPECT_EQ(out.str().find("FAIL"), std::string::npos) << out.str();
}

TEST(Verify, InjectedSignErrorFailsKernels) {
  verify::Options broken;
  broken.inverse_update = [](const Matrix& H, const Vector& s, const Vector& r) {
    const double rho = 1.0 / s.dot(r);
    const Vector Hr = H * r;
    // + instead of − on the rank-two cross term
    return Matrix(H + rho * (s * Hr.transpose() + Hr * s.transpose()) +
                  (rho * rho * r.dot(Hr) + rho) * s * s.transpose());
  };
  std::ostringstream out;
  std::vector<verify::CheckResult> results;
  EXPECT_FALSE(verify::run_suite(verify::Scope::kernels, out, broken, &results));
  bool any_big = false;
  for (const auto& r : results)
    if (!r.passed && r.worst > 1e3 * r.tolerance) any_big = true;
  EXPECT_TRUE(any_big) << out.str();
}

TEST(Verify, ReportHasOneLinePerCheck) {
  for (verify::Scope s : {verify::Scope::kernels, verify::Scope::aggregation}) {
    std::ostringstream out;
    std::vector<verify::CheckResult> results;
    verify::run_suite(s, out, {}, &results);
    std::size_t expected = 0;
    for (const auto& reg : verify::registry())
      if (reg.scope == s) ++expected;
    const std::string text = out.str();
    EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), expected);
    EXPECT_EQ(results.size(), expected);
  }
  EXPECT_EQ(verify::parse_scope("theory"), verify::Scope::theory);
  EXPECT_FALSE(verify::parse_scope("everything").has_value());
}
