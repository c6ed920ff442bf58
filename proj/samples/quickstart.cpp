// Compare LG-BFGS against L-BFGS and greedy BFGS on a synthetic logistic regression.

#include <cstdio>

#include "lgbfgs/lgbfgs.hpp"

int main() {
  using namespace lgbfgs;
  const LogisticObjective obj = synth_logistic({/*d=*/30, /*n=*/400, /*mu=*/1e-3, /*separation=*/2.0, /*seed=*/1});
  const Vector x0 = warm_start(obj, Vector::Zero(30), 5);

  SolverConfig cfg;
  cfg.max_iters = 60;
  cfg.tau = 10;
  for (Method m : {Method::gd, Method::lbfgs, Method::lg_bfgs, Method::greedy_bfgs}) {
    cfg.method = m;
    const Trace tr = run_solver(obj, x0, cfg);
    int c3 = 0;
    for (const auto& r : tr.records) c3 += r.case_tag && r.case_tag->variant == Case::C3;
    std::printf("%-12s  iters %3ld  ||g|| %.3e  aggregations %d\n", method_name(m), tr.records.back().t,
                tr.records.back().grad_norm, c3);
  }
}
