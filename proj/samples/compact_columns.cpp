// Build a pair store by hand and read Hessian-approximation columns without forming B.
#include <iostream>

#include "lgbfgs/lgbfgs.hpp"

int main() {
  using namespace lgbfgs;
  const QuadraticObjective q = QuadraticObjective::diagonal((Vector(4) << 1, 2, 3, 4).finished());
  const Vector x = Vector::Zero(4);

  PairStore store(4, 2, 1.0 / q.info().lipschitz_L);
  store = insert_c1(store, {3, hess_column(q, x, 3)});
  store = insert_c1(store, {1, hess_column(q, x, 1)});

  const CompactB B(store);
  for (Index i = 0; i < 4; ++i) std::cout << "B e_" << i << " = " << B.column(i).transpose() << "\n";
  std::cout << "two-loop direction for g = 1: " << two_loop_direction(store, Vector::Ones(4)).transpose() << "\n";
}
