#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "lgbfgs/error.hpp"

namespace lgbfgs {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

namespace detail {

inline void require_dim(Index got, Index want, const char* what) {
  if (got != want) {
    throw DimensionError(std::string(what) + ": expected dimension " + std::to_string(want) +
                         ", got " + std::to_string(got));
  }
}

inline void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw InvalidArgument(std::string(what) + ": non-finite entry");
}

inline void require_index(Index i, Index d, const char* what) {
  if (i < 0 || i >= d) {
    throw InvalidArgument(std::string(what) + ": basis index " + std::to_string(i) +
                          " outside [0, " + std::to_string(d) + ")");
  }
}

inline Vector unit(Index d, Index i) {
  Vector e = Vector::Zero(d);
  e(i) = 1.0;
  return e;
}

}  // namespace detail
}  // namespace lgbfgs
