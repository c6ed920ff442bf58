#pragma once

#include "lgbfgs/correction.hpp"
#include "lgbfgs/dataset.hpp"
#include "lgbfgs/diagnostics.hpp"
#include "lgbfgs/displacement.hpp"
#include "lgbfgs/greedy.hpp"
#include "lgbfgs/kernels.hpp"
#include "lgbfgs/objective.hpp"
#include "lgbfgs/pair_store.hpp"
#include "lgbfgs/solvers.hpp"
#include "lgbfgs/synth.hpp"
