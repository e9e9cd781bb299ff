#pragma once

#include <cstddef>
#include <vector>

#include "switchstab/types.hpp"

namespace switchstab {

enum class RowSense { LessEqual, Equal, GreaterEqual };

/// minimize c^T x  subject to  a.row(i) x (sense_i) b_i,  0 <= x <= upper.
/// Entries of `upper` may be +infinity.
struct LpProblem {
  Matrix a;
  Vector b;
  std::vector<RowSense> sense;
  Vector c;
  Vector upper;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

const char* to_string(LpStatus s);

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  Vector x;  ///< basic solution (a vertex) when status == Optimal
  double objective = 0.0;
  std::size_t iterations = 0;
};

struct SimplexOptions {
  std::size_t max_iterations = 20000;
  double tol = 1e-9;
};

/// Two-phase bounded-variable primal simplex on a dense tableau.
///
/// Nonbasic variables sit at either bound. Entering and leaving variables are
/// chosen by Bland's rule (lowest index first), which rules out cycling and
/// makes the returned vertex deterministic.
LpResult solve_lp(const LpProblem& problem, const SimplexOptions& opts = {});

}  // namespace switchstab
