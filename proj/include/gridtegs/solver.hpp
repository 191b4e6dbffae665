#pragma once

#include "gridtegs/lp.hpp"

namespace gridtegs {

// Tolerances are relative to the problem's data norms. `Infeasible` and
// `Unbounded` are returned only together with a verified Farkas-type
// certificate; exhausting the iteration budget yields IterationLimit,
// which callers must treat as inconclusive.
struct SolveOptions {
    double feas_tol = 1e-7;
    double opt_tol = 1e-7;
    int max_iterations = 200;
    // Consecutive non-improving iterations tolerated before the solver
    // gives up with IterationLimit.
    int stall_iterations = 20;
    // Post-solve equality repair: pins near-bound variables to their
    // bounds and redistributes the residual over the remaining ones.
    // Reduces row residuals to near machine precision on typical
    // non-degenerate instances; silently skipped when it would move the
    // point off the optimal face.
    bool polish = true;
};

// Solve min c'x subject to the program's rows and bounds with a
// primal-dual interior-point method on the homogeneous self-dual
// embedding. Pure function of its inputs; deterministic.
LpSolution solve(const LinearProgram& lp, const SolveOptions& options = {});

}  // namespace gridtegs
