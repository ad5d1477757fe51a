#pragma once

#include "banditpde/hjb.hpp"

namespace banditpde::detail {

// Multi-arm paths (K >= 2), defined in hjb_multiarm.cpp.
Solution solve_optimal_multiarm(const ProblemSpec& problem, const GridSpec& grid,
                                const SolverOptions& options);
Solution solve_best_arm_multiarm(const ProblemSpec& problem, const GridSpec& grid,
                                 const SolverOptions& options);
BatchedSolution solve_batched_multiarm(const ProblemSpec& problem, const GridSpec& grid,
                                       const SolverOptions& options);

}  // namespace banditpde::detail
