#pragma once

#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "banditpde/beliefs.hpp"
#include "banditpde/grid.hpp"
#include "banditpde/policies.hpp"

namespace banditpde {

enum class Scheme { Explicit, Implicit, Hybrid };

std::string scheme_name(Scheme s);
Scheme scheme_from_name(const std::string& name);

struct SolveReport {
    std::string scheme;
    int iterations = 0;  // total Howard (or linear-solve) iterations
    double max_residual = 0.0;
    double wall_time = 0.0;  // seconds
};

struct SolverOptions {
    Scheme scheme = Scheme::Hybrid;
    double howard_tol = 1e-9;
    int howard_max_iter = 100;
    double linear_tol = 1e-10;  // K-arm Gauss-Seidel residual target
    int linear_max_sweeps = 5000;
    // Keep every snapshot_stride-th slice (plus terminal and final);
    // 0 keeps endpoints only. The full default grid has 1000 slices of
    // ~500k nodes, so callers choose how much to retain.
    int snapshot_stride = 0;
    bool record_controls = true;
    int quad_nodes = 64;  // K-arm mu_max quadrature nodes per dimension
    int threads = 1;
};

// Problem variants.
struct FiniteHorizonOptimal {};
struct PolicyRisk {
    std::function<double(double x, double q, double t)> policy;
    bool time_dependent = false;
};
struct BatchedProblem {
    double dt_batch = 0.25;  // must divide 1 and be an integer multiple of dt
};
struct DiscountedProblem {
    double beta = 0.5;  // > 0
};
struct BestArmProblem {};

struct ProblemSpec {
    std::variant<FiniteHorizonOptimal, PolicyRisk, BatchedProblem, DiscountedProblem,
                 BestArmProblem>
        kind;
    std::vector<PriorSpec> priors;  // one per arm
    ArmModel arms;

    void validate() const;
};

// Posterior moment tables over one (x, q) plane; the PDE coefficients are
// time independent, so they are built once per solve.
struct PlaneCoefficients {
    GridSpec grid;  // one-arm geometry
    std::vector<double> mu;
    std::vector<double> mu_plus;
    double sigma2 = 1.0;

    static PlaneCoefficients build(const PriorSpec& prior, double sigma, const GridSpec& grid,
                                   int threads = 1);
};

struct HowardStats {
    int iterations = 0;
    double residual = 0.0;
};

// One backward step of the nonlinear HJB: alternate a sparse solve at
// fixed pull/no-pull control with a pointwise control update until the
// control set is unchanged or the value moves less than howard_tol.
ValueField step_implicit_howard(const ValueField& slice, const PlaneCoefficients& coeffs,
                                double dt, const SolverOptions& options = {},
                                HowardStats* stats = nullptr,
                                std::vector<std::uint8_t>* controls_io = nullptr);

// Algorithm-2 step: one implicit solve of the pull branch, the frozen
// branch added in closed form, elementwise min.
ValueField step_hybrid(const ValueField& slice, const PlaneCoefficients& coeffs, double dt,
                       std::vector<std::uint8_t>* controls_out = nullptr);

// Fully explicit step; throws CflViolation if dt violates the bound.
ValueField step_explicit(const ValueField& slice, const PlaneCoefficients& coeffs, double dt,
                         std::vector<std::uint8_t>* controls_out = nullptr);

struct Solution {
    std::vector<ValueField> slices;  // per snapshot policy; last entry is t=0
    std::shared_ptr<ControlGrid> controls;
    SolveReport report;
    double value_origin = 0.0;  // V at s0 = (0, 0, 0)

    const ValueField& final_slice() const { return slices.back(); }
};

// Minimal-risk HJB (one arm), or the K-arm version with the mu_max source
// when the problem has several arms.
Solution solve_optimal(const ProblemSpec& problem, const GridSpec& grid,
                       const SolverOptions& options = {});

// Linear PDE for the risk of a given policy; no Howard iteration.
Solution solve_policy_risk(const ProblemSpec& problem, const GridSpec& grid,
                           const SolverOptions& options = {});

struct BatchedSolution {
    PiecewiseConstantTable table;
    std::vector<ValueField> boundary_values;  // value at each batch boundary
    SolveReport report;
    double value_origin = 0.0;
};

// Piecewise-constant (batched) recursion; one arm uses the pull/rest form,
// K arms the elementwise min over per-arm linear PDE solves.
BatchedSolution solve_batched(const ProblemSpec& problem, const GridSpec& grid,
                              const SolverOptions& options = {});

struct StationarySolution {
    ValueField value;
    std::shared_ptr<ControlGrid> controls;  // single slice
    SolveReport report;
    double value_origin = 0.0;
};

// Stationary discounted HJB, solved by Howard iteration on the full
// spatial grid; no time loop. grid.nt is ignored.
StationarySolution solve_discounted(const ProblemSpec& problem, const GridSpec& grid,
                                    const SolverOptions& options = {});

// Best-arm-identification PDE: terminal value mu_max - max_k mu_k, interior
// equation d_t V + min_k L_k[V] = 0.
Solution solve_best_arm(const ProblemSpec& problem, const GridSpec& grid,
                        const SolverOptions& options = {});

// Internal helpers shared with the multi-arm translation unit and tests.
namespace detail {

// y = G[v] with the plane coefficients (upwind drift, forward q, central
// second difference, boundary conventions as in assemble_generator).
void apply_plane_generator(const PlaneCoefficients& coeffs, std::span<const double> v,
                           std::span<double> out);

// Solves (alpha*I - scale(node)*G) V = rhs by one backward sweep in q with
// a tridiagonal solve per q-level (the q coupling is strictly forward).
void sweep_solve(const PlaneCoefficients& coeffs, std::span<const double> scale, double alpha,
                 std::span<const double> rhs, std::span<double> out);

double cfl_bound(const GridSpec& grid);

}  // namespace detail

}  // namespace banditpde
