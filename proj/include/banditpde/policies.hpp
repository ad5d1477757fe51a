#pragma once

#include <functional>
#include <memory>
#include <variant>
#include <vector>

#include "banditpde/beliefs.hpp"
#include "banditpde/grid.hpp"

namespace banditpde {

// Binary (or arm-index) decisions frozen between batch grid times.
struct PiecewiseConstantTable {
    GridSpec grid;
    std::vector<double> batch_times;               // strictly increasing, last < 1
    std::vector<std::vector<std::uint8_t>> decisions;  // one per batch, over spatial nodes

    void validate() const;
    int batch_for_time(double t) const;
};

// Policy families. OptimalFromValue reads the bang-bang controls recorded
// by a finite-horizon solve; Thompson/ApproxThompson are posterior
// probabilities; UCB is the index rule with tuning parameter delta.
struct OptimalFromValuePolicy {
    std::shared_ptr<const ControlGrid> controls;
    bool clamp = true;  // clamp out-of-grid states instead of throwing
};

struct ThompsonPolicy {
    PriorSpec prior;
    double sigma = 1.0;
};

// Same rule evaluated on the score-process state of a general parametric
// model; identical to Thompson under Gaussian rewards with Gaussian prior.
struct ApproxThompsonPolicy {
    PriorSpec prior;
    double sigma = 1.0;
};

struct UcbPolicy {
    double delta = 7.8;
    long horizon = 1000;
    // Replaces delta*ln(n) with ln(1 + j*(ln j)^2), j the current period.
    bool asymptotic_bonus = false;
};

struct PiecewiseTablePolicy {
    std::shared_ptr<const PiecewiseConstantTable> table;
    bool clamp = true;
};

struct ConstantProbPolicy {
    double p = 0.0;
};

using PolicySpec = std::variant<OptimalFromValuePolicy, ThompsonPolicy, ApproxThompsonPolicy,
                                UcbPolicy, PiecewiseTablePolicy, ConstantProbPolicy>;

void validate(const PolicySpec& policy);

// Pull probability at state s (one arm). Value- and table-based policies
// interpolate bilinearly in (x, q) at the covering time slice and
// threshold at 0.5; out-of-grid states are clamped unless clamping is
// disabled, in which case OutOfGrid is thrown.
double act(const PolicySpec& policy, const State& s);

// Arm distribution at a K-arm state; entries sum to 1.
std::vector<double> act(const PolicySpec& policy, const MultiArmState& s, const ArmModel& arms);

// Whether the policy is continuous enough for the linear risk PDE; UCB and
// bang-bang table policies are Monte-Carlo only.
bool pde_evaluable(const PolicySpec& policy);

// Adapter for the PDE solver: pi(x, q, t).
std::function<double(double, double, double)> policy_fn(const PolicySpec& policy);

// Stopping boundary f(q, t): smallest grid x at which the recorded control
// is pull. Where the control is constant in x the boundary is reported as
// -inf (always pull) or +inf (never pull).
struct StoppingBoundary {
    GridSpec grid;
    int slices = 0;
    std::vector<double> boundary;  // slices x nq, slice-major

    double at(int slice, int j) const { return boundary[static_cast<std::size_t>(slice) * grid.nq + j]; }
};

StoppingBoundary extract_stopping_boundary(const ControlGrid& controls);

// Max |delta pi| / ||delta s|| of the Thompson rule over grid edges; a
// diagnostic for the Lipschitz requirement of the policy-risk PDE.
double thompson_continuity_check(const PriorSpec& prior, double sigma, const GridSpec& grid);

}  // namespace banditpde
