#include "banditpde/hjb.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>

#include "banditpde/errors.hpp"
#include "banditpde/parallel.hpp"
#include "hjb_internal.hpp"

namespace banditpde {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

std::string scheme_name(Scheme s) {
    switch (s) {
        case Scheme::Explicit: return "explicit";
        case Scheme::Implicit: return "implicit";
        case Scheme::Hybrid: return "hybrid";
    }
    return "?";
}

Scheme scheme_from_name(const std::string& name) {
    if (name == "explicit") return Scheme::Explicit;
    if (name == "implicit") return Scheme::Implicit;
    if (name == "hybrid") return Scheme::Hybrid;
    throw ConfigError("unknown scheme: " + name);
}

void ProblemSpec::validate() const {
    arms.validate();
    if (priors.size() != static_cast<std::size_t>(arms.arms())) {
        throw ConfigError("problem needs one prior per arm");
    }
    for (const auto& p : priors) banditpde::validate(p);
    if (const auto* d = std::get_if<DiscountedProblem>(&kind)) {
        if (!(d->beta > 0.0)) throw ConfigError("discounted problem requires beta > 0");
    }
    if (std::holds_alternative<BestArmProblem>(kind) && arms.arms() < 2) {
        throw ConfigError("best-arm identification requires K >= 2");
    }
}

PlaneCoefficients PlaneCoefficients::build(const PriorSpec& prior, double sigma,
                                           const GridSpec& grid, int threads) {
    banditpde::validate(prior);
    PlaneCoefficients c;
    c.grid = grid;
    c.grid.arms = 1;
    c.sigma2 = sigma * sigma;
    const std::int64_t n = c.grid.plane_nodes();
    c.mu.resize(n);
    c.mu_plus.resize(n);
    parallel_for(0, grid.nq, threads, [&](std::int64_t j) {
        for (int i = 0; i < grid.nx; ++i) {
            const State s{grid.x(i), grid.q(static_cast<int>(j)), 0.0};
            const PosteriorMoments m = posterior_moments(prior, sigma, s);
            const int idx = grid.plane_index(i, static_cast<int>(j));
            c.mu[idx] = m.mean;
            c.mu_plus[idx] = m.mu_plus;
        }
    });
    return c;
}

namespace detail {

double cfl_bound(const GridSpec& grid) {
    return 0.5 * std::min(grid.dx() * grid.dx(), grid.dq() * grid.dq());
}

void apply_plane_generator(const PlaneCoefficients& coeffs, std::span<const double> v,
                           std::span<double> out) {
    const GridSpec& g = coeffs.grid;
    const double inv_dx = 1.0 / g.dx();
    const double inv_dx2 = inv_dx * inv_dx;
    const double inv_dq = 1.0 / g.dq();
    const double half_sig = 0.5 * coeffs.sigma2;
    for (int j = 0; j < g.nq; ++j) {
        const bool has_q = j < g.nq - 1;
        for (int i = 0; i < g.nx; ++i) {
            const int idx = g.plane_index(i, j);
            const double vi = v[idx];
            double acc = has_q ? (v[idx + g.nx] - vi) * inv_dq : 0.0;
            const double mu = coeffs.mu[idx];
            if (mu >= 0.0) {
                if (i < g.nx - 1) acc += mu * (v[idx + 1] - vi) * inv_dx;
            } else if (i > 0) {
                acc += (-mu) * (v[idx - 1] - vi) * inv_dx;
            }
            if (i > 0 && i < g.nx - 1) {
                acc += half_sig * (v[idx + 1] + v[idx - 1] - 2.0 * vi) * inv_dx2;
            }
            out[idx] = acc;
        }
    }
}

// (alpha*I - diag(scale)*G) V = rhs via a backward sweep in q: the q
// coupling is strictly to j+1, so each q level is a tridiagonal solve in x
// given the level above. This is an exact direct solve.
void sweep_solve(const PlaneCoefficients& coeffs, std::span<const double> scale, double alpha,
                 std::span<const double> rhs, std::span<double> out) {
    const GridSpec& g = coeffs.grid;
    const int nx = g.nx;
    const double inv_dx = 1.0 / g.dx();
    const double inv_dx2 = inv_dx * inv_dx;
    const double inv_dq = 1.0 / g.dq();
    const double half_sig = 0.5 * coeffs.sigma2;

    thread_local std::vector<double> sub, diag, sup, d, work;
    sub.resize(nx);
    diag.resize(nx);
    sup.resize(nx);
    d.resize(nx);
    work.resize(nx);

    for (int j = g.nq - 1; j >= 0; --j) {
        const bool has_q = j < g.nq - 1;
        for (int i = 0; i < nx; ++i) {
            const int idx = g.plane_index(i, j);
            const double w = scale[idx];
            double g_up = 0.0, g_dn = 0.0, g_q = 0.0;
            const double mu = coeffs.mu[idx];
            if (mu >= 0.0) {
                if (i < nx - 1) g_up += mu * inv_dx;
            } else if (i > 0) {
                g_dn += -mu * inv_dx;
            }
            if (i > 0 && i < nx - 1) {
                g_up += half_sig * inv_dx2;
                g_dn += half_sig * inv_dx2;
            }
            if (has_q) g_q = inv_dq;
            sub[i] = -w * g_dn;
            sup[i] = -w * g_up;
            diag[i] = alpha + w * (g_up + g_dn + g_q);
            d[i] = rhs[idx] + (has_q ? w * g_q * out[idx + nx] : 0.0);
        }
        // Thomas; strictly diagonally dominant by construction.
        work[0] = sup[0] / diag[0];
        d[0] /= diag[0];
        for (int i = 1; i < nx; ++i) {
            const double denom = diag[i] - sub[i] * work[i - 1];
            if (denom == 0.0) throw SingularSystem("tridiagonal pivot vanished");
            work[i] = sup[i] / denom;
            d[i] = (d[i] - sub[i] * d[i - 1]) / denom;
        }
        for (int i = nx - 2; i >= 0; --i) d[i] -= work[i] * d[i + 1];
        std::memcpy(&out[g.plane_index(0, j)], d.data(), sizeof(double) * nx);
    }
}

}  // namespace detail

namespace {

// Residual of the implicit nonlinear equation
//   V - V_m - dt*(mu_plus + min{0, -mu + G[V]}) = 0.
double hjb_residual(const PlaneCoefficients& c, const ValueField& prev,
                    const std::vector<double>& v, double dt, std::vector<double>& gv) {
    detail::apply_plane_generator(c, v, gv);
    double worst = 0.0;
    for (std::size_t idx = 0; idx < v.size(); ++idx) {
        const double pull = -c.mu[idx] + gv[idx];
        const double f = v[idx] - prev.values[idx] - dt * (c.mu_plus[idx] + std::min(0.0, pull));
        worst = std::max(worst, std::fabs(f));
    }
    return worst;
}

ValueField advance_meta(const ValueField& slice, double dt) {
    ValueField next;
    next.grid = slice.grid;
    next.step = slice.step + 1;
    next.time = slice.time - dt;
    next.values.resize(slice.values.size());
    return next;
}

}  // namespace

ValueField step_implicit_howard(const ValueField& slice, const PlaneCoefficients& coeffs,
                                double dt, const SolverOptions& options, HowardStats* stats,
                                std::vector<std::uint8_t>* controls_io) {
    const std::size_t n = slice.values.size();
    ValueField next = advance_meta(slice, dt);

    thread_local std::vector<double> gv, rhs, scale, prev_iter;
    gv.resize(n);
    rhs.resize(n);
    scale.resize(n);
    prev_iter.assign(n, 0.0);

    std::vector<std::uint8_t> local;
    std::vector<std::uint8_t>* ctrl = controls_io ? controls_io : &local;
    if (ctrl->size() != n) {
        // Cold start from the explicit predictor on the previous slice.
        ctrl->resize(n);
        detail::apply_plane_generator(coeffs, slice.values, gv);
        for (std::size_t idx = 0; idx < n; ++idx) {
            (*ctrl)[idx] = (-coeffs.mu[idx] + gv[idx] <= 0.0) ? 1 : 0;
        }
    }

    int iter = 0;
    bool converged = false;
    while (iter < options.howard_max_iter) {
        ++iter;
        for (std::size_t idx = 0; idx < n; ++idx) {
            const double a = (*ctrl)[idx];
            scale[idx] = dt * a;
            rhs[idx] = slice.values[idx] + dt * (coeffs.mu_plus[idx] - a * coeffs.mu[idx]);
        }
        detail::sweep_solve(coeffs, scale, 1.0, rhs, next.values);

        detail::apply_plane_generator(coeffs, next.values, gv);
        bool control_changed = false;
        for (std::size_t idx = 0; idx < n; ++idx) {
            // Tie at zero resolves to pull, matching the non-strict
            // inequality in the optimal-policy characterization.
            const std::uint8_t a = (-coeffs.mu[idx] + gv[idx] <= 0.0) ? 1 : 0;
            if (a != (*ctrl)[idx]) {
                (*ctrl)[idx] = a;
                control_changed = true;
            }
        }
        if (!control_changed) {
            converged = true;
            break;
        }
        double change = 0.0;
        for (std::size_t idx = 0; idx < n; ++idx) {
            change = std::max(change, std::fabs(next.values[idx] - prev_iter[idx]));
        }
        if (iter > 1 && change < options.howard_tol) {
            converged = true;
            break;
        }
        prev_iter = next.values;
    }
    if (!converged) {
        throw HowardNonconvergence("Howard iteration exceeded max_iter at a time step");
    }
    if (stats) {
        stats->iterations = iter;
        stats->residual = hjb_residual(coeffs, slice, next.values, dt, gv);
    }
    return next;
}

ValueField step_hybrid(const ValueField& slice, const PlaneCoefficients& coeffs, double dt,
                       std::vector<std::uint8_t>* controls_out) {
    const std::size_t n = slice.values.size();
    ValueField next = advance_meta(slice, dt);

    thread_local std::vector<double> rhs, scale;
    rhs.resize(n);
    scale.assign(n, dt);
    for (std::size_t idx = 0; idx < n; ++idx) {
        rhs[idx] = slice.values[idx] + dt * (coeffs.mu_plus[idx] - coeffs.mu[idx]);
    }
    detail::sweep_solve(coeffs, scale, 1.0, rhs, next.values);

    if (controls_out) controls_out->resize(n);
    for (std::size_t idx = 0; idx < n; ++idx) {
        const double rest = slice.values[idx] + dt * coeffs.mu_plus[idx];
        const bool pull = next.values[idx] <= rest;
        if (!pull) next.values[idx] = rest;
        if (controls_out) (*controls_out)[idx] = pull ? 1 : 0;
    }
    return next;
}

ValueField step_explicit(const ValueField& slice, const PlaneCoefficients& coeffs, double dt,
                         std::vector<std::uint8_t>* controls_out) {
    if (dt > detail::cfl_bound(slice.grid)) {
        throw CflViolation("explicit scheme requires dt <= 0.5*min(dx^2, dq^2)");
    }
    const std::size_t n = slice.values.size();
    ValueField next = advance_meta(slice, dt);
    thread_local std::vector<double> gv;
    gv.resize(n);
    detail::apply_plane_generator(coeffs, slice.values, gv);
    if (controls_out) controls_out->resize(n);
    for (std::size_t idx = 0; idx < n; ++idx) {
        const double pull = -coeffs.mu[idx] + gv[idx];
        next.values[idx] = slice.values[idx] + dt * (coeffs.mu_plus[idx] + std::min(0.0, pull));
        if (controls_out) (*controls_out)[idx] = (pull <= 0.0) ? 1 : 0;
    }
    return next;
}

namespace {

struct SnapshotPlan {
    int stride;
    int total_steps;
    bool want(int step_done) const {
        if (step_done == total_steps) return true;
        return stride > 0 && step_done % stride == 0;
    }
};

void store_controls(ControlGrid& grid_ctrl, int slice, const std::vector<std::uint8_t>& a) {
    for (std::size_t idx = 0; idx < a.size(); ++idx) {
        grid_ctrl.set_pull(slice, static_cast<std::int64_t>(idx), a[idx] != 0);
    }
}

}  // namespace

Solution solve_optimal(const ProblemSpec& problem, const GridSpec& grid,
                       const SolverOptions& options) {
    problem.validate();
    grid.validate(true);
    if (grid.arms != problem.arms.arms()) {
        throw ConfigError("grid arm count must match the problem");
    }
    if (problem.arms.arms() > 1) {
        return detail::solve_optimal_multiarm(problem, grid, options);
    }
    const auto t0 = Clock::now();
    const PlaneCoefficients coeffs =
        PlaneCoefficients::build(problem.priors[0], problem.arms.sigma[0], grid, options.threads);

    Solution sol;
    sol.report.scheme = scheme_name(options.scheme);
    if (options.record_controls) {
        sol.controls = std::make_shared<ControlGrid>(ControlGrid::one_arm(grid, grid.nt));
    }

    ValueField v = ValueField::zero(grid);
    SnapshotPlan plan{options.snapshot_stride, grid.nt};
    sol.slices.push_back(v);

    std::vector<std::uint8_t> ctrl;
    HowardStats stats;
    for (int m = 0; m < grid.nt; ++m) {
        switch (options.scheme) {
            case Scheme::Implicit:
                v = step_implicit_howard(v, coeffs, grid.dt, options, &stats, &ctrl);
                sol.report.iterations += stats.iterations;
                sol.report.max_residual = std::max(sol.report.max_residual, stats.residual);
                break;
            case Scheme::Hybrid:
                v = step_hybrid(v, coeffs, grid.dt, &ctrl);
                sol.report.iterations += 1;
                break;
            case Scheme::Explicit:
                v = step_explicit(v, coeffs, grid.dt, &ctrl);
                sol.report.iterations += 1;
                break;
        }
        if (sol.controls) store_controls(*sol.controls, m, ctrl);
        if (plan.want(m + 1)) sol.slices.push_back(v);
    }
    sol.value_origin = sol.final_slice().at(grid.x_origin_index(), 0);
    sol.report.wall_time = seconds_since(t0);
    return sol;
}

Solution solve_policy_risk(const ProblemSpec& problem, const GridSpec& grid,
                           const SolverOptions& options) {
    problem.validate();
    grid.validate(true);
    const auto* pr = std::get_if<PolicyRisk>(&problem.kind);
    if (!pr || !pr->policy) throw ConfigError("solve_policy_risk needs a PolicyRisk problem");
    if (problem.arms.arms() != 1) {
        throw ConfigError("policy-risk PDE is implemented for one arm");
    }
    const auto t0 = Clock::now();
    const PlaneCoefficients coeffs =
        PlaneCoefficients::build(problem.priors[0], problem.arms.sigma[0], grid, options.threads);
    const std::size_t n = coeffs.mu.size();

    std::vector<double> pi(n), rhs(n), scale(n), gv(n);
    const auto eval_policy = [&](double t) {
        for (int j = 0; j < grid.nq; ++j) {
            for (int i = 0; i < grid.nx; ++i) {
                const int idx = grid.plane_index(i, j);
                pi[idx] = std::clamp(pr->policy(grid.x(i), grid.q(j), t), 0.0, 1.0);
            }
        }
    };
    if (!pr->time_dependent) eval_policy(1.0);

    if (options.scheme == Scheme::Explicit && grid.dt > detail::cfl_bound(grid)) {
        throw CflViolation("explicit scheme requires dt <= 0.5*min(dx^2, dq^2)");
    }

    Solution sol;
    sol.report.scheme = scheme_name(options.scheme);
    ValueField v = ValueField::zero(grid);
    SnapshotPlan plan{options.snapshot_stride, grid.nt};
    sol.slices.push_back(v);

    for (int m = 0; m < grid.nt; ++m) {
        if (pr->time_dependent) eval_policy(v.time - grid.dt);
        ValueField next = advance_meta(v, grid.dt);
        if (options.scheme == Scheme::Explicit) {
            detail::apply_plane_generator(coeffs, v.values, gv);
            for (std::size_t idx = 0; idx < n; ++idx) {
                next.values[idx] =
                    v.values[idx] +
                    grid.dt * (coeffs.mu_plus[idx] + pi[idx] * (-coeffs.mu[idx] + gv[idx]));
            }
        } else {
            for (std::size_t idx = 0; idx < n; ++idx) {
                scale[idx] = grid.dt * pi[idx];
                rhs[idx] = v.values[idx] +
                           grid.dt * (coeffs.mu_plus[idx] - pi[idx] * coeffs.mu[idx]);
            }
            detail::sweep_solve(coeffs, scale, 1.0, rhs, next.values);
        }
        sol.report.iterations += 1;
        v = std::move(next);
        if (plan.want(m + 1)) sol.slices.push_back(v);
    }
    sol.value_origin = sol.final_slice().at(grid.x_origin_index(), 0);
    sol.report.wall_time = seconds_since(t0);
    return sol;
}

BatchedSolution solve_batched(const ProblemSpec& problem, const GridSpec& grid,
                              const SolverOptions& options) {
    problem.validate();
    grid.validate(true);
    const auto* bp = std::get_if<BatchedProblem>(&problem.kind);
    if (!bp) throw ConfigError("solve_batched needs a Batched problem");
    const double ratio = bp->dt_batch / grid.dt;
    const int steps_per_batch = static_cast<int>(std::lround(ratio));
    if (steps_per_batch < 1 || std::fabs(ratio - steps_per_batch) > 1e-9) {
        throw ConfigError("dt_batch must be an integer multiple of dt");
    }
    if (grid.nt % steps_per_batch != 0) {
        throw ConfigError("dt_batch must divide the horizon");
    }
    if (problem.arms.arms() > 1) {
        return detail::solve_batched_multiarm(problem, grid, options);
    }
    const auto t0 = Clock::now();
    const int batches = grid.nt / steps_per_batch;
    const PlaneCoefficients coeffs =
        PlaneCoefficients::build(problem.priors[0], problem.arms.sigma[0], grid, options.threads);
    const std::size_t n = coeffs.mu.size();

    BatchedSolution sol;
    sol.report.scheme = "implicit";
    sol.table.grid = grid;
    sol.table.batch_times.resize(batches);
    sol.table.decisions.assign(batches, std::vector<std::uint8_t>(n, 0));
    for (int b = 0; b < batches; ++b) sol.table.batch_times[b] = b * bp->dt_batch;

    std::vector<double> rhs(n), scale(n, grid.dt);
    ValueField v = ValueField::zero(grid);
    sol.boundary_values.push_back(v);
    for (int k = 0; k < batches; ++k) {
        // Pull branch: march the linear PDE over one batch.
        ValueField pulled = v;
        for (int r = 0; r < steps_per_batch; ++r) {
            ValueField next = advance_meta(pulled, grid.dt);
            for (std::size_t idx = 0; idx < n; ++idx) {
                rhs[idx] = pulled.values[idx] +
                           grid.dt * (coeffs.mu_plus[idx] - coeffs.mu[idx]);
            }
            detail::sweep_solve(coeffs, scale, 1.0, rhs, next.values);
            sol.report.iterations += 1;
            pulled = std::move(next);
        }
        // Rest branch: state frozen, flow accrues exactly.
        std::vector<std::uint8_t>& dec = sol.table.decisions[batches - 1 - k];
        ValueField next = pulled;
        for (std::size_t idx = 0; idx < n; ++idx) {
            const double rest = v.values[idx] + bp->dt_batch * coeffs.mu_plus[idx];
            const bool pull = pulled.values[idx] <= rest;
            next.values[idx] = pull ? pulled.values[idx] : rest;
            dec[idx] = pull ? 1 : 0;
        }
        v = std::move(next);
        sol.boundary_values.push_back(v);
    }
    sol.value_origin = v.at(grid.x_origin_index(), 0);
    sol.report.wall_time = seconds_since(t0);
    return sol;
}

StationarySolution solve_discounted(const ProblemSpec& problem, const GridSpec& grid,
                                    const SolverOptions& options) {
    problem.validate();
    grid.validate(false);
    const auto* dp = std::get_if<DiscountedProblem>(&problem.kind);
    if (!dp) throw ConfigError("solve_discounted needs a Discounted problem");
    if (problem.arms.arms() != 1) {
        throw ConfigError("discounted solver is implemented for one arm");
    }
    // A Gaussian prior should be close to resolved at q_max.
    if (const auto* g = std::get_if<GaussianPrior>(&problem.priors[0])) {
        const double sigma = problem.arms.sigma[0];
        const double post_sd =
            1.0 / std::sqrt(grid.q_max / (sigma * sigma) + 1.0 / (g->sd * g->sd));
        if (post_sd >= 0.05 * g->sd) {
            throw ConfigError("discounted grid q_max too small: posterior sd at q_max must "
                              "fall below 0.05 * prior sd");
        }
    }
    const auto t0 = Clock::now();
    const double beta = dp->beta;
    const PlaneCoefficients coeffs =
        PlaneCoefficients::build(problem.priors[0], problem.arms.sigma[0], grid, options.threads);
    const std::size_t n = coeffs.mu.size();

    StationarySolution sol;
    sol.report.scheme = "stationary";
    sol.value = ValueField::zero(grid);
    sol.value.step = -1;
    sol.value.time = -1.0;

    std::vector<double> gv(n), rhs(n), scale(n);
    std::vector<std::uint8_t> ctrl(n);
    detail::apply_plane_generator(coeffs, sol.value.values, gv);
    for (std::size_t idx = 0; idx < n; ++idx) {
        ctrl[idx] = (-coeffs.mu[idx] + gv[idx] <= 0.0) ? 1 : 0;
    }

    double prev_sup = std::numeric_limits<double>::infinity();
    bool converged = false;
    int iter = 0;
    while (iter < options.howard_max_iter) {
        ++iter;
        for (std::size_t idx = 0; idx < n; ++idx) {
            const double a = ctrl[idx];
            scale[idx] = a;
            rhs[idx] = coeffs.mu_plus[idx] - a * coeffs.mu[idx];
        }
        std::vector<double> prev = sol.value.values;
        detail::sweep_solve(coeffs, scale, beta, rhs, sol.value.values);

        // Policy iteration on a minimization is monotone after the first
        // policy evaluation.
        double sup = 0.0;
        double rise = 0.0;
        for (std::size_t idx = 0; idx < n; ++idx) {
            sup = std::max(sup, std::fabs(sol.value.values[idx] - prev[idx]));
            if (iter > 1) rise = std::max(rise, sol.value.values[idx] - prev[idx]);
        }
        if (iter > 1 && rise > 1e-9 * (1.0 + prev_sup)) {
            throw NumericalError("discounted Howard iterate increased");
        }
        prev_sup = sup;

        detail::apply_plane_generator(coeffs, sol.value.values, gv);
        bool changed = false;
        for (std::size_t idx = 0; idx < n; ++idx) {
            const std::uint8_t a = (-coeffs.mu[idx] + gv[idx] <= 0.0) ? 1 : 0;
            if (a != ctrl[idx]) {
                ctrl[idx] = a;
                changed = true;
            }
        }
        if (!changed || sup < options.howard_tol) {
            converged = true;
            break;
        }
    }
    if (!converged) throw HowardNonconvergence("discounted Howard iteration did not settle");

    double resid = 0.0;
    detail::apply_plane_generator(coeffs, sol.value.values, gv);
    for (std::size_t idx = 0; idx < n; ++idx) {
        const double pull = -coeffs.mu[idx] + gv[idx];
        resid = std::max(resid, std::fabs(beta * sol.value.values[idx] - coeffs.mu_plus[idx] -
                                          std::min(0.0, pull)));
    }
    sol.report.iterations = iter;
    sol.report.max_residual = resid;
    if (options.record_controls) {
        sol.controls = std::make_shared<ControlGrid>(ControlGrid::one_arm(grid, 1));
        for (std::size_t idx = 0; idx < n; ++idx) {
            sol.controls->set_pull(0, static_cast<std::int64_t>(idx), ctrl[idx] != 0);
        }
    }
    sol.value_origin = sol.value.at(grid.x_origin_index(), 0);
    sol.report.wall_time = seconds_since(t0);
    return sol;
}

Solution solve_best_arm(const ProblemSpec& problem, const GridSpec& grid,
                        const SolverOptions& options) {
    problem.validate();
    grid.validate(true);
    return detail::solve_best_arm_multiarm(problem, grid, options);
}

}  // namespace banditpde
