#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "banditpde/errors.hpp"
#include "banditpde/hjb.hpp"
#include "banditpde/normal.hpp"
#include "banditpde/parallel.hpp"
#include "banditpde/quadrature.hpp"
#include "hjb_internal.hpp"

namespace banditpde::detail {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Per-arm posterior sampled on the (x, q) plane.
struct ArmPlane {
    bool gaussian = true;
    std::vector<double> mean;               // plane table
    std::vector<double> sd;                 // Gaussian only
    std::vector<double> atoms;              // discrete only
    std::vector<std::vector<double>> watom; // discrete: per-atom weight tables
};

struct MultiArmTables {
    GridSpec grid;
    int K = 0;
    std::int64_t plane = 0;
    std::vector<ArmPlane> arm;
    std::vector<double> sigma2;
    std::vector<double> mu_max;                  // full tensor
    std::vector<std::vector<double>> arm_mean;   // per arm, full-plane lookup copy
    std::vector<PlaneCoefficients> plane_coeffs; // per arm, for direct plane solves

    std::int64_t stride_pair(int k) const {
        std::int64_t s = 1;
        for (int a = 0; a < k; ++a) s *= plane;
        return s;
    }
};

ArmPlane build_arm_plane(const PriorSpec& prior, double sigma, const GridSpec& grid) {
    ArmPlane out;
    const std::int64_t n = grid.plane_nodes();
    if (const auto* g = std::get_if<GaussianPrior>(&prior)) {
        out.gaussian = true;
        out.mean.resize(n);
        out.sd.resize(n);
        for (int j = 0; j < grid.nq; ++j) {
            for (int i = 0; i < grid.nx; ++i) {
                const PosteriorMoments m =
                    gaussian_posterior(*g, sigma, State{grid.x(i), grid.q(j), 0.0});
                out.mean[grid.plane_index(i, j)] = m.mean;
                out.sd[grid.plane_index(i, j)] = m.sd;
            }
        }
    } else {
        const auto& d = std::get<DiscretePrior>(prior);
        out.gaussian = false;
        out.atoms = d.atom;
        out.mean.resize(n);
        out.watom.assign(d.atom.size(), std::vector<double>(n));
        for (int j = 0; j < grid.nq; ++j) {
            for (int i = 0; i < grid.nx; ++i) {
                const DiscretePosterior post =
                    discrete_posterior(d, sigma, State{grid.x(i), grid.q(j), 0.0});
                const int idx = grid.plane_index(i, j);
                out.mean[idx] = post.moments.mean;
                for (std::size_t a = 0; a < d.atom.size(); ++a) {
                    out.watom[a][idx] = post.weights[a];
                }
            }
        }
    }
    return out;
}

// E[max_k mu_k] at one tensor node; tensorized quadrature over Gaussian
// arms, enumeration over discrete arms.
double node_mu_max(const MultiArmTables& t, const GaussHermite& gh,
                   const std::vector<std::int64_t>& pair_idx, int k, double running,
                   double weight) {
    if (k == t.K) return weight * running;
    const ArmPlane& arm = t.arm[k];
    const std::int64_t p = pair_idx[k];
    double acc = 0.0;
    if (arm.gaussian) {
        const double m = arm.mean[p];
        const double s = arm.sd[p];
        for (std::size_t i = 0; i < gh.node.size(); ++i) {
            const double draw = m + s * 1.4142135623730950488 * gh.node[i];
            acc += node_mu_max(t, gh, pair_idx, k + 1, std::max(running, draw),
                               weight * gh.weight[i] * 0.5641895835477562869);
        }
    } else {
        for (std::size_t a = 0; a < arm.atoms.size(); ++a) {
            const double w = arm.watom[a][p];
            if (w == 0.0) continue;
            acc += node_mu_max(t, gh, pair_idx, k + 1, std::max(running, arm.atoms[a]),
                               weight * w);
        }
    }
    return acc;
}

MultiArmTables build_tables(const ProblemSpec& problem, const GridSpec& grid,
                            const SolverOptions& options) {
    MultiArmTables t;
    t.grid = grid;
    t.K = problem.arms.arms();
    t.plane = grid.plane_nodes();
    GridSpec plane_grid = grid;
    plane_grid.arms = 1;
    for (int k = 0; k < t.K; ++k) {
        t.arm.push_back(build_arm_plane(problem.priors[k], problem.arms.sigma[k], plane_grid));
        t.sigma2.push_back(problem.arms.sigma[k] * problem.arms.sigma[k]);
        PlaneCoefficients pc;
        pc.grid = plane_grid;
        pc.sigma2 = t.sigma2[k];
        pc.mu = t.arm[k].mean;
        pc.mu_plus.assign(t.plane, 0.0);  // sources are handled by the callers
        t.plane_coeffs.push_back(std::move(pc));
    }

    const std::int64_t nodes = grid.nodes();
    t.mu_max.resize(nodes);
    t.arm_mean.assign(t.K, std::vector<double>(nodes));
    const GaussHermite gh(options.quad_nodes);
    parallel_for(0, nodes, options.threads, [&](std::int64_t node) {
        std::vector<std::int64_t> pair_idx(t.K);
        std::int64_t rem = node;
        for (int k = 0; k < t.K; ++k) {
            pair_idx[k] = rem % t.plane;
            rem /= t.plane;
            t.arm_mean[k][node] = t.arm[k].mean[pair_idx[k]];
        }
        t.mu_max[node] =
            node_mu_max(t, gh, pair_idx, 0, -std::numeric_limits<double>::infinity(), 1.0);
    });
    return t;
}

// G_k[v] over the full tensor grid (derivatives in (x_k, q_k) only).
void apply_arm_generator(const MultiArmTables& t, int k, std::span<const double> v,
                         std::span<double> out) {
    const GridSpec& g = t.grid;
    const double inv_dx = 1.0 / g.dx();
    const double inv_dx2 = inv_dx * inv_dx;
    const double inv_dq = 1.0 / g.dq();
    const double half_sig = 0.5 * t.sigma2[k];
    const std::int64_t sp = t.stride_pair(k);
    const std::int64_t sx = sp;
    const std::int64_t sq = sp * g.nx;
    const std::int64_t nodes = g.nodes();
    for (std::int64_t node = 0; node < nodes; ++node) {
        const std::int64_t pair = (node / sp) % t.plane;
        const int i = static_cast<int>(pair % g.nx);
        const int j = static_cast<int>(pair / g.nx);
        const double vi = v[node];
        double acc = (j < g.nq - 1) ? (v[node + sq] - vi) * inv_dq : 0.0;
        const double mu = t.arm_mean[k][node];
        if (mu >= 0.0) {
            if (i < g.nx - 1) acc += mu * (v[node + sx] - vi) * inv_dx;
        } else if (i > 0) {
            acc += (-mu) * (v[node - sx] - vi) * inv_dx;
        }
        if (i > 0 && i < g.nx - 1) {
            acc += half_sig * (v[node + sx] + v[node - sx] - 2.0 * vi) * inv_dx2;
        }
        out[node] = acc;
    }
}

// Row coefficients of (I - dt*G_{a(node)}) at one node.
struct RowCoeffs {
    double diag;
    double up_x, dn_x, up_q;  // nonnegative couplings (already scaled by dt)
    std::int64_t sx, sq;
    bool has_up_x, has_dn_x, has_up_q;
};

RowCoeffs row_coeffs(const MultiArmTables& t, int k, std::int64_t node, double dt) {
    const GridSpec& g = t.grid;
    const double inv_dx = 1.0 / g.dx();
    const double inv_dx2 = inv_dx * inv_dx;
    const double inv_dq = 1.0 / g.dq();
    const std::int64_t sp = t.stride_pair(k);
    const std::int64_t pair = (node / sp) % t.plane;
    const int i = static_cast<int>(pair % g.nx);
    const int j = static_cast<int>(pair / g.nx);
    double g_up = 0.0, g_dn = 0.0, g_q = 0.0;
    const double mu = t.arm_mean[k][node];
    if (mu >= 0.0) {
        if (i < g.nx - 1) g_up += mu * inv_dx;
    } else if (i > 0) {
        g_dn += -mu * inv_dx;
    }
    if (i > 0 && i < g.nx - 1) {
        const double hs = 0.5 * t.sigma2[k] * inv_dx2;
        g_up += hs;
        g_dn += hs;
    }
    if (j < g.nq - 1) g_q = inv_dq;
    RowCoeffs r;
    r.sx = sp;
    r.sq = sp * g.nx;
    r.up_x = dt * g_up;
    r.dn_x = dt * g_dn;
    r.up_q = dt * g_q;
    r.has_up_x = i < g.nx - 1 && g_up != 0.0;
    r.has_dn_x = i > 0 && g_dn != 0.0;
    r.has_up_q = j < g.nq - 1 && g_q != 0.0;
    r.diag = 1.0 + dt * (g_up + g_dn + g_q);
    return r;
}

// Gauss-Seidel on (I - dt*G_a) V = rhs. Sweeping in descending node order
// makes the q couplings reference already-updated values (they point to
// strictly larger indices), so only the x couplings are truly iterative.
int gauss_seidel_solve(const MultiArmTables& t, const std::vector<std::uint8_t>& control,
                       std::span<const double> rhs, double dt, const SolverOptions& options,
                       std::span<double> v) {
    const std::int64_t nodes = t.grid.nodes();
    double scale = 1.0;
    for (std::int64_t n = 0; n < nodes; ++n) scale = std::max(scale, std::fabs(rhs[n]));
    const double target = options.linear_tol * scale;
    for (int sweep = 1; sweep <= options.linear_max_sweeps; ++sweep) {
        double resid = 0.0;
        for (std::int64_t node = nodes - 1; node >= 0; --node) {
            const RowCoeffs r = row_coeffs(t, control[node], node, dt);
            double off = 0.0;
            if (r.has_up_x) off += r.up_x * v[node + r.sx];
            if (r.has_dn_x) off += r.dn_x * v[node - r.sx];
            if (r.has_up_q) off += r.up_q * v[node + r.sq];
            const double next = (rhs[node] + off) / r.diag;
            resid = std::max(resid, std::fabs(next - v[node]) * r.diag);
            v[node] = next;
        }
        if (resid <= target) return sweep;
    }
    throw NumericalError("K-arm Gauss-Seidel did not reach the residual target");
}

// Direct solve of (I - dt*G_k) V = rhs for one fixed arm k: the (x_k, q_k)
// planes decouple across the other arms' coordinates.
void arm_plane_solve(const MultiArmTables& t, int k, std::span<const double> rhs, double dt,
                     std::span<double> v) {
    const GridSpec& g = t.grid;
    const std::int64_t sp = t.stride_pair(k);
    const std::int64_t nodes = g.nodes();
    const std::int64_t outer = nodes / t.plane;
    std::vector<double> plane_rhs(t.plane), plane_out(t.plane), scale(t.plane, dt);
    for (std::int64_t o = 0; o < outer; ++o) {
        // Node with pair_k == 0 for this combination of other coordinates.
        const std::int64_t base = (o / sp) * sp * t.plane + (o % sp);
        for (std::int64_t p = 0; p < t.plane; ++p) plane_rhs[p] = rhs[base + p * sp];
        sweep_solve(t.plane_coeffs[k], scale, 1.0, plane_rhs, plane_out);
        for (std::int64_t p = 0; p < t.plane; ++p) v[base + p * sp] = plane_out[p];
    }
}

struct MarchSpec {
    bool bai = false;  // best-arm: no running source, varpi terminal
};

Solution march_multiarm(const ProblemSpec& problem, const GridSpec& grid,
                        const SolverOptions& options, const MarchSpec& spec) {
    const auto t0 = Clock::now();
    const MultiArmTables tables = build_tables(problem, grid, options);
    const std::int64_t nodes = grid.nodes();
    const int K = tables.K;

    Solution sol;
    sol.report.scheme = scheme_name(options.scheme);
    if (options.record_controls) {
        sol.controls = std::make_shared<ControlGrid>(ControlGrid::multi_arm(grid, grid.nt));
    }

    ValueField v = ValueField::zero(grid);
    if (spec.bai) {
        for (std::int64_t node = 0; node < nodes; ++node) {
            double best = -std::numeric_limits<double>::infinity();
            for (int k = 0; k < K; ++k) best = std::max(best, tables.arm_mean[k][node]);
            v.values[node] = tables.mu_max[node] - best;
        }
    }
    sol.slices.push_back(v);

    // source_k = mu_max - mu_k for the exploitation problem, 0 for BAI.
    const auto source = [&](int k, std::int64_t node) {
        return spec.bai ? 0.0 : tables.mu_max[node] - tables.arm_mean[k][node];
    };

    std::vector<std::uint8_t> ctrl(nodes, 0);
    std::vector<double> rhs(nodes), gv(nodes), cand(nodes), best(nodes);
    std::vector<std::vector<double>> gk(K, std::vector<double>(nodes));

    if (options.scheme == Scheme::Explicit && grid.dt > cfl_bound(grid)) {
        throw CflViolation("explicit scheme requires dt <= 0.5*min(dx^2, dq^2)");
    }

    for (int m = 0; m < grid.nt; ++m) {
        ValueField next = v;
        next.step = v.step + 1;
        next.time = v.time - grid.dt;
        if (options.scheme == Scheme::Explicit) {
            double worst = std::numeric_limits<double>::infinity();
            for (int k = 0; k < K; ++k) apply_arm_generator(tables, k, v.values, gk[k]);
            for (std::int64_t node = 0; node < nodes; ++node) {
                double lo = std::numeric_limits<double>::infinity();
                std::uint8_t pick = 0;
                for (int k = 0; k < K; ++k) {
                    const double h = -((spec.bai) ? 0.0 : tables.arm_mean[k][node]) + gk[k][node];
                    // For BAI the Hamiltonian is just min_k L_k[V].
                    const double hk = spec.bai ? gk[k][node] : h;
                    if (hk < lo) {
                        lo = hk;
                        pick = static_cast<std::uint8_t>(k);
                    }
                }
                const double src = spec.bai ? 0.0 : tables.mu_max[node];
                next.values[node] = v.values[node] + grid.dt * (src + lo);
                ctrl[node] = pick;
                worst = std::min(worst, lo);
            }
            sol.report.iterations += 1;
        } else if (options.scheme == Scheme::Hybrid) {
            // Elementwise min over per-arm direct linear solves.
            std::fill(best.begin(), best.end(), std::numeric_limits<double>::infinity());
            for (int k = 0; k < K; ++k) {
                for (std::int64_t node = 0; node < nodes; ++node) {
                    rhs[node] = v.values[node] + grid.dt * source(k, node);
                }
                arm_plane_solve(tables, k, rhs, grid.dt, cand);
                for (std::int64_t node = 0; node < nodes; ++node) {
                    if (cand[node] < best[node]) {
                        best[node] = cand[node];
                        ctrl[node] = static_cast<std::uint8_t>(k);
                    }
                }
                sol.report.iterations += 1;
            }
            next.values = best;
        } else {
            // Implicit Howard over the arm choice.
            bool converged = false;
            std::vector<double> prev_iter = v.values;
            for (int it = 1; it <= options.howard_max_iter; ++it) {
                for (std::int64_t node = 0; node < nodes; ++node) {
                    rhs[node] = v.values[node] + grid.dt * source(ctrl[node], node);
                }
                const int sweeps =
                    gauss_seidel_solve(tables, ctrl, rhs, grid.dt, options, next.values);
                sol.report.iterations += sweeps;
                for (int k = 0; k < K; ++k) apply_arm_generator(tables, k, next.values, gk[k]);
                bool changed = false;
                for (std::int64_t node = 0; node < nodes; ++node) {
                    double lo = std::numeric_limits<double>::infinity();
                    std::uint8_t pick = ctrl[node];
                    for (int k = 0; k < K; ++k) {
                        const double hk =
                            spec.bai ? gk[k][node] : -tables.arm_mean[k][node] + gk[k][node];
                        if (hk < lo - 1e-15) {
                            lo = hk;
                            pick = static_cast<std::uint8_t>(k);
                        }
                    }
                    if (pick != ctrl[node]) {
                        ctrl[node] = pick;
                        changed = true;
                    }
                }
                double sup = 0.0;
                for (std::int64_t node = 0; node < nodes; ++node) {
                    sup = std::max(sup, std::fabs(next.values[node] - prev_iter[node]));
                }
                if (!changed || (it > 1 && sup < options.howard_tol)) {
                    converged = true;
                    break;
                }
                prev_iter = next.values;
            }
            if (!converged) {
                throw HowardNonconvergence("K-arm Howard iteration exceeded max_iter");
            }
        }
        if (sol.controls) {
            for (std::int64_t node = 0; node < nodes; ++node) {
                sol.controls->set_arm(m, node, ctrl[node]);
            }
        }
        v = std::move(next);
        if ((options.snapshot_stride > 0 && (m + 1) % options.snapshot_stride == 0) ||
            m + 1 == grid.nt) {
            sol.slices.push_back(v);
        }
    }
    const std::int64_t origin =
        [&] {
            // Node with x_k = 0, q_k = 0 for every arm.
            std::int64_t node = 0;
            for (int k = 0; k < K; ++k) {
                node += tables.stride_pair(k) *
                        static_cast<std::int64_t>(grid.plane_index(grid.x_origin_index(), 0));
            }
            return node;
        }();
    sol.value_origin = sol.final_slice().values[origin];
    sol.report.wall_time = seconds_since(t0);
    return sol;
}

}  // namespace

Solution solve_optimal_multiarm(const ProblemSpec& problem, const GridSpec& grid,
                                const SolverOptions& options) {
    return march_multiarm(problem, grid, options, MarchSpec{false});
}

Solution solve_best_arm_multiarm(const ProblemSpec& problem, const GridSpec& grid,
                                 const SolverOptions& options) {
    return march_multiarm(problem, grid, options, MarchSpec{true});
}

BatchedSolution solve_batched_multiarm(const ProblemSpec& problem, const GridSpec& grid,
                                       const SolverOptions& options) {
    const auto* bp = std::get_if<BatchedProblem>(&problem.kind);
    const int steps_per_batch = static_cast<int>(std::lround(bp->dt_batch / grid.dt));
    const int batches = grid.nt / steps_per_batch;
    const auto t0 = Clock::now();
    const MultiArmTables tables = build_tables(problem, grid, options);
    const std::int64_t nodes = grid.nodes();
    const int K = tables.K;

    BatchedSolution sol;
    sol.report.scheme = "implicit";
    sol.table.grid = grid;
    sol.table.batch_times.resize(batches);
    for (int b = 0; b < batches; ++b) sol.table.batch_times[b] = b * bp->dt_batch;
    sol.table.decisions.assign(batches, std::vector<std::uint8_t>(nodes, 0));

    ValueField v = ValueField::zero(grid);
    sol.boundary_values.push_back(v);
    std::vector<double> rhs(nodes), cand(nodes), best(nodes), running(nodes);
    for (int kbatch = 0; kbatch < batches; ++kbatch) {
        std::fill(best.begin(), best.end(), std::numeric_limits<double>::infinity());
        std::vector<std::uint8_t>& dec = sol.table.decisions[batches - 1 - kbatch];
        for (int k = 0; k < K; ++k) {
            running = v.values;
            for (int r = 0; r < steps_per_batch; ++r) {
                for (std::int64_t node = 0; node < nodes; ++node) {
                    rhs[node] = running[node] +
                                grid.dt * (tables.mu_max[node] - tables.arm_mean[k][node]);
                }
                arm_plane_solve(tables, k, rhs, grid.dt, cand);
                running = cand;
                sol.report.iterations += 1;
            }
            for (std::int64_t node = 0; node < nodes; ++node) {
                if (running[node] < best[node]) {
                    best[node] = running[node];
                    dec[node] = static_cast<std::uint8_t>(k);
                }
            }
        }
        v.values = best;
        v.step += steps_per_batch;
        v.time -= bp->dt_batch;
        sol.boundary_values.push_back(v);
    }
    std::int64_t origin = 0;
    for (int k = 0; k < K; ++k) {
        origin += tables.stride_pair(k) *
                  static_cast<std::int64_t>(grid.plane_index(grid.x_origin_index(), 0));
    }
    sol.value_origin = v.values[origin];
    sol.report.wall_time = seconds_since(t0);
    return sol;
}

}  // namespace banditpde::detail
