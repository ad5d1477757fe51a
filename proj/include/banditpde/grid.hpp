#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace banditpde {

// Rectangular grid over (x, q) per arm plus a uniform time grid. Node
// layout is row-major with x fastest, so x-tridiagonal blocks are
// contiguous. For K arms the spatial grid is the full tensor product of
// the per-arm (x, q) planes (K <= 3).
struct GridSpec {
    double x_min = -2.5;
    double x_max = 2.5;
    int nx = 201;  // node count in x
    double q_max = 1.0;
    int nq = 101;  // node count in q (q_min is always 0)
    int nt = 200;  // time-step count
    double dt = 1.0 / 200.0;
    int arms = 1;

    double dx() const { return (x_max - x_min) / (nx - 1); }
    double dq() const { return q_max / (nq - 1); }
    double x(int i) const { return x_min + i * dx(); }
    double q(int j) const { return j * dq(); }

    // Index of the node nearest to x = 0 (bounds are symmetric by default).
    int x_origin_index() const;

    std::int64_t plane_nodes() const { return static_cast<std::int64_t>(nx) * nq; }
    std::int64_t nodes() const;  // plane_nodes()^arms

    int plane_index(int i, int j) const { return i + nx * j; }

    // Checks the structural invariants; finite_horizon additionally
    // requires nt*dt == 1 within 1e-12.
    void validate(bool finite_horizon = true) const;

    // Paper defaults: x in ±2.5*sigma, dx = range/1000, dq = 1/500,
    // dt = 1/1000.
    static GridSpec paper(double sigma, int arms = 1);
    // Coarse preset for tests/CI: range/200, 1/100, 1/200.
    static GridSpec desk(double sigma, int arms = 1);
};

// Value function sampled on one time slice.
struct ValueField {
    GridSpec grid;
    int step = 0;       // backward march steps taken from the terminal slice
    double time = 1.0;  // original time t = 1 - step*dt (finite horizon)
    std::vector<double> values;

    static ValueField zero(const GridSpec& grid);
    double at(int i, int j) const { return values[grid.plane_index(i, j)]; }
    double& at(int i, int j) { return values[grid.plane_index(i, j)]; }
};

// First x-derivative, upwinded by the sign of the per-node drift:
// forward difference where drift >= 0, backward where drift < 0. Boundary
// nodes use the one-sided difference of the only available direction.
std::vector<double> upwind_first_x(const ValueField& field, std::span<const double> drift);

// Central second difference in x; zero at the x boundaries (the truncation
// boundary condition).
std::vector<double> second_x(const ValueField& field);

// Forward difference in q; zero at q_max (absorbing).
std::vector<double> forward_q(const ValueField& field);

// Per-node coefficients of the generator
//   G[f] = drift_q * forward_q(f) + drift_x * upwind_x(f)
//        + 0.5 * diffusion_x * second_x(f).
struct Coefficients {
    std::vector<double> drift_x;
    std::vector<double> diffusion_x;  // sigma^2, must be >= 0
    std::vector<double> drift_q;
    std::vector<double> source;  // added to the step right-hand side
};

// One linear time step in compressed-row form plus its source vector.
// theta = 1: matrix = I - dt*G, stepping  (I - dt*G) V_next = V + rhs.
// theta = 0: matrix = I + dt*G, stepping  V_next = matrix*V + rhs.
struct SparseStep {
    int n = 0;
    bool implicit = true;
    std::vector<int> row_ptr;
    std::vector<int> col;
    std::vector<double> val;
    std::vector<double> rhs_offset;

    void apply(std::span<const double> x, std::span<double> y) const;
    // Implicit: off-diagonals <= 0 and diagonal >= sum|off-diagonals| with
    // positive diagonal. Explicit: all entries >= 0 (monotone step).
    bool is_monotone(double tol = 1e-12) const;
};

// Assembles the one-step operator on a single (x, q) plane. theta must be
// 0 (explicit) or 1 (implicit); the explicit scheme throws CflViolation
// when dt > 0.5*min(dx^2, dq^2). Upwinding keeps every off-diagonal of G
// nonnegative; at an x boundary whose upwind neighbour lies outside the
// grid the drift term is dropped (constant extrapolation), which is what
// preserves the M-matrix structure there.
SparseStep assemble_generator(const GridSpec& grid, const Coefficients& coeffs, int theta,
                              double dt);

// Recorded bang-bang controls, one slice per time step, packed to one bit
// per node (one arm) or one byte per node (arm index, K >= 2).
struct ControlGrid {
    GridSpec grid;
    int slices = 0;
    std::vector<std::uint64_t> bits;    // one-arm layout
    std::vector<std::uint8_t> arm_idx;  // K-arm layout

    static ControlGrid one_arm(const GridSpec& grid, int slices);
    static ControlGrid multi_arm(const GridSpec& grid, int slices);

    bool pull(int slice, std::int64_t node) const {
        const std::int64_t b = static_cast<std::int64_t>(slice) * grid.nodes() + node;
        return (bits[b >> 6] >> (b & 63)) & 1u;
    }
    void set_pull(int slice, std::int64_t node, bool on) {
        const std::int64_t b = static_cast<std::int64_t>(slice) * grid.nodes() + node;
        if (on)
            bits[b >> 6] |= (std::uint64_t{1} << (b & 63));
        else
            bits[b >> 6] &= ~(std::uint64_t{1} << (b & 63));
    }
    std::uint8_t arm(int slice, std::int64_t node) const {
        return arm_idx[static_cast<std::int64_t>(slice) * grid.nodes() + node];
    }
    void set_arm(int slice, std::int64_t node, std::uint8_t k) {
        arm_idx[static_cast<std::int64_t>(slice) * grid.nodes() + node] = k;
    }

    // Slice whose time is nearest to t; slice s holds the control applied
    // while marching from step s to s+1, i.e. over (1-(s+1)dt, 1-s*dt].
    int slice_for_time(double t) const;
};

}  // namespace banditpde
