#include "banditpde/grid.hpp"

#include <algorithm>
#include <cmath>

#include "banditpde/errors.hpp"

namespace banditpde {

int GridSpec::x_origin_index() const {
    const double pos = (0.0 - x_min) / dx();
    const int i = static_cast<int>(std::lround(pos));
    return std::clamp(i, 0, nx - 1);
}

std::int64_t GridSpec::nodes() const {
    std::int64_t n = 1;
    for (int k = 0; k < arms; ++k) n *= plane_nodes();
    return n;
}

void GridSpec::validate(bool finite_horizon) const {
    if (!(x_max > x_min)) throw ConfigError("grid: x_max must exceed x_min");
    if (nx < 3) throw ConfigError("grid: nx must be at least 3");
    if (nq < 2) throw ConfigError("grid: nq must be at least 2");
    if (!(q_max > 0.0)) throw ConfigError("grid: q_max must be positive");
    if (!(dt > 0.0)) throw ConfigError("grid: dt must be positive");
    if (arms < 1 || arms > 3) throw ConfigError("grid: arm count must be in 1..3");
    if (finite_horizon) {
        if (nt < 1) throw ConfigError("grid: nt must be at least 1");
        if (std::fabs(nt * dt - 1.0) > 1e-12) {
            throw ConfigError("grid: finite horizon requires nt*dt == 1");
        }
    }
}

GridSpec GridSpec::paper(double sigma, int arms) {
    GridSpec g;
    g.x_min = -2.5 * sigma;
    g.x_max = 2.5 * sigma;
    g.nx = 1001;
    g.q_max = 1.0;
    g.nq = 501;
    g.nt = 1000;
    g.dt = 1.0 / 1000.0;
    g.arms = arms;
    return g;
}

GridSpec GridSpec::desk(double sigma, int arms) {
    GridSpec g;
    g.x_min = -2.5 * sigma;
    g.x_max = 2.5 * sigma;
    g.nx = 201;
    g.q_max = 1.0;
    g.nq = 101;
    g.nt = 200;
    g.dt = 1.0 / 200.0;
    g.arms = arms;
    return g;
}

ValueField ValueField::zero(const GridSpec& grid) {
    ValueField f;
    f.grid = grid;
    f.step = 0;
    f.time = 1.0;
    f.values.assign(static_cast<std::size_t>(grid.nodes()), 0.0);
    return f;
}

std::vector<double> upwind_first_x(const ValueField& field, std::span<const double> drift) {
    const GridSpec& g = field.grid;
    const double inv_dx = 1.0 / g.dx();
    std::vector<double> out(field.values.size(), 0.0);
    for (int j = 0; j < g.nq; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const int idx = g.plane_index(i, j);
            const bool forward = drift[idx] >= 0.0;
            if (i == 0 || (forward && i < g.nx - 1)) {
                out[idx] = (field.values[idx + 1] - field.values[idx]) * inv_dx;
            } else {
                out[idx] = (field.values[idx] - field.values[idx - 1]) * inv_dx;
            }
        }
    }
    return out;
}

std::vector<double> second_x(const ValueField& field) {
    const GridSpec& g = field.grid;
    const double inv_dx2 = 1.0 / (g.dx() * g.dx());
    std::vector<double> out(field.values.size(), 0.0);
    for (int j = 0; j < g.nq; ++j) {
        for (int i = 1; i < g.nx - 1; ++i) {
            const int idx = g.plane_index(i, j);
            out[idx] =
                (field.values[idx + 1] + field.values[idx - 1] - 2.0 * field.values[idx]) *
                inv_dx2;
        }
    }
    return out;
}

std::vector<double> forward_q(const ValueField& field) {
    const GridSpec& g = field.grid;
    const double inv_dq = 1.0 / g.dq();
    std::vector<double> out(field.values.size(), 0.0);
    for (int j = 0; j < g.nq - 1; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const int idx = g.plane_index(i, j);
            out[idx] = (field.values[idx + g.nx] - field.values[idx]) * inv_dq;
        }
    }
    return out;
}

void SparseStep::apply(std::span<const double> x, std::span<double> y) const {
    for (int r = 0; r < n; ++r) {
        double acc = 0.0;
        for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k) acc += val[k] * x[col[k]];
        y[r] = acc;
    }
}

bool SparseStep::is_monotone(double tol) const {
    for (int r = 0; r < n; ++r) {
        double diag = 0.0;
        double off_sum = 0.0;
        for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
            if (col[k] == r) {
                diag = val[k];
            } else {
                if (implicit && val[k] > tol) return false;
                if (!implicit && val[k] < -tol) return false;
                off_sum += std::fabs(val[k]);
            }
        }
        if (implicit && !(diag > 0.0 && diag + tol >= off_sum)) return false;
        if (!implicit && diag < -tol) return false;
    }
    return true;
}

SparseStep assemble_generator(const GridSpec& grid, const Coefficients& coeffs, int theta,
                              double dt) {
    grid.validate(false);
    if (grid.arms != 1) throw ConfigError("assemble_generator covers one (x,q) plane");
    if (theta != 0 && theta != 1) throw ConfigError("theta must be 0 (explicit) or 1 (implicit)");
    const int n = static_cast<int>(grid.plane_nodes());
    const auto need = [&](const std::vector<double>& v, const char* name) {
        if (static_cast<int>(v.size()) != n) {
            throw ConfigError(std::string("coefficient field size mismatch: ") + name);
        }
    };
    need(coeffs.drift_x, "drift_x");
    need(coeffs.diffusion_x, "diffusion_x");
    need(coeffs.drift_q, "drift_q");
    for (double d : coeffs.diffusion_x) {
        if (d < 0.0) throw ConfigError("diffusion_x must be nonnegative");
    }
    if (theta == 0) {
        const double bound = 0.5 * std::min(grid.dx() * grid.dx(), grid.dq() * grid.dq());
        if (dt > bound) {
            throw CflViolation("explicit scheme requires dt <= 0.5*min(dx^2, dq^2)");
        }
    }

    const double inv_dx = 1.0 / grid.dx();
    const double inv_dx2 = inv_dx * inv_dx;
    const double inv_dq = 1.0 / grid.dq();
    // Sign with which dt*G enters the matrix.
    const double sgn = (theta == 1) ? -1.0 : 1.0;

    SparseStep step;
    step.n = n;
    step.implicit = (theta == 1);
    step.row_ptr.assign(n + 1, 0);
    step.col.reserve(static_cast<std::size_t>(n) * 4);
    step.val.reserve(static_cast<std::size_t>(n) * 4);
    step.rhs_offset.resize(n);

    for (int j = 0; j < grid.nq; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
            const int idx = grid.plane_index(i, j);
            double g_dn = 0.0, g_up = 0.0, g_q = 0.0;  // off-diagonals of G, all >= 0
            const double mu = coeffs.drift_x[idx];
            if (mu >= 0.0) {
                if (i < grid.nx - 1) g_up += mu * inv_dx;
                // at i = nx-1 the forward neighbour is outside: drop (see header)
            } else {
                if (i > 0) g_dn += -mu * inv_dx;
            }
            if (i > 0 && i < grid.nx - 1) {
                const double half_diff = 0.5 * coeffs.diffusion_x[idx] * inv_dx2;
                g_up += half_diff;
                g_dn += half_diff;
            }
            if (j < grid.nq - 1) g_q = coeffs.drift_q[idx] * inv_dq;
            const double g_diag = -(g_up + g_dn + g_q);

            if (i > 0 && g_dn != 0.0) {
                step.col.push_back(idx - 1);
                step.val.push_back(sgn * dt * g_dn);
            }
            step.col.push_back(idx);
            step.val.push_back(1.0 + sgn * dt * g_diag);
            if (i < grid.nx - 1 && g_up != 0.0) {
                step.col.push_back(idx + 1);
                step.val.push_back(sgn * dt * g_up);
            }
            if (j < grid.nq - 1 && g_q != 0.0) {
                step.col.push_back(idx + grid.nx);
                step.val.push_back(sgn * dt * g_q);
            }
            step.row_ptr[idx + 1] = static_cast<int>(step.col.size());
            step.rhs_offset[idx] =
                dt * (coeffs.source.empty() ? 0.0 : coeffs.source[idx]);
        }
    }
    // Row pointers were filled in index order because the node loop is
    // layout order (x fastest).
    return step;
}

ControlGrid ControlGrid::one_arm(const GridSpec& grid, int slices) {
    ControlGrid c;
    c.grid = grid;
    c.slices = slices;
    const std::int64_t total = static_cast<std::int64_t>(slices) * grid.nodes();
    c.bits.assign(static_cast<std::size_t>((total + 63) / 64), 0);
    return c;
}

ControlGrid ControlGrid::multi_arm(const GridSpec& grid, int slices) {
    ControlGrid c;
    c.grid = grid;
    c.slices = slices;
    c.arm_idx.assign(static_cast<std::size_t>(slices) * grid.nodes(), 0);
    return c;
}

int ControlGrid::slice_for_time(double t) const {
    // Slice s applies over the original-time interval (1-(s+1)dt, 1-s*dt].
    const int s = static_cast<int>(std::floor((1.0 - t) / grid.dt));
    return std::clamp(s, 0, slices - 1);
}

}  // namespace banditpde
