#include "banditpde/quadrature.hpp"

#include <cmath>

#include "banditpde/errors.hpp"

namespace banditpde {

// Nodes are the roots of H_n, found by Newton iteration on the scaled
// recurrence; the classical approach (Golub-Welsch accuracy at O(n) cost).
// Initial guesses follow Stroud & Secrest.
GaussHermite::GaussHermite(int n) {
    if (n < 1) throw Error("GaussHermite: need at least one node");
    node.assign(n, 0.0);
    weight.assign(n, 0.0);

    const double pim4 = 0.7511255444649425;  // pi^{-1/4}
    const int m = (n + 1) / 2;
    double z = 0.0;
    for (int i = 0; i < m; ++i) {
        if (i == 0) {
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        } else if (i == 1) {
            z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
        } else if (i == 2) {
            z = 1.86 * z - 0.86 * node[n - 1];
        } else if (i == 3) {
            z = 1.91 * z - 0.91 * node[n - 2];
        } else {
            z = 2.0 * z - node[n - i + 1];
        }
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            // Orthonormal Hermite recurrence; p1 = H~_n(z), pp = H~_n'(z).
            double p1 = pim4;
            double p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1.0)) * p2 -
                     std::sqrt(static_cast<double>(j) / (j + 1.0)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double dz = p1 / pp;
            z -= dz;
            if (std::fabs(dz) < 1e-15) break;
        }
        node[n - 1 - i] = z;
        node[i] = -z;
        weight[n - 1 - i] = 2.0 / (pp * pp);
        weight[i] = weight[n - 1 - i];
    }
}

}  // namespace banditpde
