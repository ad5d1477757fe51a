#pragma once

#include <vector>

namespace banditpde {

// Gauss-Hermite rule for integrals of the form  ∫ f(y) e^{-y^2} dy
// (physicists' convention). Nodes are symmetric about zero.
struct GaussHermite {
    std::vector<double> node;
    std::vector<double> weight;

    explicit GaussHermite(int n);

    // E[f(Z)] for Z ~ N(mean, sd^2), evaluated as a weighted sum over
    // mean + sd*sqrt(2)*node[i].
    template <typename F>
    double expect(double mean, double sd, F&& f) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < node.size(); ++i) {
            acc += weight[i] * f(mean + sd * 1.4142135623730950488 * node[i]);
        }
        return acc * 0.5641895835477562869;  // 1/sqrt(pi)
    }
};

}  // namespace banditpde
