#include "banditpde/beliefs.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

#include "banditpde/errors.hpp"
#include "banditpde/normal.hpp"
#include "banditpde/quadrature.hpp"

namespace banditpde {

DiscretePrior DiscretePrior::two_point(double mu_lo, double mu_hi, double p_hi) {
    DiscretePrior prior;
    prior.atom = {mu_lo, mu_hi};
    prior.prob = {1.0 - p_hi, p_hi};
    validate(prior);
    return prior;
}

void validate(const GaussianPrior& prior) {
    if (!(prior.sd > 0.0)) throw ConfigError("Gaussian prior requires sd > 0");
    if (!std::isfinite(prior.mean)) throw ConfigError("Gaussian prior mean must be finite");
}

void validate(const DiscretePrior& prior) {
    if (prior.atom.empty() || prior.atom.size() != prior.prob.size()) {
        throw ConfigError("discrete prior needs matching, nonempty atom/prob lists");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < prior.atom.size(); ++i) {
        if (!std::isfinite(prior.atom[i])) throw ConfigError("discrete prior atom must be finite");
        if (prior.prob[i] < 0.0) throw ConfigError("discrete prior probabilities must be >= 0");
        if (i > 0 && !(prior.atom[i] > prior.atom[i - 1])) {
            throw ConfigError("discrete prior atoms must be strictly increasing");
        }
        total += prior.prob[i];
    }
    if (std::fabs(total - 1.0) > 1e-12) {
        throw ConfigError("discrete prior probabilities must sum to 1 within 1e-12");
    }
}

void validate(const PriorSpec& prior) {
    std::visit([](const auto& p) { validate(p); }, prior);
}

void ArmModel::validate() const {
    if (sigma.empty()) throw ConfigError("arm model needs at least one arm");
    for (double s : sigma) {
        if (!(s > 0.0)) throw ConfigError("arm reward sd must be > 0");
    }
}

PosteriorMoments gaussian_posterior(const GaussianPrior& prior, double sigma, const State& s) {
    const double prec = s.q / (sigma * sigma) + 1.0 / (prior.sd * prior.sd);
    PosteriorMoments m;
    m.mean = (s.x / (sigma * sigma) + prior.mean / (prior.sd * prior.sd)) / prec;
    m.sd = 1.0 / std::sqrt(prec);
    m.mu_plus = expected_positive_part(m.mean, m.sd);
    // mu_plus >= max(mean, 0) analytically; guard the float boundary so the
    // PDE source never goes negative.
    m.mu_plus = std::max(m.mu_plus, std::max(m.mean, 0.0));
    return m;
}

DiscretePosterior discrete_posterior(const DiscretePrior& prior, double sigma, const State& s) {
    const std::size_t k = prior.atom.size();
    DiscretePosterior post;
    post.weights.resize(k);

    // Log weights with max subtraction: q mu^2 / (2 sigma^2) can reach
    // several hundred on the default grids.
    double max_log = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i) {
        const double mu = prior.atom[i];
        double lw = (prior.prob[i] > 0.0) ? std::log(prior.prob[i])
                                          : -std::numeric_limits<double>::infinity();
        lw += (mu * s.x - 0.5 * s.q * mu * mu) / (sigma * sigma);
        post.weights[i] = lw;
        max_log = std::max(max_log, lw);
    }
    assert(max_log > -std::numeric_limits<double>::infinity() &&
           "all posterior weights underflowed");
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        post.weights[i] = std::exp(post.weights[i] - max_log);
        total += post.weights[i];
    }
    double mean = 0.0;
    double plus = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        post.weights[i] /= total;
        mean += post.weights[i] * prior.atom[i];
        plus += post.weights[i] * std::max(prior.atom[i], 0.0);
    }
    post.moments.mean = mean;
    post.moments.sd = std::numeric_limits<double>::quiet_NaN();
    post.moments.mu_plus = std::max(plus, std::max(mean, 0.0));
    return post;
}

PosteriorMoments posterior_moments(const PriorSpec& prior, double sigma, const State& s) {
    if (const auto* g = std::get_if<GaussianPrior>(&prior)) {
        return gaussian_posterior(*g, sigma, s);
    }
    return discrete_posterior(std::get<DiscretePrior>(prior), sigma, s).moments;
}

double posterior_positive_prob(const PriorSpec& prior, double sigma, const State& s) {
    if (const auto* g = std::get_if<GaussianPrior>(&prior)) {
        const PosteriorMoments m = gaussian_posterior(*g, sigma, s);
        return norm_cdf(m.mean / m.sd);
    }
    const auto& d = std::get<DiscretePrior>(prior);
    const DiscretePosterior post = discrete_posterior(d, sigma, s);
    double p = 0.0;
    for (std::size_t i = 0; i < d.atom.size(); ++i) {
        if (d.atom[i] >= 0.0) p += post.weights[i];
    }
    return p;
}

namespace {

struct ArmPosterior {
    bool gaussian;
    double mean, sd;                  // Gaussian case
    std::vector<double> atom, prob;  // discrete case
};

ArmPosterior arm_posterior(const PriorSpec& prior, double sigma, double x, double q) {
    ArmPosterior out;
    State s{x, q, 0.0};
    if (const auto* g = std::get_if<GaussianPrior>(&prior)) {
        const PosteriorMoments m = gaussian_posterior(*g, sigma, s);
        out.gaussian = true;
        out.mean = m.mean;
        out.sd = m.sd;
    } else {
        const auto& d = std::get<DiscretePrior>(prior);
        const DiscretePosterior post = discrete_posterior(d, sigma, s);
        out.gaussian = false;
        out.atom = d.atom;
        out.prob = post.weights;
        out.mean = post.moments.mean;
        out.sd = 0.0;
    }
    return out;
}

// Recursive tensor product over arms: Gaussian arms contribute quadrature
// nodes, discrete arms contribute their atoms.
double max_moment(const std::vector<ArmPosterior>& arms, const GaussHermite& gh, std::size_t k,
                  double running_max, double weight) {
    if (k == arms.size()) return weight * running_max;
    const ArmPosterior& a = arms[k];
    double acc = 0.0;
    if (a.gaussian) {
        for (std::size_t i = 0; i < gh.node.size(); ++i) {
            const double draw = a.mean + a.sd * 1.4142135623730950488 * gh.node[i];
            const double w = gh.weight[i] * 0.5641895835477562869;
            acc += max_moment(arms, gh, k + 1, std::max(running_max, draw), weight * w);
        }
    } else {
        for (std::size_t i = 0; i < a.atom.size(); ++i) {
            if (a.prob[i] == 0.0) continue;
            acc += max_moment(arms, gh, k + 1, std::max(running_max, a.atom[i]),
                              weight * a.prob[i]);
        }
    }
    return acc;
}

}  // namespace

MultiArmMoments multiarm_moments(const std::vector<PriorSpec>& priors, const ArmModel& arms,
                                 const MultiArmState& s, int quad_nodes) {
    arms.validate();
    const int K = arms.arms();
    if (static_cast<int>(priors.size()) != K || static_cast<int>(s.x.size()) != K ||
        static_cast<int>(s.q.size()) != K) {
        throw ConfigError("multiarm_moments: priors/state dimensions must match arm count");
    }
    int gaussian_arms = 0;
    std::vector<ArmPosterior> posts(K);
    MultiArmMoments out;
    out.mean.resize(K);
    for (int k = 0; k < K; ++k) {
        posts[k] = arm_posterior(priors[k], arms.sigma[k], s.x[k], s.q[k]);
        out.mean[k] = posts[k].mean;
        if (posts[k].gaussian) ++gaussian_arms;
    }
    if (gaussian_arms > 0 && K > 3) {
        throw UnsupportedK("Gaussian mu_max supports at most 3 arms (quadrature cost)");
    }
    const GaussHermite gh(gaussian_arms > 0 ? quad_nodes : 1);
    out.mu_max = max_moment(posts, gh, 0, -std::numeric_limits<double>::infinity(), 1.0);
    return out;
}

ScoreSufficientStat parametric_sufficient_update(const ScoreSufficientStat& stat,
                                                 double score_value, double sigma, long n) {
    if (n < 1) throw ConfigError("parametric update needs horizon n >= 1");
    ScoreSufficientStat next = stat;
    next.x += sigma * sigma * score_value / std::sqrt(static_cast<double>(n));
    next.q += 1.0 / static_cast<double>(n);
    return next;
}

}  // namespace banditpde
