#pragma once

#include <variant>
#include <vector>

namespace banditpde {

// PDE state for the one-armed problem: scaled cumulative reward (or score),
// pull fraction, time.
struct State {
    double x = 0.0;
    double q = 0.0;
    double t = 0.0;
};

// State for K arms: per-arm (x_k, q_k) plus time.
struct MultiArmState {
    std::vector<double> x;
    std::vector<double> q;
    double t = 0.0;
};

// Prior over the scaled mean reward mu.
struct GaussianPrior {
    double mean = 0.0;  // mu_0
    double sd = 1.0;    // nu > 0
};

struct DiscretePrior {
    std::vector<double> atom;  // strictly increasing
    std::vector<double> prob;  // nonnegative, sums to 1 within 1e-12

    // Mass rebalanced between exactly two support points; the shape used by
    // the least-favorable-prior search.
    static DiscretePrior two_point(double mu_lo, double mu_hi, double p_hi);
};

using PriorSpec = std::variant<GaussianPrior, DiscretePrior>;

void validate(const GaussianPrior& prior);
void validate(const DiscretePrior& prior);
void validate(const PriorSpec& prior);

// Per-arm reward standard deviations.
struct ArmModel {
    std::vector<double> sigma;

    int arms() const { return static_cast<int>(sigma.size()); }
    void validate() const;
};

// Posterior summaries that appear as PDE coefficients: mean mu(s),
// sd sigma(s) (Gaussian case only, NaN otherwise), and
// mu_plus = E[max(mu,0) | s].
struct PosteriorMoments {
    double mean = 0.0;
    double sd = 0.0;
    double mu_plus = 0.0;
};

PosteriorMoments gaussian_posterior(const GaussianPrior& prior, double sigma, const State& s);

struct DiscretePosterior {
    std::vector<double> weights;
    PosteriorMoments moments;
};

// Posterior over a finite support: w_i ∝ p_i exp(mu_i x / sigma^2 -
// q mu_i^2 / (2 sigma^2)), normalized in log space. At q = 0, x = 0 this is
// the prior itself.
DiscretePosterior discrete_posterior(const DiscretePrior& prior, double sigma, const State& s);

// Dispatch over the prior family.
PosteriorMoments posterior_moments(const PriorSpec& prior, double sigma, const State& s);

// P(mu >= 0 | s): the Thompson sampling probability.
double posterior_positive_prob(const PriorSpec& prior, double sigma, const State& s);

struct MultiArmMoments {
    std::vector<double> mean;  // per-arm posterior means
    double mu_max = 0.0;       // E[max_k mu_k | s]
};

// Independent per-arm priors. Gaussian priors use tensorized Gauss-Hermite
// quadrature (quad_nodes per dimension, K <= 3); discrete priors enumerate
// atom combinations exactly.
MultiArmMoments multiarm_moments(const std::vector<PriorSpec>& priors, const ArmModel& arms,
                                 const MultiArmState& s, int quad_nodes = 64);

// Sufficient statistic of the score process in general parametric models.
struct ScoreSufficientStat {
    double x = 0.0;  // scaled score process
    double q = 0.0;  // pull fraction
};

// One pulled-period update: x += sigma^2 psi(Y) / sqrt(n), q += 1/n.
ScoreSufficientStat parametric_sufficient_update(const ScoreSufficientStat& stat,
                                                 double score_value, double sigma, long n);

}  // namespace banditpde
