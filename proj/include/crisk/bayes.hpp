#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "crisk/model.hpp"

namespace crisk {

/**
 * Independent priors of the Bayesian model: Gamma(shape b1, rate a1) on
 * eta0, Gamma(shape b2, rate a2) on eta1, Uniform[beta_lo, beta_hi] on
 * beta. The Gammas sit on the scale parameters directly (density
 * proportional to eta^(b-1) exp(-a eta)), so no conjugacy exists and the
 * posterior is explored by MCMC.
 */
struct PriorSpec {
    double a1, b1; // eta0 ~ Gamma(rate a1, shape b1)
    double a2, b2; // eta1 ~ Gamma(rate a2, shape b2)
    double beta_lo, beta_hi;

    PriorSpec(double a1_, double b1_, double a2_, double b2_,
              double beta_lo_, double beta_hi_);

    bool in_support(const ModelParams& p) const;

    // log prior density up to the normalizing constant; -infinity outside
    // the support.
    double log_kernel(const ModelParams& p) const;
};

// Gamma (rate, shape) matched to a plausibility interval [lo, hi]:
// mean (lo+hi)/2 and standard deviation (hi-lo)/4 give b = (mean/sd)^2,
// a = mean/sd^2.
std::array<double, 2> hyperparameters_from_interval(double lo, double hi);

// The paper-study prior: eta0 interval [1,300], eta1 interval [1,200],
// beta ~ Uniform[1,5].
PriorSpec default_study_prior();

struct MhConfig {
    std::size_t n_draws = 60000;
    std::size_t burn_in = 10000;
    std::size_t thin = 5;
    // Initial random-walk scales in the transformed coordinates
    // (log eta0, log eta1, logit beta); adapted during burn-in toward 30%
    // acceptance, then frozen.
    std::array<double, 3> step_sizes{0.4, 0.4, 0.8};
    bool adapt = true;
    std::uint64_t seed = 20240101;
};

struct PosteriorDraws {
    std::vector<ModelParams> draws;     // post burn-in, thinned
    std::vector<unsigned char> accepted; // whether the recorded step moved
    double acceptance_rate = 0.0;       // over post-burn-in proposals
    MhConfig config;
    std::vector<std::string> warnings;
};

// Unnormalized log posterior:
// (b1-1) log eta0 + (b2-1) log eta1 - a1 eta0 - a2 eta1 + log-likelihood;
// -infinity outside the prior support.
double log_posterior_kernel(const ModelParams& params, const CensoredSample& sample,
                            const PriorSpec& prior);

// Random-walk Metropolis-Hastings over (log eta0, log eta1,
// logit((beta-lo)/(hi-lo))) for an arbitrary log target kernel on the
// original parameter space; the log-Jacobian of the transform enters the
// acceptance ratio. Deterministic for a fixed config.seed.
PosteriorDraws mh_sample_kernel(const std::function<double(const ModelParams&)>& log_kernel,
                                const PriorSpec& support, const MhConfig& config,
                                const ModelParams& init);

// Pulls beta into the interior of the prior support (1% margin); eta0 and
// eta1 are already in support for any valid ModelParams.
ModelParams clamp_into_support(const ModelParams& p, const PriorSpec& prior);

// Posterior sampler for the censored competing-risk model; the chain starts
// at the EM estimate clamped into the prior support.
PosteriorDraws mh_sample(const CensoredSample& sample, const PriorSpec& prior,
                         const MhConfig& config);

// Chain export for external diagnostics; columns iteration,eta0,eta1,beta,accepted.
void write_chain_csv(std::ostream& os, const PosteriorDraws& draws);

struct LossSpec {
    enum class Kind { GeneralizedQuadratic, Entropy, Linex };
    Kind kind;
    double parameter; // alpha, p, or r

    static LossSpec gq(double alpha) { return {Kind::GeneralizedQuadratic, alpha}; }
    static LossSpec entropy(double p);
    static LossSpec linex(double r);

    std::string label() const;
};

struct ParamEstimate {
    double estimate = 0.0;
    double posterior_risk = 0.0;
};

struct BayesReport {
    ParamEstimate eta0, eta1, beta;
    LossSpec loss;
    std::vector<std::string> warnings;

    const ParamEstimate& coord(int c) const;
    ParamEstimate& coord(int c);
};

// Bayes estimators and posterior risks as Monte-Carlo averages over the
// draws. Generalized quadratic with weight lambda^(alpha-1):
//   estimate = E[l^a]/E[l^(a-1)],
//   risk     = E[l^(a+1)] - 2 est E[l^a] + est^2 E[l^(a-1)].
BayesReport estimate_gq(const PosteriorDraws& draws, double alpha);

// Entropy loss: estimate = E[l^-p]^(-1/p), risk = p (E[log l] - log estimate).
BayesReport estimate_entropy(const PosteriorDraws& draws, double p);

// Linex loss: estimate = -(1/r) log E[exp(-r l)] (log-sum-exp guarded),
// risk = r (posterior mean - estimate). A negative risk from sampling noise
// is kept and flagged in the warnings.
BayesReport estimate_linex(const PosteriorDraws& draws, double r);

BayesReport estimate(const PosteriorDraws& draws, const LossSpec& loss);

// Validation oracle: the same estimates and risks by tensor-product
// quadrature of the posterior kernel over (log eta0, log eta1, beta),
// refined until successive grids agree to 1e-4 relative. Intended for small
// samples (n <= 10); throws when refinement does not stabilize.
BayesReport quadrature_oracle(const CensoredSample& sample, const PriorSpec& prior,
                              const LossSpec& loss);

} // namespace crisk
