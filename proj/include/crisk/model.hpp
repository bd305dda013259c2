#pragma once

#include <cstddef>
#include <vector>

#include "crisk/rng.hpp"

namespace crisk {

/**
 * Parameters of the competing-risk lifetime distribution
 *
 *    B(eta0, eta1, beta) = min(E, W),
 *
 * where E is exponential with mean eta0 (accidental failures, constant
 * hazard 1/eta0) and W is Weibull with scale eta1 and shape beta (ageing
 * failures). Scale parameterization throughout: eta0 is a mean time, never
 * a rate.
 */
struct ModelParams {
    double eta0;
    double eta1;
    double beta;

    ModelParams(double eta0_, double eta1_, double beta_);
};

// Coordinate access in the fixed order eta0, eta1, beta.
double param_coord(const ModelParams& p, int coord);
extern const char* const kParamNames[3];

enum class Event { Censored = 0, Failure = 1 };

// One observed duration. Censored means the true failure time exceeds `time`.
struct Observation {
    double time;
    Event event;
};

/**
 * A right-censored sample: observation times in nondecreasing order with
 * per-observation event flags. Construction sorts by time and requires at
 * least one failure; with none the likelihood is flat in beta and
 * estimation is refused.
 */
class CensoredSample {
public:
    explicit CensoredSample(std::vector<Observation> obs);

    const std::vector<Observation>& observations() const { return obs_; }
    std::size_t size() const { return obs_.size(); }
    std::size_t failure_count() const { return failures_; }
    double total_time() const { return total_time_; }

private:
    std::vector<Observation> obs_;
    std::size_t failures_ = 0;
    double total_time_ = 0.0;
};

// Hazard rate 1/eta0 + (beta/eta1)(x/eta1)^(beta-1). Throws std::domain_error
// for x < 0 and for x == 0 with beta < 1, where the Weibull term diverges.
double hazard(const ModelParams& p, double x);

// Survival exp[-x/eta0 - (x/eta1)^beta]; survival(p, 0) == 1.
double survival(const ModelParams& p, double x);

// Density hazard(x) * survival(x).
double pdf(const ModelParams& p, double x);

// log of the Weibull hazard component; -infinity where it vanishes (x == 0,
// beta > 1). Same domain errors as hazard().
double log_weibull_hazard(const ModelParams& p, double x);

// Inverse-CDF draws from the component distributions, u in (0,1].
double exponential_from_uniform(double eta0, double u);
double weibull_from_uniform(double eta1, double beta, double u);

// One lifetime min(e, w) using two independent uniforms from `rng`
// (exponential draw first).
double sample_lifetime(const ModelParams& p, RandomStream& rng);

std::vector<double> sample_lifetimes(const ModelParams& p, std::size_t n,
                                     RandomStream& rng);

// Right-censored log-likelihood
//   sum_i delta_i log h(x_i) - sum_i [x_i/eta0 + (x_i/eta1)^beta],
// evaluated in log space throughout. Returns -infinity when the hazard
// vanishes at a failure time.
double log_likelihood(const ModelParams& p, const CensoredSample& sample);

} // namespace crisk
