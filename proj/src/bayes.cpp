#include "crisk/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <utility>

#include "crisk/mle.hpp"
#include "crisk/rng.hpp"

namespace crisk {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double softplus(double z)
{
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double sigmoid(double z)
{
    return z > 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

// Transformed chain state y = (log eta0, log eta1, logit((beta-lo)/(hi-lo))).
struct TransformedPoint {
    std::array<double, 3> y;

    ModelParams to_params(const PriorSpec& prior) const
    {
        const double span = prior.beta_hi - prior.beta_lo;
        return ModelParams(std::exp(y[0]), std::exp(y[1]),
                           prior.beta_lo + span * sigmoid(y[2]));
    }

    // log |d theta / d y|: eta0 * eta1 * span * s(1-s) for the logit leg.
    double log_jacobian(const PriorSpec& prior) const
    {
        const double span = prior.beta_hi - prior.beta_lo;
        return y[0] + y[1] + std::log(span) - softplus(y[2]) - softplus(-y[2]);
    }
};

TransformedPoint transform(const ModelParams& p, const PriorSpec& prior)
{
    const double span = prior.beta_hi - prior.beta_lo;
    double frac = (p.beta - prior.beta_lo) / span;
    // keep the logit finite: pull boundary values slightly inside
    frac = std::clamp(frac, 1e-6, 1.0 - 1e-6);
    return {{std::log(p.eta0), std::log(p.eta1), std::log(frac / (1.0 - frac))}};
}

double moment(const std::vector<ModelParams>& draws, int coord, double power)
{
    double acc = 0.0;
    for (const ModelParams& d : draws)
        acc += std::pow(param_coord(d, coord), power);
    return acc / static_cast<double>(draws.size());
}

double mean_log(const std::vector<ModelParams>& draws, int coord)
{
    double acc = 0.0;
    for (const ModelParams& d : draws)
        acc += std::log(param_coord(d, coord));
    return acc / static_cast<double>(draws.size());
}

void require_draws(const PosteriorDraws& draws)
{
    if (draws.draws.empty())
        throw std::invalid_argument("no posterior draws");
}

} // namespace

PriorSpec::PriorSpec(double a1_, double b1_, double a2_, double b2_,
                     double beta_lo_, double beta_hi_)
    : a1(a1_), b1(b1_), a2(a2_), b2(b2_), beta_lo(beta_lo_), beta_hi(beta_hi_)
{
    if (!(a1 > 0.0 && b1 > 0.0 && a2 > 0.0 && b2 > 0.0))
        throw std::invalid_argument("Gamma hyperparameters must be positive");
    if (!(beta_lo < beta_hi))
        throw std::invalid_argument("beta support must satisfy beta_lo < beta_hi");
}

bool PriorSpec::in_support(const ModelParams& p) const
{
    return p.eta0 > 0.0 && p.eta1 > 0.0 && p.beta >= beta_lo && p.beta <= beta_hi;
}

double PriorSpec::log_kernel(const ModelParams& p) const
{
    if (!in_support(p))
        return kNegInf;
    return (b1 - 1.0) * std::log(p.eta0) - a1 * p.eta0 +
           (b2 - 1.0) * std::log(p.eta1) - a2 * p.eta1;
}

std::array<double, 2> hyperparameters_from_interval(double lo, double hi)
{
    if (!(0.0 < lo && lo < hi))
        throw std::invalid_argument("interval must satisfy 0 < lo < hi");
    const double mean = 0.5 * (lo + hi);
    const double sd = 0.25 * (hi - lo);
    const double a = mean / (sd * sd);
    const double b = (mean / sd) * (mean / sd);
    return {a, b};
}

PriorSpec default_study_prior()
{
    const auto g0 = hyperparameters_from_interval(1.0, 300.0);
    const auto g1 = hyperparameters_from_interval(1.0, 200.0);
    return PriorSpec(g0[0], g0[1], g1[0], g1[1], 1.0, 5.0);
}

double log_posterior_kernel(const ModelParams& params, const CensoredSample& sample,
                            const PriorSpec& prior)
{
    const double lp = prior.log_kernel(params);
    if (lp == kNegInf)
        return kNegInf;
    return lp + log_likelihood(params, sample);
}

PosteriorDraws mh_sample_kernel(const std::function<double(const ModelParams&)>& log_kernel,
                                const PriorSpec& support, const MhConfig& config,
                                const ModelParams& init)
{
    if (config.burn_in >= config.n_draws)
        throw std::invalid_argument("burn_in must be smaller than n_draws");
    if (config.thin < 1)
        throw std::invalid_argument("thin must be >= 1");
    if (!support.in_support(init))
        throw std::invalid_argument("chain initialization outside prior support");

    RandomStream rng(config.seed);
    std::array<double, 3> scale = config.step_sizes;

    TransformedPoint y = transform(init, support);
    double target = log_kernel(y.to_params(support)) + y.log_jacobian(support);
    if (!std::isfinite(target))
        throw std::invalid_argument("log kernel not finite at the chain start");

    PosteriorDraws out;
    out.config = config;
    const std::size_t kept = (config.n_draws - config.burn_in + config.thin - 1) / config.thin;
    out.draws.reserve(kept);
    out.accepted.reserve(kept);

    // burn-in adaptation bookkeeping
    constexpr std::size_t batch = 100;
    constexpr double target_rate = 0.3;
    std::size_t batch_accepts = 0, batch_count = 0;
    std::size_t post_accepts = 0, post_count = 0;

    for (std::size_t i = 0; i < config.n_draws; ++i) {
        TransformedPoint prop = y;
        for (int c = 0; c < 3; ++c)
            prop.y[c] += scale[c] * rng.normal();
        const double prop_target =
            log_kernel(prop.to_params(support)) + prop.log_jacobian(support);
        const double log_u = std::log(rng.uniform_open01());
        const bool accept = log_u < prop_target - target;
        if (accept) {
            y = prop;
            target = prop_target;
        }

        const bool in_burn = i < config.burn_in;
        if (in_burn) {
            batch_accepts += accept ? 1 : 0;
            if (++batch_count == batch) {
                if (config.adapt) {
                    const double rate = static_cast<double>(batch_accepts) / batch;
                    const double factor =
                        std::clamp(std::exp(0.8 * (rate - target_rate)), 0.5, 2.0);
                    for (double& s : scale)
                        s = std::clamp(s * factor, 1e-4, 20.0);
                }
                batch_accepts = 0;
                batch_count = 0;
            }
        } else {
            post_accepts += accept ? 1 : 0;
            ++post_count;
            if ((i - config.burn_in) % config.thin == 0) {
                out.draws.push_back(y.to_params(support));
                out.accepted.push_back(accept ? 1 : 0);
            }
        }
    }

    out.acceptance_rate = static_cast<double>(post_accepts) / static_cast<double>(post_count);
    if (out.acceptance_rate < 0.1 || out.acceptance_rate > 0.6) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "acceptance rate %.3f outside [0.1, 0.6]",
                      out.acceptance_rate);
        out.warnings.emplace_back(buf);
    }
    return out;
}

ModelParams clamp_into_support(const ModelParams& p, const PriorSpec& prior)
{
    const double margin = 0.01 * (prior.beta_hi - prior.beta_lo);
    return ModelParams(p.eta0, p.eta1,
                       std::clamp(p.beta, prior.beta_lo + margin, prior.beta_hi - margin));
}

PosteriorDraws mh_sample(const CensoredSample& sample, const PriorSpec& prior,
                         const MhConfig& config)
{
    const ModelParams start = clamp_into_support(em_fit(sample).params, prior);
    const auto kernel = [&](const ModelParams& p) {
        return log_posterior_kernel(p, sample, prior);
    };
    return mh_sample_kernel(kernel, prior, config, start);
}

void write_chain_csv(std::ostream& os, const PosteriorDraws& draws)
{
    os << "iteration,eta0,eta1,beta,accepted\n";
    char buf[160];
    for (std::size_t k = 0; k < draws.draws.size(); ++k) {
        const std::size_t iteration = draws.config.burn_in + k * draws.config.thin;
        const ModelParams& p = draws.draws[k];
        std::snprintf(buf, sizeof buf, "%zu,%.6g,%.6g,%.6g,%d\n", iteration, p.eta0,
                      p.eta1, p.beta, draws.accepted[k] ? 1 : 0);
        os << buf;
    }
}

LossSpec LossSpec::entropy(double p)
{
    if (p == 0.0)
        throw std::invalid_argument("entropy loss requires p != 0");
    return {Kind::Entropy, p};
}

LossSpec LossSpec::linex(double r)
{
    if (r == 0.0)
        throw std::invalid_argument("Linex loss requires r != 0");
    return {Kind::Linex, r};
}

std::string LossSpec::label() const
{
    char buf[48];
    switch (kind) {
    case Kind::GeneralizedQuadratic:
        std::snprintf(buf, sizeof buf, "gq(alpha=%g)", parameter);
        break;
    case Kind::Entropy:
        std::snprintf(buf, sizeof buf, "entropy(p=%g)", parameter);
        break;
    case Kind::Linex:
        std::snprintf(buf, sizeof buf, "linex(r=%g)", parameter);
        break;
    }
    return buf;
}

const ParamEstimate& BayesReport::coord(int c) const
{
    switch (c) {
    case 0: return eta0;
    case 1: return eta1;
    case 2: return beta;
    default: throw std::out_of_range("parameter coordinate must be 0, 1 or 2");
    }
}

ParamEstimate& BayesReport::coord(int c)
{
    return const_cast<ParamEstimate&>(std::as_const(*this).coord(c));
}

BayesReport estimate_gq(const PosteriorDraws& draws, double alpha)
{
    require_draws(draws);
    BayesReport report{{}, {}, {}, LossSpec::gq(alpha), {}};
    for (int c = 0; c < 3; ++c) {
        const double m_lo = moment(draws.draws, c, alpha - 1.0);
        const double m_mid = moment(draws.draws, c, alpha);
        const double m_hi = moment(draws.draws, c, alpha + 1.0);
        if (!(std::isfinite(m_lo)) || m_lo == 0.0)
            throw std::domain_error("GQ weight moment vanished or overflowed");
        ParamEstimate pe;
        pe.estimate = m_mid / m_lo;
        pe.posterior_risk = m_hi - 2.0 * pe.estimate * m_mid + pe.estimate * pe.estimate * m_lo;
        report.coord(c) = pe;
    }
    return report;
}

BayesReport estimate_entropy(const PosteriorDraws& draws, double p)
{
    require_draws(draws);
    if (p == 0.0)
        throw std::invalid_argument("entropy loss requires p != 0");
    for (const ModelParams& d : draws.draws)
        if (!(d.eta0 > 0.0 && d.eta1 > 0.0 && d.beta > 0.0))
            throw std::domain_error("entropy estimator requires strictly positive draws");
    BayesReport report{{}, {}, {}, LossSpec::entropy(p), {}};
    for (int c = 0; c < 3; ++c) {
        const double m = moment(draws.draws, c, -p);
        ParamEstimate pe;
        pe.estimate = std::pow(m, -1.0 / p);
        pe.posterior_risk = p * (mean_log(draws.draws, c) - std::log(pe.estimate));
        report.coord(c) = pe;
    }
    return report;
}

BayesReport estimate_linex(const PosteriorDraws& draws, double r)
{
    require_draws(draws);
    if (r == 0.0)
        throw std::invalid_argument("Linex loss requires r != 0");
    const BayesReport mean_report = estimate_gq(draws, 1.0);
    BayesReport report{{}, {}, {}, LossSpec::linex(r), {}};
    for (int c = 0; c < 3; ++c) {
        // log E[exp(-r l)] with a max shift against overflow
        double shift = kNegInf;
        for (const ModelParams& d : draws.draws)
            shift = std::max(shift, -r * param_coord(d, c));
        double acc = 0.0;
        for (const ModelParams& d : draws.draws)
            acc += std::exp(-r * param_coord(d, c) - shift);
        const double log_mean =
            shift + std::log(acc / static_cast<double>(draws.draws.size()));
        ParamEstimate pe;
        pe.estimate = -log_mean / r;
        pe.posterior_risk = r * (mean_report.coord(c).estimate - pe.estimate);
        if (pe.posterior_risk < 0.0)
            report.warnings.push_back(std::string(kParamNames[c]) +
                                      ": negative Linex posterior risk (sampling noise)");
        report.coord(c) = pe;
    }
    return report;
}

BayesReport estimate(const PosteriorDraws& draws, const LossSpec& loss)
{
    switch (loss.kind) {
    case LossSpec::Kind::GeneralizedQuadratic: return estimate_gq(draws, loss.parameter);
    case LossSpec::Kind::Entropy: return estimate_entropy(draws, loss.parameter);
    case LossSpec::Kind::Linex: return estimate_linex(draws, loss.parameter);
    }
    throw std::logic_error("unknown loss kind");
}

} // namespace crisk
