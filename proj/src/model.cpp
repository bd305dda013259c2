#include "crisk/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace crisk {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_positive(double v, const char* name)
{
    if (!(v > 0.0) || !std::isfinite(v))
        throw std::invalid_argument(std::string(name) + " must be positive and finite");
}

} // namespace

const char* const kParamNames[3] = {"eta0", "eta1", "beta"};

ModelParams::ModelParams(double eta0_, double eta1_, double beta_)
    : eta0(eta0_), eta1(eta1_), beta(beta_)
{
    require_positive(eta0, "eta0");
    require_positive(eta1, "eta1");
    require_positive(beta, "beta");
}

double param_coord(const ModelParams& p, int coord)
{
    switch (coord) {
    case 0: return p.eta0;
    case 1: return p.eta1;
    case 2: return p.beta;
    default: throw std::out_of_range("parameter coordinate must be 0, 1 or 2");
    }
}

CensoredSample::CensoredSample(std::vector<Observation> obs) : obs_(std::move(obs))
{
    if (obs_.empty())
        throw std::invalid_argument("sample must be nonempty");
    for (const Observation& o : obs_) {
        if (!(o.time >= 0.0) || !std::isfinite(o.time))
            throw std::invalid_argument("observation times must be finite and >= 0");
    }
    std::stable_sort(obs_.begin(), obs_.end(),
                     [](const Observation& a, const Observation& b) { return a.time < b.time; });
    for (const Observation& o : obs_) {
        total_time_ += o.time;
        if (o.event == Event::Failure)
            ++failures_;
    }
    if (failures_ == 0)
        throw std::invalid_argument("sample must contain at least one failure");
}

double hazard(const ModelParams& p, double x)
{
    if (x < 0.0)
        throw std::domain_error("hazard requires x >= 0");
    if (x == 0.0 && p.beta < 1.0)
        throw std::domain_error("hazard diverges at x = 0 for beta < 1");
    return 1.0 / p.eta0 + (p.beta / p.eta1) * std::pow(x / p.eta1, p.beta - 1.0);
}

double survival(const ModelParams& p, double x)
{
    if (x < 0.0)
        throw std::domain_error("survival requires x >= 0");
    return std::exp(-x / p.eta0 - std::pow(x / p.eta1, p.beta));
}

double pdf(const ModelParams& p, double x)
{
    return hazard(p, x) * survival(p, x);
}

double log_weibull_hazard(const ModelParams& p, double x)
{
    if (x < 0.0)
        throw std::domain_error("hazard requires x >= 0");
    if (x == 0.0) {
        if (p.beta < 1.0)
            throw std::domain_error("hazard diverges at x = 0 for beta < 1");
        if (p.beta == 1.0)
            return -std::log(p.eta1);
        return kNegInf;
    }
    return std::log(p.beta) - p.beta * std::log(p.eta1) + (p.beta - 1.0) * std::log(x);
}

double exponential_from_uniform(double eta0, double u)
{
    return -eta0 * std::log(u);
}

double weibull_from_uniform(double eta1, double beta, double u)
{
    return eta1 * std::pow(-std::log(u), 1.0 / beta);
}

double sample_lifetime(const ModelParams& p, RandomStream& rng)
{
    const double e = exponential_from_uniform(p.eta0, rng.uniform_open01());
    const double w = weibull_from_uniform(p.eta1, p.beta, rng.uniform_open01());
    return std::min(e, w);
}

std::vector<double> sample_lifetimes(const ModelParams& p, std::size_t n, RandomStream& rng)
{
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(sample_lifetime(p, rng));
    return out;
}

double log_likelihood(const ModelParams& p, const CensoredSample& sample)
{
    const double log_he = -std::log(p.eta0);
    double ll = 0.0;
    for (const Observation& o : sample.observations()) {
        const double x = o.time;
        if (o.event == Event::Failure) {
            // log(h_E + h_W) via log-sum-exp; never forms the product likelihood.
            const double log_hw = log_weibull_hazard(p, x);
            const double hi = std::max(log_he, log_hw);
            const double lo = std::min(log_he, log_hw);
            ll += hi + std::log1p(std::exp(lo - hi));
        }
        ll -= x / p.eta0;
        ll -= std::pow(x / p.eta1, p.beta);
    }
    return std::isnan(ll) ? kNegInf : ll;
}

} // namespace crisk
