#include "crisk/mle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace crisk {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Sufficient statistics of the Weibull Q-block at (u, v) = (log eta1, log beta).
struct WeibullSums {
    double s0 = 0.0; // sum of s_i = (x_i/eta1)^beta over all observations
    double s1 = 0.0; // sum of (log x_i - u) s_i
    double s2 = 0.0; // sum of (log x_i - u)^2 s_i
};

WeibullSums weibull_sums(const CensoredSample& sample, double u, double beta)
{
    WeibullSums ws;
    for (const Observation& o : sample.observations()) {
        if (o.time <= 0.0)
            continue; // zero times contribute no survival mass
        const double dt = std::log(o.time) - u;
        const double s = std::exp(beta * dt);
        ws.s0 += s;
        ws.s1 += dt * s;
        ws.s2 += dt * dt * s;
    }
    return ws;
}

// Weights of the failure hazard terms: w_i = 1 - p_exp(x_i).
struct FailureStats {
    double wsum = 0.0; // sum of w_i
    double wlog = 0.0; // sum of w_i log x_i
    bool zero_time_failure = false;
};

FailureStats failure_stats(const Memberships& m, const CensoredSample& sample)
{
    FailureStats fs;
    const auto& obs = sample.observations();
    for (std::size_t i = 0; i < obs.size(); ++i) {
        if (obs[i].event != Event::Failure)
            continue;
        const double w = 1.0 - m.p_exp[i];
        if (obs[i].time <= 0.0) {
            if (w > 0.0)
                fs.zero_time_failure = true;
            continue;
        }
        fs.wsum += w;
        fs.wlog += w * std::log(obs[i].time);
    }
    return fs;
}

void check_alignment(const Memberships& m, const CensoredSample& sample)
{
    if (m.p_exp.size() != sample.size())
        throw std::invalid_argument("memberships and sample sizes differ");
}

} // namespace

Memberships e_step(const ModelParams& params, const CensoredSample& sample)
{
    Memberships m;
    m.p_exp.reserve(sample.size());
    const double he = 1.0 / params.eta0;
    for (const Observation& o : sample.observations()) {
        if (o.event != Event::Failure) {
            m.p_exp.push_back(0.0);
            continue;
        }
        const double hw = (params.beta / params.eta1) *
                          std::pow(o.time / params.eta1, params.beta - 1.0);
        m.p_exp.push_back(he / (he + hw));
    }
    return m;
}

double q_function(const ModelParams& params, const Memberships& m,
                  const CensoredSample& sample)
{
    check_alignment(m, sample);
    const double log_he = -std::log(params.eta0);
    double q = 0.0;
    const auto& obs = sample.observations();
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const double x = obs[i].time;
        if (obs[i].event == Event::Failure) {
            const double p = m.p_exp[i];
            const double log_hw = log_weibull_hazard(params, x);
            // 0 * (-inf) counts as no contribution, not NaN.
            if (p > 0.0)
                q += p * log_he;
            if (p < 1.0) {
                if (log_hw == kNegInf)
                    return kNegInf;
                q += (1.0 - p) * log_hw;
            }
        }
        q -= x / params.eta0;
        q -= std::pow(x / params.eta1, params.beta);
    }
    return std::isnan(q) ? kNegInf : q;
}

double m_step_exponential(const Memberships& m, const CensoredSample& sample)
{
    check_alignment(m, sample);
    double p_total = 0.0;
    const auto& obs = sample.observations();
    for (std::size_t i = 0; i < obs.size(); ++i)
        if (obs[i].event == Event::Failure)
            p_total += m.p_exp[i];
    if (!(p_total > 0.0))
        throw std::domain_error("no membership mass on the exponential cause");
    return sample.total_time() / p_total;
}

double weibull_q_part(const Memberships& m, const CensoredSample& sample,
                      double eta1, double beta)
{
    check_alignment(m, sample);
    const FailureStats fs = failure_stats(m, sample);
    if (fs.zero_time_failure)
        return kNegInf;
    const double u = std::log(eta1);
    const WeibullSums ws = weibull_sums(sample, u, beta);
    const double q = fs.wsum * (std::log(beta) - beta * u) + (beta - 1.0) * fs.wlog - ws.s0;
    return std::isnan(q) ? kNegInf : q;
}

std::array<double, 2> weibull_q_gradient(const Memberships& m, const CensoredSample& sample,
                                         double eta1, double beta)
{
    check_alignment(m, sample);
    const FailureStats fs = failure_stats(m, sample);
    const double u = std::log(eta1);
    const WeibullSums ws = weibull_sums(sample, u, beta);
    const double gu = beta * (ws.s0 - fs.wsum);
    const double gv = fs.wsum * (1.0 - beta * u) + beta * fs.wlog - beta * ws.s1;
    return {gu, gv};
}

WeibullStepResult m_step_weibull(const Memberships& m, const CensoredSample& sample,
                                 double eta1_init, double beta_init)
{
    check_alignment(m, sample);
    if (!(eta1_init > 0.0) || !(beta_init > 0.0))
        throw std::invalid_argument("Weibull M-step initialization must be positive");

    const FailureStats fs = failure_stats(m, sample);
    if (fs.zero_time_failure)
        throw std::domain_error("Weibull hazard weight on a zero failure time");

    constexpr double grad_tol = 1e-8;
    constexpr int max_iter = 100;

    double u = std::log(eta1_init);
    double v = std::log(beta_init);
    double f = weibull_q_part(m, sample, std::exp(u), std::exp(v));
    int iter = 0;

    for (; iter < max_iter; ++iter) {
        const double beta = std::exp(v);
        const WeibullSums ws = weibull_sums(sample, u, beta);
        const double gu = beta * (ws.s0 - fs.wsum);
        const double gv = fs.wsum * (1.0 - beta * u) + beta * fs.wlog - beta * ws.s1;
        if (std::max(std::abs(gu), std::abs(gv)) < grad_tol)
            return {std::exp(u), std::exp(v), true, iter};

        const double huu = -beta * beta * ws.s0;
        const double huv = beta * (ws.s0 - fs.wsum) + beta * beta * ws.s1;
        const double hvv = -beta * u * fs.wsum + beta * fs.wlog - beta * ws.s1 -
                           beta * beta * ws.s2;

        // Newton direction; gradient ascent when the Hessian is singular or
        // the direction does not ascend.
        double du = gu, dv = gv;
        const double det = huu * hvv - huv * huv;
        if (std::isfinite(det) && std::abs(det) > 1e-300) {
            const double nu = -(hvv * gu - huv * gv) / det;
            const double nv = -(-huv * gu + huu * gv) / det;
            if (nu * gu + nv * gv > 0.0) {
                du = nu;
                dv = nv;
            }
        }

        double step = 1.0;
        double fu = kNegInf;
        while (step > 1e-14) {
            fu = weibull_q_part(m, sample, std::exp(u + step * du), std::exp(v + step * dv));
            if (std::isfinite(fu) && fu >= f)
                break;
            step *= 0.5;
        }
        if (step <= 1e-14)
            break; // no ascent possible from here
        u += step * du;
        v += step * dv;
        f = fu;
    }

    const auto g = weibull_q_gradient(m, sample, std::exp(u), std::exp(v));
    const bool ok = std::max(std::abs(g[0]), std::abs(g[1])) < grad_tol;
    return {std::exp(u), std::exp(v), ok, iter};
}

ModelParams em_default_init(const CensoredSample& sample)
{
    const auto& obs = sample.observations();
    const std::size_t n = obs.size();
    const double mean = sample.total_time() / static_cast<double>(n);
    // observations are sorted, so the median reads off directly
    const double median = (n % 2 == 1)
                              ? obs[n / 2].time
                              : 0.5 * (obs[n / 2 - 1].time + obs[n / 2].time);
    const double eta0 = std::max(2.0 * mean, 1e-8);
    const double eta1 = std::max(median, 1e-8);
    return ModelParams(eta0, eta1, 1.2);
}

EmReport em_fit(const CensoredSample& sample, const ModelParams& init,
                const EmOptions& opts, const std::optional<ModelParams>& truth)
{
    if (!(opts.tol > 0.0))
        throw std::invalid_argument("EM tolerance must be positive");

    ModelParams params = init;
    double ll = log_likelihood(params, sample);
    std::vector<double> trace{ll};
    bool converged = false;
    int iter = 0;

    for (; iter < opts.max_iter; ++iter) {
        const Memberships m = e_step(params, sample);
        const double eta0 = m_step_exponential(m, sample);
        const WeibullStepResult w = m_step_weibull(m, sample, params.eta1, params.beta);
        params = ModelParams(eta0, w.eta1, w.beta);
        const double ll_next = log_likelihood(params, sample);
        trace.push_back(ll_next);
        if (std::abs(ll_next - ll) < opts.tol) {
            ll = ll_next;
            converged = true;
            ++iter;
            break;
        }
        ll = ll_next;
    }

    EmReport report{params, iter, std::move(trace), converged, std::nullopt};
    if (truth) {
        report.quadratic_error = std::array<double, 3>{};
        for (int c = 0; c < 3; ++c) {
            const double d = param_coord(params, c) - param_coord(*truth, c);
            (*report.quadratic_error)[c] = d * d;
        }
    }
    return report;
}

EmReport em_fit(const CensoredSample& sample, const EmOptions& opts,
                const std::optional<ModelParams>& truth)
{
    return em_fit(sample, em_default_init(sample), opts, truth);
}

} // namespace crisk
