#include "crisk/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "crisk/mle.hpp"

namespace crisk {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Posterior kernel in integration coordinates (y0, y1, b) =
// (log eta0, log eta1, beta), log-Jacobian eta0*eta1 folded in. Split into
// axis pieces so grid evaluation can hoist them:
//   target = C(y0) + D(y1, b) + sum over failures log(1/eta0 + h_i(y1, b)).
struct KernelGeometry {
    std::vector<double> times;         // all observation times > 0
    std::vector<double> failure_times; // failure times
    double total_time = 0.0;
    double a1, b1, a2, b2;

    explicit KernelGeometry(const CensoredSample& sample, const PriorSpec& prior)
        : a1(prior.a1), b1(prior.b1), a2(prior.a2), b2(prior.b2)
    {
        for (const Observation& o : sample.observations()) {
            total_time += o.time;
            if (o.time > 0.0) {
                times.push_back(o.time);
                if (o.event == Event::Failure)
                    failure_times.push_back(o.time);
            }
        }
    }

    double eta0_part(double y0) const
    {
        return b1 * y0 - a1 * std::exp(y0) - total_time * std::exp(-y0);
    }

    // b2*y1 - a2*eta1 - sum (x_i/eta1)^beta
    double eta1_beta_part(double y1, double b) const
    {
        const double eta1 = std::exp(y1);
        double acc = b2 * y1 - a2 * eta1;
        for (double x : times)
            acc -= std::pow(x / eta1, b);
        return acc;
    }

    void weibull_failure_hazards(double y1, double b, std::vector<double>& out) const
    {
        const double eta1 = std::exp(y1);
        out.clear();
        for (double x : failure_times)
            out.push_back((b / eta1) * std::pow(x / eta1, b - 1.0));
    }

    double target(double y0, double y1, double b) const
    {
        double t = eta0_part(y0) + eta1_beta_part(y1, b);
        const double inv0 = std::exp(-y0);
        for (double x : failure_times) {
            const double eta1 = std::exp(y1);
            t += std::log(inv0 + (b / eta1) * std::pow(x / eta1, b - 1.0));
        }
        return t;
    }
};

// Golden-section line maximization of f over [lo, hi].
template <typename F>
double golden_max(F&& f, double lo, double hi)
{
    constexpr double inv_phi = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < 60 && (b - a) > 1e-10; ++i) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

struct Axis {
    double lo = 0.0;
    double hi = 0.0;
};

// Simpson weight pattern 1,4,2,...,4,1 (the h/3 factor cancels in
// expectation ratios).
std::vector<double> simpson_weights(std::size_t m)
{
    std::vector<double> w(m, 2.0);
    for (std::size_t i = 1; i < m; i += 2)
        w[i] = 4.0;
    w.front() = w.back() = 1.0;
    return w;
}

std::vector<double> linspace(double lo, double hi, std::size_t m)
{
    std::vector<double> v(m);
    const double h = (hi - lo) / static_cast<double>(m - 1);
    for (std::size_t i = 0; i < m; ++i)
        v[i] = lo + h * static_cast<double>(i);
    v.back() = hi;
    return v;
}

// Marginal kernel masses per axis node, enough to form any expectation of a
// single-coordinate function.
struct GridMarginals {
    std::vector<double> node_eta0, node_eta1, node_beta; // parameter values
    std::vector<double> w0, w1, w2;                      // Simpson weights
    std::vector<double> m0, m1, m2;                      // marginal masses
    double z = 0.0;

    // normalized E[g(coordinate)]
    template <typename G>
    double expect(int coord, G&& g) const
    {
        const std::vector<double>* nodes = nullptr;
        const std::vector<double>* wt = nullptr;
        const std::vector<double>* mg = nullptr;
        switch (coord) {
        case 0: nodes = &node_eta0; wt = &w0; mg = &m0; break;
        case 1: nodes = &node_eta1; wt = &w1; mg = &m1; break;
        default: nodes = &node_beta; wt = &w2; mg = &m2; break;
        }
        double acc = 0.0;
        for (std::size_t i = 0; i < nodes->size(); ++i)
            acc += (*wt)[i] * (*mg)[i] * g((*nodes)[i]);
        return acc / z;
    }
};

GridMarginals evaluate_grid(const KernelGeometry& geom, const Axis& ax0, const Axis& ax1,
                            const Axis& axb, std::size_t m)
{
    GridMarginals grid;
    const std::vector<double> y0 = linspace(ax0.lo, ax0.hi, m);
    const std::vector<double> y1 = linspace(ax1.lo, ax1.hi, m);
    const std::vector<double> bb = linspace(axb.lo, axb.hi, m);
    grid.w0 = grid.w1 = grid.w2 = simpson_weights(m);

    grid.node_eta0.resize(m);
    grid.node_eta1.resize(m);
    grid.node_beta = bb;
    for (std::size_t j = 0; j < m; ++j) {
        grid.node_eta0[j] = std::exp(y0[j]);
        grid.node_eta1[j] = std::exp(y1[j]);
    }

    // axis pieces shifted by their own maxima; constants cancel in ratios
    std::vector<double> c_part(m);
    double c_max = kNegInf;
    for (std::size_t j = 0; j < m; ++j) {
        c_part[j] = geom.eta0_part(y0[j]);
        c_max = std::max(c_max, c_part[j]);
    }
    std::vector<double> e0(m), inv0(m);
    for (std::size_t j = 0; j < m; ++j) {
        e0[j] = std::exp(c_part[j] - c_max);
        inv0[j] = 1.0 / grid.node_eta0[j];
    }

    std::vector<std::vector<double>> d_part(m, std::vector<double>(m));
    double d_max = kNegInf;
    for (std::size_t k = 0; k < m; ++k)
        for (std::size_t l = 0; l < m; ++l) {
            d_part[k][l] = geom.eta1_beta_part(y1[k], bb[l]);
            d_max = std::max(d_max, d_part[k][l]);
        }

    grid.m0.assign(m, 0.0);
    grid.m1.assign(m, 0.0);
    grid.m2.assign(m, 0.0);

    std::vector<double> hw;
    hw.reserve(geom.failure_times.size());
    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t l = 0; l < m; ++l) {
            const double e1 = std::exp(d_part[k][l] - d_max);
            if (e1 == 0.0)
                continue;
            geom.weibull_failure_hazards(y1[k], bb[l], hw);
            const double wkl = grid.w1[k] * grid.w2[l];
            double row_wj = 0.0; // sum over j of w_j * cell
            for (std::size_t j = 0; j < m; ++j) {
                double prod = e0[j] * e1;
                for (double h : hw)
                    prod *= inv0[j] + h;
                grid.m0[j] += wkl * prod;
                row_wj += grid.w0[j] * prod;
            }
            grid.m1[k] += grid.w2[l] * row_wj;
            grid.m2[l] += grid.w1[k] * row_wj;
        }
    }

    for (std::size_t j = 0; j < m; ++j)
        grid.z += grid.w0[j] * grid.m0[j];
    if (!(grid.z > 0.0) || !std::isfinite(grid.z))
        throw std::runtime_error("posterior quadrature mass vanished or overflowed");
    return grid;
}

BayesReport estimates_from_grid(const GridMarginals& grid, const LossSpec& loss)
{
    BayesReport report{{}, {}, {}, loss, {}};
    for (int c = 0; c < 3; ++c) {
        ParamEstimate pe;
        switch (loss.kind) {
        case LossSpec::Kind::GeneralizedQuadratic: {
            const double alpha = loss.parameter;
            const double m_lo = grid.expect(c, [&](double v) { return std::pow(v, alpha - 1.0); });
            const double m_mid = grid.expect(c, [&](double v) { return std::pow(v, alpha); });
            const double m_hi = grid.expect(c, [&](double v) { return std::pow(v, alpha + 1.0); });
            pe.estimate = m_mid / m_lo;
            pe.posterior_risk = m_hi - 2.0 * pe.estimate * m_mid + pe.estimate * pe.estimate * m_lo;
            break;
        }
        case LossSpec::Kind::Entropy: {
            const double p = loss.parameter;
            const double m = grid.expect(c, [&](double v) { return std::pow(v, -p); });
            const double mlog = grid.expect(c, [&](double v) { return std::log(v); });
            pe.estimate = std::pow(m, -1.0 / p);
            pe.posterior_risk = p * (mlog - std::log(pe.estimate));
            break;
        }
        case LossSpec::Kind::Linex: {
            const double r = loss.parameter;
            const double mexp = grid.expect(c, [&](double v) { return std::exp(-r * v); });
            const double mean = grid.expect(c, [&](double v) { return v; });
            pe.estimate = -std::log(mexp) / r;
            pe.posterior_risk = r * (mean - pe.estimate);
            break;
        }
        }
        report.coord(c) = pe;
    }
    return report;
}

} // namespace

BayesReport quadrature_oracle(const CensoredSample& sample, const PriorSpec& prior,
                              const LossSpec& loss)
{
    if (sample.size() > 10)
        throw std::invalid_argument("quadrature oracle is limited to samples with n <= 10");

    const KernelGeometry geom(sample, prior);

    // mode search: cyclic golden-section ascent from a data-scaled start
    const ModelParams init = em_default_init(sample);
    const double beta_margin = 0.05 * (prior.beta_hi - prior.beta_lo);
    double y0 = std::log(init.eta0);
    double y1 = std::log(init.eta1);
    double bv = std::clamp(1.5, prior.beta_lo + beta_margin, prior.beta_hi - beta_margin);
    for (int sweep = 0; sweep < 6; ++sweep) {
        const double w = 3.0 / (1 << std::min(sweep, 3));
        y0 = golden_max([&](double t) { return geom.target(t, y1, bv); }, y0 - w, y0 + w);
        y1 = golden_max([&](double t) { return geom.target(y0, t, bv); }, y1 - w, y1 + w);
        bv = golden_max([&](double t) { return geom.target(y0, y1, t); },
                        std::max(prior.beta_lo, bv - w), std::min(prior.beta_hi, bv + w));
    }
    const double peak = geom.target(y0, y1, bv);
    if (!std::isfinite(peak))
        throw std::runtime_error("posterior mode search failed");

    // truncation: walk each axis outward until the kernel drops 50 nats
    constexpr double drop = 50.0;
    const auto scan = [&](auto&& f, double start, double step, double cap) {
        double t = start;
        while (std::abs(t - start) < std::abs(cap - start) &&
               f(t) > peak - drop)
            t += step;
        return step > 0.0 ? std::min(t, cap) : std::max(t, cap);
    };
    Axis ax0, ax1, axb;
    ax0.lo = scan([&](double t) { return geom.target(t, y1, bv); }, y0, -0.05, y0 - 60.0);
    ax0.hi = scan([&](double t) { return geom.target(t, y1, bv); }, y0, 0.05, y0 + 60.0);
    ax1.lo = scan([&](double t) { return geom.target(y0, t, bv); }, y1, -0.05, y1 - 60.0);
    ax1.hi = scan([&](double t) { return geom.target(y0, t, bv); }, y1, 0.05, y1 + 60.0);
    const double bstep = 0.005 * (prior.beta_hi - prior.beta_lo);
    axb.lo = scan([&](double t) { return geom.target(y0, y1, t); }, bv, -bstep, prior.beta_lo);
    axb.hi = scan([&](double t) { return geom.target(y0, y1, t); }, bv, bstep, prior.beta_hi);

    // refine the tensor grid until the answers stabilize
    BayesReport prev{{}, {}, {}, loss, {}};
    bool have_prev = false;
    for (std::size_t m : {201u, 401u, 801u}) {
        const GridMarginals grid = evaluate_grid(geom, ax0, ax1, axb, m);
        BayesReport cur = estimates_from_grid(grid, loss);
        if (have_prev) {
            bool stable = true;
            for (int c = 0; c < 3; ++c) {
                const auto close = [](double a, double b) {
                    return std::abs(a - b) <= 1e-4 * std::max({std::abs(a), std::abs(b), 1e-8});
                };
                if (!close(cur.coord(c).estimate, prev.coord(c).estimate) ||
                    !close(cur.coord(c).posterior_risk, prev.coord(c).posterior_risk))
                    stable = false;
            }
            if (stable)
                return cur;
        }
        prev = cur;
        have_prev = true;
    }
    throw std::runtime_error("posterior quadrature did not stabilize after refinement");
}

} // namespace crisk
