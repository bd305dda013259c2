#pragma once

#include <array>
#include <optional>
#include <vector>

#include "crisk/model.hpp"

namespace crisk {

/**
 * Expected failure-cause labels from the E-step. p_exp[i] is the
 * probability that failure i came from the exponential cause,
 * h_E / (h_E + h_W); entries for censored observations are stored as 0 and
 * contribute no hazard term downstream.
 */
struct Memberships {
    std::vector<double> p_exp;
};

Memberships e_step(const ModelParams& params, const CensoredSample& sample);

// Expected complete-data log-likelihood given memberships:
//   sum over failures [p log h_E + (1-p) log h_W]
// + sum over all observations [log S_E + log S_W].
// Returns -infinity when a weighted hazard term vanishes at a failure time.
double q_function(const ModelParams& params, const Memberships& m,
                  const CensoredSample& sample);

// Closed-form maximizer of the exponential block of the Q-function:
//   eta0 = (sum of all times) / (sum of failure memberships).
// Throws std::domain_error when no membership mass is assigned.
double m_step_exponential(const Memberships& m, const CensoredSample& sample);

// Weibull block of the Q-function and its gradient in (log eta1, log beta)
// coordinates; exposed for finite-difference checks.
double weibull_q_part(const Memberships& m, const CensoredSample& sample,
                      double eta1, double beta);
std::array<double, 2> weibull_q_gradient(const Memberships& m, const CensoredSample& sample,
                                         double eta1, double beta);

struct WeibullStepResult {
    double eta1;
    double beta;
    bool converged;
    int iterations;
};

// Newton-Raphson ascent of the Weibull Q-block in log coordinates with step
// halving; falls back to a gradient step when the Hessian is singular or
// not a descent direction. Never returns a point with a lower objective
// than the initial one.
WeibullStepResult m_step_weibull(const Memberships& m, const CensoredSample& sample,
                                 double eta1_init, double beta_init);

struct EmOptions {
    double tol = 1e-8;
    int max_iter = 500;
};

struct EmReport {
    ModelParams params;
    int iterations;
    std::vector<double> loglik_trace;
    bool converged;
    std::optional<std::array<double, 3>> quadratic_error;
};

ModelParams em_default_init(const CensoredSample& sample);

// EM loop: e_step, closed-form exponential M-step, Newton Weibull M-step,
// until the observed-data log-likelihood moves less than tol or max_iter is
// hit. The trace holds the log-likelihood at the initial point and after
// each iteration. If `truth` is given, the report carries the squared
// estimation errors per coordinate.
EmReport em_fit(const CensoredSample& sample, const ModelParams& init,
                const EmOptions& opts = {},
                const std::optional<ModelParams>& truth = std::nullopt);
EmReport em_fit(const CensoredSample& sample, const EmOptions& opts = {},
                const std::optional<ModelParams>& truth = std::nullopt);

} // namespace crisk
