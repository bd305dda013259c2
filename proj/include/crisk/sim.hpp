#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "crisk/bayes.hpp"
#include "crisk/censor.hpp"
#include "crisk/eval.hpp"
#include "crisk/mle.hpp"
#include "crisk/model.hpp"

namespace crisk {

/**
 * One cell of the replication study: N samples of size n from `truth`,
 * censored at `censor_fraction`, fitted by the configured estimators.
 * Replication i derives its data and chain seeds from master_seed by the
 * counter split in rng.hpp, so results are independent of the worker count.
 */
struct SimConfig {
    ModelParams truth{2.0, 1.0, 2.0};
    std::size_t n = 30;
    std::size_t replications = 1000;
    double censor_fraction = 0.1;
    PriorSpec prior = default_study_prior();
    std::vector<LossSpec> losses;
    MhConfig mh = study_mh_defaults();
    EmOptions em;
    std::uint64_t master_seed = 1;
    std::size_t workers = 0; // 0 = hardware concurrency
    bool retain_raw = false; // keep per-replication estimates in JSON export

    static MhConfig study_mh_defaults();
};

// Per-replication outcomes. MLE entries are absent when EM did not
// converge; such replications are excluded from aggregates and counted.
struct ReplicationRecord {
    std::uint64_t seed = 0;
    std::uint64_t data_digest = 0;
    bool em_converged = true;
    std::optional<ModelParams> mle;
    std::vector<BayesReport> bayes; // one per configured loss
    std::vector<std::string> warnings;
};

struct StudyResult {
    SimConfig config;
    std::vector<ReplicationRecord> replications;

    std::size_t excluded() const; // replications dropped from aggregates

    // Aggregates over included replications.
    std::array<double, 3> mle_mean() const;
    std::array<double, 3> mle_mean_quadratic_error() const;
    std::array<double, 3> bayes_mean(std::size_t loss_index) const;
    std::array<double, 3> bayes_mean_posterior_risk(std::size_t loss_index) const;

    // Raw estimates as paired replication sets (included replications only,
    // identical data per replication across estimators).
    ReplicationSet mle_set() const;
    ReplicationSet bayes_set(std::size_t loss_index) const;
};

// FNV-1a over the simulated time bit patterns; identifies a replication's
// dataset so pairing can be verified.
std::uint64_t dataset_digest(const std::vector<double>& times);

// MLE study (paper tables 2-3 layout): EM per replication, quadratic errors.
StudyResult run_mle_study(const SimConfig& config);

// Bayes study (tables 4-6 layout): one chain per replication, every
// configured loss applied to it.
StudyResult run_bayes_study(const SimConfig& config);

// Paired comparison (tables 8-9): EM and the chain share each replication's
// dataset; Pitman and IMSE matrices come from the retained estimates.
StudyResult run_comparison(const SimConfig& config);

// Losses used by the paper's comparison: GQ(-2), entropy(-1), Linex(-0.5).
std::vector<LossSpec> comparison_losses();

// Loss-parameter sweep {-2,-1,-0.5,0.5,1,2} for one family.
std::vector<LossSpec> sweep_losses(LossSpec::Kind kind);

// Table exports; every numeric cell uses 6 significant digits.
std::string mle_study_csv(const StudyResult& result);
std::string bayes_study_csv(const StudyResult& result);
std::string pitman_csv(const StudyResult& result);
std::string imse_csv(const StudyResult& result);
std::string study_json(const StudyResult& result);

} // namespace crisk
