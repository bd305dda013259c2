#include "crisk/sim.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "crisk/rng.hpp"

namespace crisk {

namespace {

std::string fmt6(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

double sig6(double v)
{
    return std::atof(fmt6(v).c_str());
}

void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& body)
{
    if (workers == 0)
        workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            body(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count)
                    return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error)
                        error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (std::thread& t : pool)
        t.join();
    if (error)
        std::rethrow_exception(error);
}

enum class StudyKind { Mle, Bayes, Compare };

const char* kind_name(StudyKind kind)
{
    switch (kind) {
    case StudyKind::Mle: return "mle";
    case StudyKind::Bayes: return "bayes";
    case StudyKind::Compare: return "compare";
    }
    return "?";
}

StudyResult run_study(const SimConfig& config, StudyKind kind)
{
    if (config.replications < 1)
        throw std::invalid_argument("study needs at least one replication");
    const bool with_bayes = kind != StudyKind::Mle;
    if (with_bayes && config.losses.empty())
        throw std::invalid_argument("Bayesian study needs at least one loss");

    StudyResult result{config, {}};
    result.replications.resize(config.replications);

    parallel_for(config.replications, config.workers, [&](std::size_t i) {
        ReplicationRecord rec;
        rec.seed = derive_seed(config.master_seed, 2 * i);
        RandomStream rng(rec.seed);
        std::vector<double> times = sample_lifetimes(config.truth, config.n, rng);
        rec.data_digest = dataset_digest(times);
        const CensoredSample sample =
            apply_censoring(std::move(times), CensorScheme(config.censor_fraction));

        const EmReport em = em_fit(sample, config.em, config.truth);
        rec.em_converged = em.converged;
        rec.mle = em.params;

        if (with_bayes && em.converged) {
            MhConfig mh = config.mh;
            mh.seed = derive_seed(config.master_seed, 2 * i + 1);
            const ModelParams start = clamp_into_support(em.params, config.prior);
            const auto kernel = [&](const ModelParams& p) {
                return log_posterior_kernel(p, sample, config.prior);
            };
            const PosteriorDraws draws = mh_sample_kernel(kernel, config.prior, mh, start);
            for (const std::string& w : draws.warnings)
                rec.warnings.push_back(w);
            rec.bayes.reserve(config.losses.size());
            for (const LossSpec& loss : config.losses)
                rec.bayes.push_back(estimate(draws, loss));
        }
        result.replications[i] = std::move(rec);
    });
    return result;
}

template <typename F>
std::array<double, 3> mean_over_included(const StudyResult& result, F&& value)
{
    std::array<double, 3> acc{0.0, 0.0, 0.0};
    std::size_t count = 0;
    for (const ReplicationRecord& rec : result.replications) {
        if (!rec.em_converged)
            continue;
        for (int c = 0; c < 3; ++c)
            acc[c] += value(rec, c);
        ++count;
    }
    if (count == 0)
        throw std::runtime_error("no converged replications to aggregate");
    for (double& v : acc)
        v /= static_cast<double>(count);
    return acc;
}

} // namespace

MhConfig SimConfig::study_mh_defaults()
{
    MhConfig mh;
    mh.n_draws = 20000;
    mh.burn_in = 5000;
    mh.thin = 5;
    return mh;
}

std::uint64_t dataset_digest(const std::vector<double>& times)
{
    std::uint64_t h = 1469598103934665603ULL; // FNV-1a
    for (double t : times) {
        std::uint64_t bits;
        std::memcpy(&bits, &t, sizeof bits);
        for (int byte = 0; byte < 8; ++byte) {
            h ^= (bits >> (8 * byte)) & 0xffULL;
            h *= 1099511628211ULL;
        }
    }
    return h;
}

std::size_t StudyResult::excluded() const
{
    std::size_t n = 0;
    for (const ReplicationRecord& rec : replications)
        if (!rec.em_converged)
            ++n;
    return n;
}

std::array<double, 3> StudyResult::mle_mean() const
{
    return mean_over_included(*this, [](const ReplicationRecord& rec, int c) {
        return param_coord(*rec.mle, c);
    });
}

std::array<double, 3> StudyResult::mle_mean_quadratic_error() const
{
    const ModelParams& truth = config.truth;
    return mean_over_included(*this, [&](const ReplicationRecord& rec, int c) {
        const double d = param_coord(*rec.mle, c) - param_coord(truth, c);
        return d * d;
    });
}

std::array<double, 3> StudyResult::bayes_mean(std::size_t loss_index) const
{
    return mean_over_included(*this, [&](const ReplicationRecord& rec, int c) {
        return rec.bayes.at(loss_index).coord(c).estimate;
    });
}

std::array<double, 3> StudyResult::bayes_mean_posterior_risk(std::size_t loss_index) const
{
    return mean_over_included(*this, [&](const ReplicationRecord& rec, int c) {
        return rec.bayes.at(loss_index).coord(c).posterior_risk;
    });
}

ReplicationSet StudyResult::mle_set() const
{
    ReplicationSet set{{}, config.truth};
    for (const ReplicationRecord& rec : replications)
        if (rec.em_converged)
            set.estimates.push_back(*rec.mle);
    return set;
}

ReplicationSet StudyResult::bayes_set(std::size_t loss_index) const
{
    ReplicationSet set{{}, config.truth};
    for (const ReplicationRecord& rec : replications) {
        if (!rec.em_converged)
            continue;
        const BayesReport& report = rec.bayes.at(loss_index);
        set.estimates.push_back(ModelParams(report.eta0.estimate, report.eta1.estimate,
                                            report.beta.estimate));
    }
    return set;
}

StudyResult run_mle_study(const SimConfig& config)
{
    return run_study(config, StudyKind::Mle);
}

StudyResult run_bayes_study(const SimConfig& config)
{
    return run_study(config, StudyKind::Bayes);
}

StudyResult run_comparison(const SimConfig& config)
{
    SimConfig cfg = config;
    if (cfg.losses.empty())
        cfg.losses = comparison_losses();
    return run_study(cfg, StudyKind::Compare);
}

std::vector<LossSpec> comparison_losses()
{
    return {LossSpec::gq(-2.0), LossSpec::entropy(-1.0), LossSpec::linex(-0.5)};
}

std::vector<LossSpec> sweep_losses(LossSpec::Kind kind)
{
    std::vector<LossSpec> out;
    for (double v : {-2.0, -1.0, -0.5, 0.5, 1.0, 2.0})
        out.push_back(LossSpec{kind, v});
    return out;
}

std::string mle_study_csv(const StudyResult& result)
{
    std::ostringstream os;
    os << "n,censor_fraction,parameter,mean_estimate,mean_quadratic_error,"
          "quadratic_error_of_mean,replications,excluded\n";
    const auto mean = result.mle_mean();
    const auto mqe = result.mle_mean_quadratic_error();
    for (int c = 0; c < 3; ++c) {
        const double dm = mean[c] - param_coord(result.config.truth, c);
        os << result.config.n << ',' << fmt6(result.config.censor_fraction) << ','
           << kParamNames[c] << ',' << fmt6(mean[c]) << ',' << fmt6(mqe[c]) << ','
           << fmt6(dm * dm) << ',' << result.replications.size() << ','
           << result.excluded() << "\n";
    }
    return os.str();
}

std::string bayes_study_csv(const StudyResult& result)
{
    std::ostringstream os;
    os << "n,censor_fraction,parameter,loss,mean_estimate,mean_posterior_risk,"
          "replications,excluded\n";
    for (std::size_t j = 0; j < result.config.losses.size(); ++j) {
        const auto mean = result.bayes_mean(j);
        const auto pr = result.bayes_mean_posterior_risk(j);
        for (int c = 0; c < 3; ++c) {
            os << result.config.n << ',' << fmt6(result.config.censor_fraction) << ','
               << kParamNames[c] << ',' << result.config.losses[j].label() << ','
               << fmt6(mean[c]) << ',' << fmt6(pr[c]) << ',' << result.replications.size()
               << ',' << result.excluded() << "\n";
        }
    }
    return os.str();
}

std::string pitman_csv(const StudyResult& result)
{
    std::ostringstream os;
    os << "n,censor_fraction,parameter,loss,pitman_probability\n";
    const ReplicationSet mle = result.mle_set();
    for (std::size_t j = 0; j < result.config.losses.size(); ++j) {
        const ReplicationSet bayes = result.bayes_set(j);
        for (int c = 0; c < 3; ++c) {
            os << result.config.n << ',' << fmt6(result.config.censor_fraction) << ','
               << kParamNames[c] << ',' << result.config.losses[j].label() << ','
               << fmt6(pitman_probability(bayes, mle, c)) << "\n";
        }
    }
    return os.str();
}

std::string imse_csv(const StudyResult& result)
{
    std::ostringstream os;
    os << "n,censor_fraction,parameter,estimator,imse\n";
    const ReplicationSet mle = result.mle_set();
    for (int c = 0; c < 3; ++c)
        os << result.config.n << ',' << fmt6(result.config.censor_fraction) << ','
           << kParamNames[c] << ",mle," << fmt6(imse(mle, c)) << "\n";
    for (std::size_t j = 0; j < result.config.losses.size(); ++j) {
        const ReplicationSet bayes = result.bayes_set(j);
        for (int c = 0; c < 3; ++c)
            os << result.config.n << ',' << fmt6(result.config.censor_fraction) << ','
               << kParamNames[c] << ',' << result.config.losses[j].label() << ','
               << fmt6(imse(bayes, c)) << "\n";
    }
    return os.str();
}

std::string study_json(const StudyResult& result)
{
    using nlohmann::json;
    const SimConfig& cfg = result.config;

    json j;
    j["config"] = {
        {"truth", {{"eta0", cfg.truth.eta0}, {"eta1", cfg.truth.eta1}, {"beta", cfg.truth.beta}}},
        {"n", cfg.n},
        {"replications", cfg.replications},
        {"censor_fraction", cfg.censor_fraction},
        {"master_seed", cfg.master_seed},
        {"mh", {{"n_draws", cfg.mh.n_draws}, {"burn_in", cfg.mh.burn_in}, {"thin", cfg.mh.thin}}},
        {"prior",
         {{"a1", sig6(cfg.prior.a1)},
          {"b1", sig6(cfg.prior.b1)},
          {"a2", sig6(cfg.prior.a2)},
          {"b2", sig6(cfg.prior.b2)},
          {"beta_lo", cfg.prior.beta_lo},
          {"beta_hi", cfg.prior.beta_hi}}},
    };
    j["excluded"] = result.excluded();

    const bool with_bayes = !result.replications.empty() && !result.replications.front().bayes.empty();
    {
        const auto mean = result.mle_mean();
        const auto mqe = result.mle_mean_quadratic_error();
        json m;
        for (int c = 0; c < 3; ++c)
            m[kParamNames[c]] = {{"mean_estimate", sig6(mean[c])},
                                 {"mean_quadratic_error", sig6(mqe[c])}};
        j["mle"] = m;
    }
    if (with_bayes) {
        json arr = json::array();
        for (std::size_t l = 0; l < cfg.losses.size(); ++l) {
            const auto mean = result.bayes_mean(l);
            const auto pr = result.bayes_mean_posterior_risk(l);
            json e;
            e["loss"] = cfg.losses[l].label();
            for (int c = 0; c < 3; ++c)
                e[kParamNames[c]] = {{"mean_estimate", sig6(mean[c])},
                                     {"mean_posterior_risk", sig6(pr[c])}};
            arr.push_back(e);
        }
        j["bayes"] = arr;
    }
    if (cfg.retain_raw) {
        json raws = json::array();
        for (const ReplicationRecord& rec : result.replications) {
            json r;
            r["seed"] = rec.seed;
            r["data_digest"] = rec.data_digest;
            r["em_converged"] = rec.em_converged;
            if (rec.mle)
                r["mle"] = {sig6(rec.mle->eta0), sig6(rec.mle->eta1), sig6(rec.mle->beta)};
            if (!rec.bayes.empty()) {
                json b = json::array();
                for (const BayesReport& br : rec.bayes)
                    b.push_back({sig6(br.eta0.estimate), sig6(br.eta1.estimate),
                                 sig6(br.beta.estimate)});
                r["bayes"] = b;
            }
            raws.push_back(r);
        }
        j["raw"] = raws;
    }
    return j.dump(2) + "\n";
}

} // namespace crisk
