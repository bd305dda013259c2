#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "crisk/bayes.hpp"
#include "crisk/censor.hpp"
#include "crisk/csv.hpp"
#include "crisk/eval.hpp"
#include "crisk/mle.hpp"
#include "crisk/model.hpp"
#include "crisk/rng.hpp"
#include "crisk/sim.hpp"

namespace {

using nlohmann::json;

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

void write_text(const std::string& path, const std::string& text)
{
    if (path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out)
        throw std::invalid_argument("cannot open '" + path + "' for writing");
    out << text;
}

crisk::ModelParams params_from(const std::vector<double>& triple)
{
    if (triple.size() != 3)
        throw std::invalid_argument("expected eta0,eta1,beta");
    return {triple[0], triple[1], triple[2]};
}

json params_json(const crisk::ModelParams& p)
{
    return {{"eta0", sig6(p.eta0)}, {"eta1", sig6(p.eta1)}, {"beta", sig6(p.beta)}};
}

json bayes_report_json(const crisk::BayesReport& report)
{
    json j;
    j["loss"] = report.loss.label();
    for (int c = 0; c < 3; ++c)
        j[crisk::kParamNames[c]] = {{"estimate", sig6(report.coord(c).estimate)},
                                    {"posterior_risk", sig6(report.coord(c).posterior_risk)}};
    if (!report.warnings.empty())
        j["warnings"] = report.warnings;
    return j;
}

// --- flat key=value config files for the study subcommands ---

std::map<std::string, std::string> read_config_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("cannot open config '" + path + "'");
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        const auto eq = line.find('=');
        std::string key, value;
        if (eq != std::string::npos) {
            key = line.substr(0, eq);
            value = line.substr(eq + 1);
        } else {
            key = line;
        }
        const auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos)
                return std::string();
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        key = trim(key);
        value = trim(value);
        if (key.empty())
            continue;
        if (eq == std::string::npos)
            throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                        ": expected key = value");
        kv[key] = value;
    }
    return kv;
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, sep))
        if (!tok.empty())
            out.push_back(tok);
    return out;
}

crisk::LossSpec parse_loss(const std::string& text)
{
    const auto colon = text.find(':');
    if (colon == std::string::npos)
        throw std::invalid_argument("loss must look like gq:-2, entropy:-1 or linex:-0.5");
    const std::string name = text.substr(0, colon);
    const double value = std::stod(text.substr(colon + 1));
    if (name == "gq")
        return crisk::LossSpec::gq(value);
    if (name == "entropy")
        return crisk::LossSpec::entropy(value);
    if (name == "linex")
        return crisk::LossSpec::linex(value);
    throw std::invalid_argument("unknown loss family '" + name + "'");
}

struct StudyPlan {
    crisk::SimConfig base;
    std::vector<std::size_t> ns{10, 20, 30};
    std::vector<double> fractions{0.1, 0.2};
};

StudyPlan plan_from_config(const std::map<std::string, std::string>& kv,
                           const std::string& study)
{
    StudyPlan plan;
    crisk::SimConfig& cfg = plan.base;

    double eta0 = 2.0, eta1 = 1.0, beta = 2.0;
    double p0_lo = 1.0, p0_hi = 300.0, p1_lo = 1.0, p1_hi = 200.0;
    double beta_lo = 1.0, beta_hi = 5.0;

    for (const auto& [key, value] : kv) {
        if (key == "eta0") eta0 = std::stod(value);
        else if (key == "eta1") eta1 = std::stod(value);
        else if (key == "beta") beta = std::stod(value);
        else if (key == "ns") {
            plan.ns.clear();
            for (const std::string& tok : split(value, ','))
                plan.ns.push_back(static_cast<std::size_t>(std::stoul(tok)));
        } else if (key == "censor_fractions") {
            plan.fractions.clear();
            for (const std::string& tok : split(value, ','))
                plan.fractions.push_back(std::stod(tok));
        } else if (key == "replications") cfg.replications = std::stoul(value);
        else if (key == "master_seed") cfg.master_seed = std::stoull(value);
        else if (key == "workers") cfg.workers = std::stoul(value);
        else if (key == "retain_raw") cfg.retain_raw = (value == "true" || value == "1");
        else if (key == "mh_draws") cfg.mh.n_draws = std::stoul(value);
        else if (key == "mh_burn_in") cfg.mh.burn_in = std::stoul(value);
        else if (key == "mh_thin") cfg.mh.thin = std::stoul(value);
        else if (key == "mh_seed") cfg.mh.seed = std::stoull(value);
        else if (key == "em_tol") cfg.em.tol = std::stod(value);
        else if (key == "em_max_iter") cfg.em.max_iter = std::stoi(value);
        else if (key == "prior_eta0_lo") p0_lo = std::stod(value);
        else if (key == "prior_eta0_hi") p0_hi = std::stod(value);
        else if (key == "prior_eta1_lo") p1_lo = std::stod(value);
        else if (key == "prior_eta1_hi") p1_hi = std::stod(value);
        else if (key == "beta_lo") beta_lo = std::stod(value);
        else if (key == "beta_hi") beta_hi = std::stod(value);
        else if (key == "losses") {
            cfg.losses.clear();
            for (const std::string& tok : split(value, ','))
                cfg.losses.push_back(parse_loss(tok));
        } else {
            throw std::invalid_argument("unknown config key '" + key + "'");
        }
    }

    cfg.truth = crisk::ModelParams(eta0, eta1, beta);
    const auto g0 = crisk::hyperparameters_from_interval(p0_lo, p0_hi);
    const auto g1 = crisk::hyperparameters_from_interval(p1_lo, p1_hi);
    cfg.prior = crisk::PriorSpec(g0[0], g0[1], g1[0], g1[1], beta_lo, beta_hi);

    if (cfg.losses.empty()) {
        if (study == "bayes") {
            for (auto kind : {crisk::LossSpec::Kind::GeneralizedQuadratic,
                              crisk::LossSpec::Kind::Entropy, crisk::LossSpec::Kind::Linex})
                for (const crisk::LossSpec& loss : crisk::sweep_losses(kind))
                    cfg.losses.push_back(loss);
        } else if (study == "compare") {
            cfg.losses = crisk::comparison_losses();
        }
    }
    return plan;
}

std::string cell_name(const std::string& study, std::size_t n, double fraction)
{
    const int pct = static_cast<int>(std::lround(fraction * 100.0));
    return study + "_" + std::to_string(n) + "_" + std::to_string(pct);
}

int run_studies(const std::string& study, const StudyPlan& plan, const std::string& out_dir)
{
    for (std::size_t n : plan.ns) {
        for (double fraction : plan.fractions) {
            crisk::SimConfig cfg = plan.base;
            cfg.n = n;
            cfg.censor_fraction = fraction;

            crisk::StudyResult result = [&] {
                if (study == "mle")
                    return crisk::run_mle_study(cfg);
                if (study == "bayes")
                    return crisk::run_bayes_study(cfg);
                return crisk::run_comparison(cfg);
            }();

            const std::string base = out_dir + "/";
            if (study == "compare") {
                write_text(base + cell_name("pitman", n, fraction) + ".csv",
                           crisk::pitman_csv(result));
                write_text(base + cell_name("imse", n, fraction) + ".csv",
                           crisk::imse_csv(result));
            } else if (study == "bayes") {
                write_text(base + cell_name(study, n, fraction) + ".csv",
                           crisk::bayes_study_csv(result));
            } else {
                write_text(base + cell_name(study, n, fraction) + ".csv",
                           crisk::mle_study_csv(result));
            }
            write_text(base + cell_name(study, n, fraction) + ".json",
                       crisk::study_json(result));
            std::cerr << "wrote " << cell_name(study, n, fraction) << " (excluded "
                      << result.excluded() << " of " << cfg.replications << ")\n";
        }
    }
    return 0;
}

// --- svg line plot for the curves subcommand ---

std::string curves_svg(const crisk::CurveTable& table)
{
    constexpr int width = 960, height = 420, panel = 440, margin = 50;
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#ff7f0e", "#8c564b"};
    std::ostringstream os;
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='"
       << height << "'>\n<rect width='100%' height='100%' fill='white'/>\n";

    const auto panel_plot = [&](int x0, const std::vector<std::vector<double>>& cols,
                                const char* title) {
        double lo = 1e300, hi = -1e300;
        for (const auto& col : cols)
            for (double v : col) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        if (hi <= lo)
            hi = lo + 1.0;
        const double t0 = table.t.front(), t1 = table.t.back();
        const auto sx = [&](double t) {
            return x0 + margin + (t - t0) / (t1 - t0) * (panel - 2 * margin);
        };
        const auto sy = [&](double v) {
            return height - margin - (v - lo) / (hi - lo) * (height - 2 * margin);
        };
        os << "<rect x='" << x0 + margin << "' y='" << margin << "' width='"
           << panel - 2 * margin << "' height='" << height - 2 * margin
           << "' fill='none' stroke='#888'/>\n";
        os << "<text x='" << x0 + panel / 2 << "' y='" << margin - 14
           << "' text-anchor='middle' font-family='sans-serif' font-size='15'>" << title
           << "</text>\n";
        for (std::size_t c = 0; c < cols.size(); ++c) {
            os << "<polyline fill='none' stroke='" << colors[c % 6]
               << "' stroke-width='1.5' points='";
            for (std::size_t i = 0; i < table.t.size(); ++i)
                os << fmt6(sx(table.t[i])) << ',' << fmt6(sy(cols[c][i])) << ' ';
            os << "'/>\n";
            os << "<text x='" << x0 + margin + 8 << "' y='" << margin + 18 + 16 * c
               << "' font-family='sans-serif' font-size='12' fill='" << colors[c % 6]
               << "'>" << table.labels[c] << "</text>\n";
        }
        char buf[80];
        std::snprintf(buf, sizeof buf,
                      "<text x='%d' y='%d' font-family='sans-serif' font-size='11'>t in "
                      "[%g, %g]</text>\n",
                      x0 + margin, height - margin + 26, t0, t1);
        os << buf;
    };

    panel_plot(0, table.survival, "survival");
    panel_plot(panel + 30, table.hazard, "hazard");
    os << "</svg>\n";
    return os.str();
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"competing-risk lifetime model B(eta0, eta1, beta): simulation, "
                 "maximum-likelihood and Bayesian estimation"};
    app.require_subcommand(1);

    // --- sample ---
    auto* cmd_sample = app.add_subcommand("sample", "draw lifetimes and write a sample CSV");
    double s_eta0 = 2.0, s_eta1 = 1.0, s_beta = 2.0, s_fraction = 0.0;
    std::size_t s_n = 30;
    std::uint64_t s_seed = 1;
    std::string s_out = "-";
    cmd_sample->add_option("--eta0", s_eta0, "exponential scale (mean)")->capture_default_str();
    cmd_sample->add_option("--eta1", s_eta1, "Weibull scale")->capture_default_str();
    cmd_sample->add_option("--beta", s_beta, "Weibull shape")->capture_default_str();
    cmd_sample->add_option("--n", s_n, "sample size")->capture_default_str();
    cmd_sample->add_option("--seed", s_seed, "RNG seed")->capture_default_str();
    cmd_sample->add_option("--censor-fraction", s_fraction, "type-II censoring fraction")
        ->capture_default_str();
    cmd_sample->add_option("--out", s_out, "output path, - for stdout")->capture_default_str();

    // --- fit-mle ---
    auto* cmd_mle = app.add_subcommand("fit-mle", "EM fit of a sample CSV, report as JSON");
    std::string m_input;
    std::vector<double> m_init, m_truth;
    double m_tol = 1e-8;
    int m_max_iter = 500;
    cmd_mle->add_option("--input", m_input, "sample CSV (time,event)")->required();
    cmd_mle->add_option("--init", m_init, "initial eta0,eta1,beta")
        ->delimiter(',')
        ->expected(3);
    cmd_mle->add_option("--truth", m_truth, "true eta0,eta1,beta for quadratic error")
        ->delimiter(',')
        ->expected(3);
    cmd_mle->add_option("--tol", m_tol, "log-likelihood convergence tolerance")
        ->capture_default_str();
    cmd_mle->add_option("--max-iter", m_max_iter, "iteration cap")->capture_default_str();

    // --- fit-bayes ---
    auto* cmd_bayes = app.add_subcommand("fit-bayes",
                                         "Metropolis-Hastings fit of a sample CSV, "
                                         "Bayes estimators as JSON");
    std::string b_input, b_chain_out;
    std::vector<double> b_int0{1.0, 300.0}, b_int1{1.0, 200.0}, b_support{1.0, 5.0};
    std::vector<std::string> b_losses;
    std::size_t b_draws = 60000, b_burn = 10000, b_thin = 5;
    std::uint64_t b_seed = 20240101;
    cmd_bayes->add_option("--input", b_input, "sample CSV (time,event)")->required();
    cmd_bayes->add_option("--eta0-interval", b_int0, "prior interval for eta0")
        ->delimiter(',')
        ->expected(2);
    cmd_bayes->add_option("--eta1-interval", b_int1, "prior interval for eta1")
        ->delimiter(',')
        ->expected(2);
    cmd_bayes->add_option("--beta-support", b_support, "uniform support for beta")
        ->delimiter(',')
        ->expected(2);
    cmd_bayes->add_option("--loss", b_losses,
                          "loss spec gq:A | entropy:P | linex:R (repeatable; default "
                          "gq:-2,entropy:-1,linex:-0.5)");
    cmd_bayes->add_option("--draws", b_draws, "total MH draws")->capture_default_str();
    cmd_bayes->add_option("--burn-in", b_burn, "burn-in draws")->capture_default_str();
    cmd_bayes->add_option("--thin", b_thin, "thinning stride")->capture_default_str();
    cmd_bayes->add_option("--seed", b_seed, "chain seed")->capture_default_str();
    cmd_bayes->add_option("--export-chain", b_chain_out, "write the thinned chain CSV here");

    // --- study ---
    auto* cmd_study = app.add_subcommand("study", "replication studies from a config file");
    cmd_study->require_subcommand(1);
    std::string st_config, st_out_dir = ".";
    std::optional<std::size_t> st_workers;
    for (const char* name : {"mle", "bayes", "compare"}) {
        auto* sub = cmd_study->add_subcommand(name);
        sub->add_option("--config", st_config, "flat key = value config file")->required();
        sub->add_option("--out-dir", st_out_dir, "output directory")->capture_default_str();
        sub->add_option("--workers", st_workers, "worker threads (0 = hardware)");
    }

    // --- curves ---
    auto* cmd_curves = app.add_subcommand("curves", "survival/hazard curve table CSV");
    std::vector<double> c_truth{2.0, 1.0, 2.0};
    std::vector<std::string> c_est;
    double c_start = 1.0, c_end = 50.0, c_step = 1.0;
    std::string c_out = "-", c_svg;
    cmd_curves->add_option("--truth", c_truth, "true eta0,eta1,beta")
        ->delimiter(',')
        ->expected(3);
    cmd_curves->add_option("--est", c_est, "fitted params as label=eta0,eta1,beta (repeatable)");
    cmd_curves->add_option("--t-start", c_start, "grid start")->capture_default_str();
    cmd_curves->add_option("--t-end", c_end, "grid end")->capture_default_str();
    cmd_curves->add_option("--t-step", c_step, "grid step")->capture_default_str();
    cmd_curves->add_option("--out", c_out, "CSV path, - for stdout")->capture_default_str();
    cmd_curves->add_option("--svg", c_svg, "also write a simple SVG line plot here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*cmd_sample) {
            crisk::RandomStream rng(s_seed);
            const crisk::ModelParams truth(s_eta0, s_eta1, s_beta);
            const auto times = crisk::sample_lifetimes(truth, s_n, rng);
            const crisk::CensoredSample sample =
                crisk::apply_censoring(times, crisk::CensorScheme(s_fraction));
            std::ostringstream os;
            crisk::write_sample_csv(os, sample.observations());
            write_text(s_out, os.str());
            return 0;
        }

        if (*cmd_mle) {
            const crisk::CensoredSample sample(crisk::read_sample_file(m_input));
            crisk::EmOptions opts;
            opts.tol = m_tol;
            opts.max_iter = m_max_iter;
            std::optional<crisk::ModelParams> truth;
            if (!m_truth.empty())
                truth = params_from(m_truth);
            const crisk::EmReport report =
                m_init.empty() ? crisk::em_fit(sample, opts, truth)
                               : crisk::em_fit(sample, params_from(m_init), opts, truth);
            json j;
            j["params"] = params_json(report.params);
            j["iterations"] = report.iterations;
            j["converged"] = report.converged;
            j["loglik"] = sig6(report.loglik_trace.back());
            json trace = json::array();
            for (double v : report.loglik_trace)
                trace.push_back(sig6(v));
            j["loglik_trace"] = trace;
            if (report.quadratic_error) {
                json qe;
                for (int c = 0; c < 3; ++c)
                    qe[crisk::kParamNames[c]] = sig6((*report.quadratic_error)[c]);
                j["quadratic_error"] = qe;
            }
            std::cout << j.dump(2) << "\n";
            return 0;
        }

        if (*cmd_bayes) {
            const crisk::CensoredSample sample(crisk::read_sample_file(b_input));
            const auto g0 = crisk::hyperparameters_from_interval(b_int0[0], b_int0[1]);
            const auto g1 = crisk::hyperparameters_from_interval(b_int1[0], b_int1[1]);
            const crisk::PriorSpec prior(g0[0], g0[1], g1[0], g1[1], b_support[0],
                                         b_support[1]);
            crisk::MhConfig mh;
            mh.n_draws = b_draws;
            mh.burn_in = b_burn;
            mh.thin = b_thin;
            mh.seed = b_seed;

            std::vector<crisk::LossSpec> losses;
            if (b_losses.empty())
                losses = crisk::comparison_losses();
            else
                for (const std::string& text : b_losses)
                    losses.push_back(parse_loss(text));

            const crisk::PosteriorDraws draws = crisk::mh_sample(sample, prior, mh);
            if (!b_chain_out.empty()) {
                std::ostringstream os;
                crisk::write_chain_csv(os, draws);
                write_text(b_chain_out, os.str());
            }

            json j;
            j["acceptance_rate"] = sig6(draws.acceptance_rate);
            j["kept_draws"] = draws.draws.size();
            if (!draws.warnings.empty())
                j["warnings"] = draws.warnings;
            json reports = json::array();
            for (const crisk::LossSpec& loss : losses)
                reports.push_back(bayes_report_json(crisk::estimate(draws, loss)));
            j["estimates"] = reports;
            std::cout << j.dump(2) << "\n";
            return 0;
        }

        if (*cmd_study) {
            const std::string which = cmd_study->get_subcommands().front()->get_name();
            StudyPlan plan = plan_from_config(read_config_file(st_config), which);
            if (st_workers)
                plan.base.workers = *st_workers;
            return run_studies(which, plan, st_out_dir);
        }

        if (*cmd_curves) {
            std::vector<std::pair<std::string, crisk::ModelParams>> labeled;
            labeled.emplace_back("truth", params_from(c_truth));
            for (const std::string& text : c_est) {
                const auto eq = text.find('=');
                if (eq == std::string::npos)
                    throw std::invalid_argument("--est expects label=eta0,eta1,beta");
                std::vector<double> triple;
                for (const std::string& tok : split(text.substr(eq + 1), ','))
                    triple.push_back(std::stod(tok));
                labeled.emplace_back(text.substr(0, eq), params_from(triple));
            }
            if (!(c_step > 0.0) || c_end < c_start)
                throw std::invalid_argument("bad time grid");
            std::vector<double> grid;
            for (double t = c_start; t <= c_end + 1e-12; t += c_step)
                grid.push_back(t);
            const crisk::CurveTable table = crisk::curve_table(labeled, grid);
            std::ostringstream os;
            crisk::write_curve_csv(os, table);
            write_text(c_out, os.str());
            if (!c_svg.empty())
                write_text(c_svg, curves_svg(table));
            return 0;
        }
    } catch (const crisk::CsvError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
