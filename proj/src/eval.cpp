#include "crisk/eval.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace crisk {

namespace {

void require_paired(const ReplicationSet& a, const ReplicationSet& b)
{
    if (a.estimates.size() != b.estimates.size())
        throw std::invalid_argument("Pitman comparison requires paired replication sets");
    for (int c = 0; c < 3; ++c)
        if (param_coord(a.truth, c) != param_coord(b.truth, c))
            throw std::invalid_argument("Pitman comparison requires a common truth");
}

} // namespace

double pitman_probability(const ReplicationSet& a, const ReplicationSet& b, int coord)
{
    require_paired(a, b);
    if (a.estimates.empty())
        throw std::invalid_argument("Pitman comparison requires nonempty sets");
    const double truth = param_coord(a.truth, coord);
    std::size_t wins = 0;
    for (std::size_t i = 0; i < a.estimates.size(); ++i) {
        const double da = std::abs(param_coord(a.estimates[i], coord) - truth);
        const double db = std::abs(param_coord(b.estimates[i], coord) - truth);
        if (da < db)
            ++wins;
    }
    return static_cast<double>(wins) / static_cast<double>(a.estimates.size());
}

double imse(const ReplicationSet& set, int coord)
{
    if (set.estimates.empty())
        throw std::invalid_argument("IMSE requires a nonempty replication set");
    const double truth = param_coord(set.truth, coord);
    double acc = 0.0;
    for (const ModelParams& e : set.estimates) {
        const double d = param_coord(e, coord) - truth;
        acc += d * d;
    }
    return acc / static_cast<double>(set.estimates.size());
}

std::array<double, 3> quadratic_error(const ModelParams& estimate, const ModelParams& truth)
{
    std::array<double, 3> out{};
    for (int c = 0; c < 3; ++c) {
        const double d = param_coord(estimate, c) - param_coord(truth, c);
        out[c] = d * d;
    }
    return out;
}

CurveTable curve_table(const std::vector<std::pair<std::string, ModelParams>>& params,
                       const std::vector<double>& t_grid)
{
    if (t_grid.empty())
        throw std::invalid_argument("time grid must be nonempty");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (t_grid[i] < t_grid[i - 1])
            throw std::invalid_argument("time grid must be nondecreasing");

    CurveTable table;
    table.t = t_grid;
    for (const auto& [label, p] : params) {
        table.labels.push_back(label);
        std::vector<double> surv, haz;
        surv.reserve(t_grid.size());
        haz.reserve(t_grid.size());
        for (double t : t_grid) {
            surv.push_back(survival(p, t));
            haz.push_back(hazard(p, t));
        }
        table.survival.push_back(std::move(surv));
        table.hazard.push_back(std::move(haz));
    }
    return table;
}

std::vector<double> default_time_grid()
{
    std::vector<double> grid;
    grid.reserve(50);
    for (int t = 1; t <= 50; ++t)
        grid.push_back(static_cast<double>(t));
    return grid;
}

void write_curve_csv(std::ostream& os, const CurveTable& table)
{
    os << "t";
    for (const std::string& label : table.labels)
        os << ",survival_" << label << ",hazard_" << label;
    os << "\n";
    char buf[40];
    for (std::size_t row = 0; row < table.t.size(); ++row) {
        std::snprintf(buf, sizeof buf, "%.6g", table.t[row]);
        os << buf;
        for (std::size_t c = 0; c < table.labels.size(); ++c) {
            std::snprintf(buf, sizeof buf, ",%.6g", table.survival[c][row]);
            os << buf;
            std::snprintf(buf, sizeof buf, ",%.6g", table.hazard[c][row]);
            os << buf;
        }
        os << "\n";
    }
}

} // namespace crisk
