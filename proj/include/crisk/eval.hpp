#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "crisk/model.hpp"

namespace crisk {

// Estimates of one estimator across Monte-Carlo replications, with the
// generating truth.
struct ReplicationSet {
    std::vector<ModelParams> estimates;
    ModelParams truth;
};

// Pitman closeness: fraction of paired replications where estimator a is
// strictly closer to the truth than estimator b on the chosen coordinate.
// Ties count for neither side. Throws when the sets are not paired (unequal
// lengths or different truths).
double pitman_probability(const ReplicationSet& a, const ReplicationSet& b, int coord);

// Integrated mean square error sum (theta_i - theta)^2 / N.
double imse(const ReplicationSet& set, int coord);

// Per-coordinate squared estimation error.
std::array<double, 3> quadratic_error(const ModelParams& estimate, const ModelParams& truth);

/**
 * Survival and hazard curves for a labeled list of parameter triples on a
 * common time grid, ready for CSV export or plotting.
 */
struct CurveTable {
    std::vector<double> t;
    std::vector<std::string> labels;
    // indexed [label][row]
    std::vector<std::vector<double>> survival;
    std::vector<std::vector<double>> hazard;
};

CurveTable curve_table(const std::vector<std::pair<std::string, ModelParams>>& params,
                       const std::vector<double>& t_grid);

// The paper-study grid t = 1, 2, ..., 50.
std::vector<double> default_time_grid();

void write_curve_csv(std::ostream& os, const CurveTable& table);

} // namespace crisk
