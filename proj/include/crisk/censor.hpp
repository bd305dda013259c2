#pragma once

#include <cstddef>
#include <vector>

#include "crisk/model.hpp"

namespace crisk {

/**
 * Fixed-percentage right censoring. A fraction f of a sample of size n is
 * censored type-II style: the largest round(n*f) observations are replaced
 * by censored entries at the time of the last retained failure. At least
 * one observation always remains a failure.
 */
struct CensorScheme {
    double fraction;

    explicit CensorScheme(double fraction_);

    // round(n * fraction), half away from zero.
    std::size_t censored_count(std::size_t n) const;
};

// Sorts `times` ascending; keeps the first r = n - round(n*fraction) order
// statistics as failures and censors the rest at the r-th order statistic.
// Throws std::invalid_argument when r would be 0 or times is empty.
CensoredSample apply_censoring(std::vector<double> times, const CensorScheme& scheme);

} // namespace crisk
