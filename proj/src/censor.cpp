#include "crisk/censor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace crisk {

CensorScheme::CensorScheme(double fraction_) : fraction(fraction_)
{
    if (!(fraction >= 0.0 && fraction < 1.0))
        throw std::invalid_argument("censoring fraction must lie in [0, 1)");
}

std::size_t CensorScheme::censored_count(std::size_t n) const
{
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * fraction + 0.5));
}

CensoredSample apply_censoring(std::vector<double> times, const CensorScheme& scheme)
{
    if (times.empty())
        throw std::invalid_argument("cannot censor an empty sample");
    const std::size_t n = times.size();
    const std::size_t c = scheme.censored_count(n);
    if (c >= n)
        throw std::invalid_argument("censoring fraction would leave no failures");
    const std::size_t r = n - c;

    std::sort(times.begin(), times.end());
    const double cutoff = times[r - 1];

    std::vector<Observation> obs;
    obs.reserve(n);
    for (std::size_t i = 0; i < r; ++i)
        obs.push_back({times[i], Event::Failure});
    for (std::size_t i = r; i < n; ++i)
        obs.push_back({cutoff, Event::Censored});
    return CensoredSample(std::move(obs));
}

} // namespace crisk
