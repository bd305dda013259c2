#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace crisk {

// SplitMix64 finalizer, used to decorrelate derived seeds.
inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Counter-based seed split: seed_i = splitmix64(splitmix64(master) + i).
// Replication i always sees the same stream no matter which worker runs it.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index)
{
    return splitmix64(splitmix64(master) + index);
}

/**
 * Deterministic random stream. mt19937_64 output is fixed by the standard
 * and the uniform/normal conversions below are implemented directly, so a
 * seed reproduces the same sequence on any platform.
 */
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    // Uniform on [0,1) with 53-bit resolution.
    double uniform01()
    {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform on (0,1]; safe as an argument of log().
    double uniform_open01()
    {
        return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; the second member of each pair is cached.
    double normal()
    {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_open01();
        const double u2 = uniform01();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * 3.14159265358979323846 * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace crisk
