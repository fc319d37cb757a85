#pragma once

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include <cstdint>
#include <random>

namespace commonload {

/// std::mt19937_64 is fully specified by the standard; the Boost distributions
/// are deterministic algorithms, so draws are identical across platforms.
using Rng = std::mt19937_64;

/// Independent stream for (seed, index), e.g. one per Monte Carlo replication.
inline Rng substream(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0x9e3779b9u};
    return Rng(seq);
}

inline double standard_normal(Rng& rng) {
    boost::random::normal_distribution<double> dist(0.0, 1.0);
    return dist(rng);
}

inline double uniform(Rng& rng, double lo, double hi) {
    if (lo == hi) {
        return lo;
    }
    boost::random::uniform_real_distribution<double> dist(lo, hi);
    return dist(rng);
}

}  // namespace commonload
