#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace lfv {

using Rng = std::mt19937_64;

struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct InsufficientDataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DomainError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/** splitmix64 finalizer */
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/** Seed for replicate `index` of a run started from `base`. */
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    return mix64(mix64(base) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

inline double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double exponential(Rng& rng, double rate) {
    return std::exponential_distribution<double>(rate)(rng);
}

inline double std_normal(Rng& rng) {
    return std::normal_distribution<double>(0.0, 1.0)(rng);
}

inline long poisson(Rng& rng, double mean) {
    if (mean <= 0.0) return 0;
    return std::poisson_distribution<long>(mean)(rng);
}

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ParameterError(msg);
}

}  // namespace lfv
