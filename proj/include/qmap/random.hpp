#pragma once

// Counter-based seeding for Monte Carlo shots. Shots are processed in fixed
// blocks and every block draws from its own engine seeded by (seed, block
// index), so results do not depend on how blocks are scheduled.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>

namespace qmap {

inline constexpr std::uint64_t kShotBlockSize = 4096;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::mt19937_64 block_engine(std::uint64_t seed, std::uint64_t block) {
    const std::uint64_t a = splitmix64(seed);
    const std::uint64_t b = splitmix64(a ^ splitmix64(block + 1));
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return std::mt19937_64(seq);
}

// Calls fn(engine, first_shot, count) once per block, in block order.
template <class Fn>
void for_each_shot_block(std::uint64_t shots, std::uint64_t seed, Fn&& fn) {
    for (std::uint64_t block = 0, first = 0; first < shots; ++block, first += kShotBlockSize) {
        auto engine = block_engine(seed, block);
        fn(engine, first, std::min(kShotBlockSize, shots - first));
    }
}

struct McEstimate {
    double value = 0.0;
    double standard_error = 0.0;
    std::uint64_t shots = 0;
};

/// Sample mean and its standard error.
inline McEstimate mean_estimate(std::span<const double> xs) {
    McEstimate out;
    out.shots = xs.size();
    if (xs.empty()) return out;
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    out.value = mean;
    out.standard_error = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()))
                                       : std::numeric_limits<double>::infinity();
    return out;
}

/// Unbiased sample variance and its large-sample standard error,
/// Var(s^2) ~ (m4 - m2^2 (n-3)/(n-1)) / n.
inline McEstimate variance_estimate(std::span<const double> xs) {
    McEstimate out;
    out.shots = xs.size();
    const auto n = static_cast<double>(xs.size());
    if (xs.size() < 2) {
        out.standard_error = std::numeric_limits<double>::infinity();
        return out;
    }
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    double m2 = 0.0, m4 = 0.0;
    for (double x : xs) {
        const double d2 = (x - mean) * (x - mean);
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= n;
    m4 /= n;
    out.value = m2 * n / (n - 1.0);
    const double var_of_var = (m4 - m2 * m2 * (n - 3.0) / (n - 1.0)) / n;
    out.standard_error = std::sqrt(std::max(var_of_var, 0.0));
    return out;
}

}  // namespace qmap
