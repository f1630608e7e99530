#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace levynls {

using Engine = std::mt19937_64;

/// Independent stream for (master seed, index); derivation depends only on the pair.
inline Engine make_stream(std::uint64_t master, std::uint64_t index)
{
    std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      0x6c65767aU};
    return Engine(seq);
}

/// Uniform on [0,1) with 53 random bits. Portable, unlike std::uniform_real_distribution.
inline double uniform01(Engine& e) { return static_cast<double>(e() >> 11) * 0x1.0p-53; }

/// Exponential with the given rate.
inline double exponential(Engine& e, double rate) { return -std::log1p(-uniform01(e)) / rate; }

/// Standard normal by Box–Muller (one draw per call).
inline double standard_normal(Engine& e)
{
    const double u1 = 1.0 - uniform01(e);  // (0,1]
    const double u2 = uniform01(e);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace levynls
