#pragma once

#include "levynls/noise.hpp"
#include "levynls/rng.hpp"
#include "levynls/spectral.hpp"

#include <cmath>
#include <cstdint>

namespace test {

using namespace levynls;

inline Field random_field(const Grid& g, std::uint64_t seed, std::uint64_t stream = 0)
{
    Engine eng = make_stream(seed, stream);
    Field f(g.size());
    for (auto& v : f) v = {standard_normal(eng), standard_normal(eng)};
    return f;
}

inline Field gaussian(const Grid& g, double amplitude, double width, double center = 0.0)
{
    Field f(g.size());
    for (std::size_t j = 0; j < g.n(); ++j) {
        const double x = g.coordinate(j) - center;
        f[j] = amplitude * std::exp(-x * x / (2.0 * width * width));
    }
    return f;
}

inline Field scaled_to(Field f, double norm, const Grid& g)
{
    const double s = norm / l2_norm(f, g);
    for (auto& v : f) v *= s;
    return f;
}

inline double max_abs_diff(const Field& a, const Field& b)
{
    double m = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a[j] - b[j]));
    return m;
}

inline double max_abs(const Field& a)
{
    double m = 0.0;
    for (const auto& v : a) m = std::max(m, std::abs(v));
    return m;
}

inline Field difference(const Field& a, const Field& b)
{
    Field d(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) d[j] = a[j] - b[j];
    return d;
}

// Atoms z and −z with equal rates, so the compensator drift vanishes.
inline NoiseModel symmetric_model(const Grid& g, double rate, const Field& z)
{
    Field minus = z;
    for (auto& v : minus) v = -v;
    return NoiseModel{g, {{rate, z}, {rate, minus}}};
}

}  // namespace test
