#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace levynls::detail {

// sq^e with fast paths for the small integer exponents that occur for α ∈ {2,3,5}.
inline double pow_sq(double sq, double e)
{
    if (e == 1.0) return sq;
    if (e == 0.5) return std::sqrt(sq);
    if (e == 2.0) return sq * sq;
    if (e == 1.5) return sq * std::sqrt(sq);
    if (e == 3.0) return sq * sq * sq;
    return std::pow(sq, e);
}

// sin(x)/x, stable near zero.
inline double sinc(double x)
{
    if (std::abs(x) < 1e-4) {
        const double x2 = x * x;
        return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
    }
    return std::sin(x) / x;
}

// Pairwise summation over an index range; the association order depends only on the length.
inline double tree_sum(std::span<const double> v)
{
    if (v.empty()) return 0.0;
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return tree_sum(v.first(half)) + tree_sum(v.subspan(half));
}

}  // namespace levynls::detail
