/*
 * spectral.hpp — periodic pseudospectral discretization
 *
 * A Grid is the periodic box [-L/2, L/2)^d sampled with n points per
 * dimension. Fields live on the nodes in row-major order. The free
 * Schrödinger group S_t = exp(itΔ) acts as the Fourier multiplier
 * exp(-i|k|²t), which makes it exactly unitary on the grid.
 *
 * Norms use the rectangle rule in space:
 *
 *   ‖u‖_{L^r}^r = h^d · Σ |u_j|^r,     ‖u‖_{L^∞} = max |u_j|
 *
 * and the Y_t norm of a sampled trajectory is
 *
 *   ‖u‖_{Y_t} = sup_{s≤t} ‖u(s)‖_{L²} + ( ∫_0^t ‖u(s)‖_{L^r}^p ds )^{1/p}
 *
 * with the time integral taken by the left-endpoint rule on the samples.
 */

#pragma once

#include <complex>
#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace levynls {

using cplx = std::complex<double>;
using Field = std::vector<cplx>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

class GridError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class FftPlan;

class Grid {
public:
    Grid(int dim, std::size_t n, double box_length);

    int dim() const { return dim_; }
    std::size_t n() const { return n_; }
    std::size_t size() const { return size_; }
    double box_length() const { return box_length_; }
    double spacing() const { return box_length_ / static_cast<double>(n_); }
    double cell_volume() const;

    /// Signed wavenumbers 2π·m/L in FFT order, one per index along an axis.
    std::span<const double> wavenumbers() const { return wavenumbers_; }
    /// |k|² per node in row-major mode order.
    std::span<const double> k_squared() const { return k_squared_; }

    /// Physical coordinate of index j along one axis, -L/2 + j·h.
    double coordinate(std::size_t j) const;

    Field zeros() const { return Field(size_, cplx{}); }

    /// Unnormalized forward DFT. In-place when in and out alias.
    void forward(std::span<const cplx> in, std::span<cplx> out) const;
    /// Inverse DFT including the 1/N factor.
    void inverse(std::span<const cplx> in, std::span<cplx> out) const;

private:
    int dim_;
    std::size_t n_;
    std::size_t size_;
    double box_length_;
    std::vector<double> wavenumbers_;
    std::vector<double> k_squared_;
    std::shared_ptr<const FftPlan> plan_;
};

Grid make_grid(int d, std::size_t n, double box_length);

/// S_t u.
Field free_propagate(const Field& u, double t, const Grid& g);
/// Multiplies spectral coefficients by exp(-i|k|²t) in place.
void apply_free_multiplier(std::span<cplx> u_hat, double t, const Grid& g);

double l2_norm(std::span<const cplx> u, const Grid& g);
/// r ≥ 1; r = ∞ gives the max modulus.
double lr_norm(std::span<const cplx> u, double r, const Grid& g);
/// Re ⟨u, v⟩_{L²} with the rectangle rule.
double real_inner(std::span<const cplx> u, std::span<const cplx> v, const Grid& g);

bool all_finite(std::span<const cplx> u);

// ── Admissible exponents ─────────────────────────────────────────────────────

struct AdmissiblePair {
    double p;
    double r;
};

/// p, r ∈ [2,∞], 2/p + d/r = d/2, (p,r,d) ≠ (2,∞,2), and r ≤ 2d/(d-2) for d ≥ 3.
bool check_admissible(double p, double r, int d);

/// The pair with r = α+1, i.e. p = 4(α+1)/(d(α-1)).
AdmissiblePair pair_for_exponent(double alpha, int d);

/// Hölder conjugate e' with 1/e + 1/e' = 1.
double conjugate_exponent(double e);

// ── Sampled norm series and the Y_t norm ─────────────────────────────────────

struct NormSeries {
    double r = 2.0;
    std::vector<double> times;
    std::vector<double> l2_values;
    std::vector<double> lr_values;

    void push(double t, double l2, double lr);
    std::size_t size() const { return times.size(); }
    bool empty() const { return times.empty(); }
};

/// Y_t norm of a sampled series. Throws std::out_of_range past the last sample.
double y_norm(const NormSeries& ns, double t, double p);

/// Left-endpoint (∫_{a}^{b} v(s)^p ds)^{1/p} over the samples in [a, b); p = ∞ gives the max.
double lp_time_norm(std::span<const double> times, std::span<const double> values,
                    double a, double b, double p);

/// Running Y-norm over samples pushed in time order; matches y_norm at each sample time.
class YNormAccumulator {
public:
    explicit YNormAccumulator(double p) : p_(p) {}

    void add(double t, double l2, double lr);
    double value() const;
    double sup_l2() const { return sup_l2_; }
    /// (∫ lr^p)^{1/p} up to the last pushed time.
    double lp_part() const;

private:
    double p_;
    bool started_ = false;
    double sup_l2_ = 0.0;
    double integral_ = 0.0;  // Σ lr^p Δt, or running max when p = ∞
    double last_t_ = 0.0;
    double last_lr_ = 0.0;
};

// ── Snapshot files ───────────────────────────────────────────────────────────

struct Snapshot {
    int dim;
    std::size_t n;
    double box_length;
    Field values;
};

/// Header `d n box_length`, then one `re im` pair per node, row-major.
void write_snapshot(const std::string& path, const Field& u, const Grid& g);
Snapshot read_snapshot(const std::string& path);

}  // namespace levynls
