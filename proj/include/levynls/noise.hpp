/*
 * noise.hpp — finite-activity Poisson random measure on the unit ball of L²
 *
 * The intensity measure is ν = Σ_j λ_j δ_{z_j} with every mark z_j in
 * B = {0 < ‖z‖_{L²} ≤ 1}. The driving process is the compensated sum
 *
 *   L(t) = Σ_{s_i ≤ t} z_{j_i} − t·μ,     μ = Σ_j λ_j z_j,
 *
 * and the stochastic convolution is
 *
 *   M(t) = Σ_{s_i ≤ t} S_{t−s_i} z_{j_i} − ∫_0^t S_{t−s} μ ds,
 *
 * where the drift integral has the closed-form Fourier multiplier
 * (1 − e^{−i|k|²t})/(i|k|²) = t·e^{−iθ/2}·sinc(θ/2), θ = |k|²t.
 */

#pragma once

#include "levynls/rng.hpp"
#include "levynls/spectral.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace levynls {

struct NoiseAtom {
    double rate;
    Field mark;
};

struct NoiseModel {
    Grid grid;
    std::vector<NoiseAtom> atoms;

    double total_rate() const;
};

enum class NoiseIssueKind { MarkOutsideBall, NonpositiveRate, MarkSizeMismatch };

struct NoiseIssue {
    NoiseIssueKind kind;
    std::size_t atom;
    std::string message;
};

class NoiseModelError : public std::invalid_argument {
public:
    explicit NoiseModelError(NoiseIssue issue)
        : std::invalid_argument(issue.message), issue_(std::move(issue)) {}
    const NoiseIssue& issue() const { return issue_; }

private:
    NoiseIssue issue_;
};

/// First violated constraint, or nullopt when the model is valid.
std::optional<NoiseIssue> validate_noise_model(const NoiseModel& m);
/// Throws NoiseModelError on the first violation.
void require_valid(const NoiseModel& m);

struct JumpEvent {
    double time;
    std::size_t atom;
};

struct JumpPath {
    double horizon = 0.0;
    std::vector<JumpEvent> events;  // strictly increasing times in (0, horizon]
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
};

/// Exponential inter-arrivals at total rate Λ, mark j with probability λ_j/Λ.
JumpPath sample_jump_path(const NoiseModel& m, double T, std::uint64_t seed, std::uint64_t stream = 0);

struct Compensator {
    Field mean_field;                 // μ = Σ λ_j z_j
    double second_moment = 0.0;       // m₂ = Σ λ_j ‖z_j‖²
    std::vector<double> rates;
    std::vector<double> mark_norms;

    /// Σ λ_j ‖z_j‖^q.
    double q_moment(double q) const;
};

Compensator compensator_of(const NoiseModel& m);

/// M(t) from the closed-form sum. Throws std::out_of_range for t outside [0, horizon].
Field stochastic_convolution(const JumpPath& path, const NoiseModel& m, double t);

/// Spectral coefficients of M at each of the increasing times, by the exact
/// recursion M(t') = S_{t'−t} M(t) − drift(t'−t) + new jumps.
std::vector<Field> convolution_spectra(const JumpPath& path, const NoiseModel& m,
                                       std::span<const double> times);

/// Fourier coefficients of ∫_0^h S_{h−s} v ds given v̂, written to out.
void drift_integral_spectrum(std::span<const cplx> v_hat, double h, const Grid& g, std::span<cplx> out);

}  // namespace levynls
