#include "levynls/noise.hpp"
#include "levynls/detail/math.hpp"

#include <cmath>
#include <sstream>

namespace levynls {

namespace {

// Marks normalized to exactly 1 may land one ulp outside.
constexpr double kBallSlack = 1e-12;

std::vector<Field> mark_spectra(const NoiseModel& m)
{
    std::vector<Field> out;
    out.reserve(m.atoms.size());
    for (const auto& a : m.atoms) {
        Field z(a.mark.size());
        m.grid.forward(a.mark, z);
        out.push_back(std::move(z));
    }
    return out;
}

void add_propagated(std::span<cplx> acc, std::span<const cplx> z_hat, double t, const Grid& g)
{
    const auto ksq = g.k_squared();
    for (std::size_t j = 0; j < acc.size(); ++j) {
        const double phase = -ksq[j] * t;
        acc[j] += z_hat[j] * cplx(std::cos(phase), std::sin(phase));
    }
}

}  // namespace

double NoiseModel::total_rate() const
{
    double s = 0.0;
    for (const auto& a : atoms) s += a.rate;
    return s;
}

std::optional<NoiseIssue> validate_noise_model(const NoiseModel& m)
{
    for (std::size_t j = 0; j < m.atoms.size(); ++j) {
        const auto& a = m.atoms[j];
        if (!(a.rate > 0.0) || !std::isfinite(a.rate)) {
            std::ostringstream msg;
            msg << "atom " << j << ": rate must be positive and finite, got " << a.rate;
            return NoiseIssue{NoiseIssueKind::NonpositiveRate, j, msg.str()};
        }
        if (a.mark.size() != m.grid.size()) {
            std::ostringstream msg;
            msg << "atom " << j << ": mark has " << a.mark.size() << " nodes, grid has " << m.grid.size();
            return NoiseIssue{NoiseIssueKind::MarkSizeMismatch, j, msg.str()};
        }
        const double norm = l2_norm(a.mark, m.grid);
        if (!(norm > 0.0) || norm > 1.0 + kBallSlack || !std::isfinite(norm)) {
            std::ostringstream msg;
            msg << "atom " << j << ": mark L2 norm " << norm << " outside the unit ball (0, 1]";
            return NoiseIssue{NoiseIssueKind::MarkOutsideBall, j, msg.str()};
        }
    }
    return std::nullopt;
}

void require_valid(const NoiseModel& m)
{
    if (auto issue = validate_noise_model(m)) throw NoiseModelError(*issue);
}

JumpPath sample_jump_path(const NoiseModel& m, double T, std::uint64_t seed, std::uint64_t stream)
{
    require_valid(m);
    if (!(T >= 0.0)) throw std::invalid_argument("sample_jump_path: horizon must be nonnegative");

    JumpPath path;
    path.horizon = T;
    path.seed = seed;
    path.stream = stream;
    const double total = m.total_rate();
    if (m.atoms.empty() || T == 0.0) return path;

    Engine eng = make_stream(seed, stream);
    double t = 0.0;
    for (;;) {
        t += exponential(eng, total);
        if (t > T) break;
        if (!path.events.empty() && t <= path.events.back().time) t = std::nextafter(path.events.back().time, T + 1.0);
        if (t > T) break;
        const double u = uniform01(eng) * total;
        std::size_t j = 0;
        double cum = m.atoms[0].rate;
        while (u >= cum && j + 1 < m.atoms.size()) cum += m.atoms[++j].rate;
        path.events.push_back({t, j});
    }
    return path;
}

double Compensator::q_moment(double q) const
{
    double s = 0.0;
    for (std::size_t j = 0; j < rates.size(); ++j) s += rates[j] * std::pow(mark_norms[j], q);
    return s;
}

Compensator compensator_of(const NoiseModel& m)
{
    require_valid(m);
    Compensator c;
    c.mean_field = m.grid.zeros();
    for (const auto& a : m.atoms) {
        for (std::size_t i = 0; i < c.mean_field.size(); ++i) c.mean_field[i] += a.rate * a.mark[i];
        const double norm = l2_norm(a.mark, m.grid);
        c.rates.push_back(a.rate);
        c.mark_norms.push_back(norm);
        c.second_moment += a.rate * norm * norm;
    }
    return c;
}

void drift_integral_spectrum(std::span<const cplx> v_hat, double h, const Grid& g, std::span<cplx> out)
{
    const auto ksq = g.k_squared();
    for (std::size_t j = 0; j < v_hat.size(); ++j) {
        const double theta = ksq[j] * h;
        const double half = 0.5 * theta;
        const cplx weight = h * detail::sinc(half) * cplx(std::cos(half), -std::sin(half));
        out[j] = v_hat[j] * weight;
    }
}

Field stochastic_convolution(const JumpPath& path, const NoiseModel& m, double t)
{
    if (t < 0.0 || t > path.horizon) throw std::out_of_range("stochastic_convolution: t outside [0, horizon]");
    const auto& g = m.grid;
    const auto comp = compensator_of(m);
    const auto marks = mark_spectra(m);

    Field mu_hat(g.size());
    g.forward(comp.mean_field, mu_hat);
    Field acc(g.size());
    drift_integral_spectrum(mu_hat, t, g, acc);
    for (auto& v : acc) v = -v;
    for (const auto& e : path.events) {
        if (e.time > t) break;
        add_propagated(acc, marks[e.atom], t - e.time, g);
    }
    g.inverse(acc, acc);
    return acc;
}

std::vector<Field> convolution_spectra(const JumpPath& path, const NoiseModel& m,
                                       std::span<const double> times)
{
    const auto& g = m.grid;
    const auto comp = compensator_of(m);
    const auto marks = mark_spectra(m);
    Field mu_hat(g.size());
    g.forward(comp.mean_field, mu_hat);

    std::vector<Field> out;
    out.reserve(times.size());
    Field state(g.size());
    Field drift(g.size());
    double now = 0.0;
    std::size_t next_event = 0;
    for (double t : times) {
        if (t < now || t > path.horizon) throw std::out_of_range("convolution_spectra: times must increase within [0, horizon]");
        const double h = t - now;
        if (h > 0.0) {
            apply_free_multiplier(state, h, g);
            drift_integral_spectrum(mu_hat, h, g, drift);
            for (std::size_t j = 0; j < state.size(); ++j) state[j] -= drift[j];
        }
        while (next_event < path.events.size() && path.events[next_event].time <= t) {
            const auto& e = path.events[next_event++];
            add_propagated(state, marks[e.atom], t - e.time, g);
        }
        now = t;
        out.push_back(state);
    }
    return out;
}

}  // namespace levynls
