#include "levynls/analysis.hpp"
#include "levynls/detail/math.hpp"
#include "levynls/detail/parallel.hpp"
#include "levynls/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace levynls {

MeanEstimate estimate_mean(std::span<const double> values)
{
    MeanEstimate est;
    est.count = values.size();
    if (values.empty()) return est;
    const double n = static_cast<double>(values.size());
    est.mean = detail::tree_sum(values) / n;
    std::vector<double> dev(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) dev[i] = (values[i] - est.mean) * (values[i] - est.mean);
    est.std_error = std::sqrt(detail::tree_sum(dev) / n) / std::sqrt(n);
    return est;
}

// ── Itô mass balance ─────────────────────────────────────────────────────────

namespace {

// Sum of marks per jump record; validates the record against the path.
std::vector<Field> jump_marks(const Trajectory& traj, const JumpPath& path, const NoiseModel& m)
{
    if (traj.fields.size() != traj.size() || traj.size() == 0)
        throw std::invalid_argument("trajectory must carry stored fields");
    std::size_t expected = 0;
    for (const auto& e : path.events)
        if (e.time <= traj.horizon * (1.0 + 1e-12)) ++expected;
    std::size_t seen = 0;
    std::vector<Field> marks;
    for (const auto& rec : traj.jumps) {
        if (rec.pre_sample + 1 >= traj.size()) throw std::invalid_argument("jump record outside the trajectory");
        Field z = m.grid.zeros();
        for (auto e : rec.events) {
            if (e >= path.events.size()) throw std::invalid_argument("jump record refers to a missing event");
            const auto& mark = m.atoms.at(path.events[e].atom).mark;
            for (std::size_t j = 0; j < z.size(); ++j) z[j] += mark[j];
            ++seen;
        }
        marks.push_back(std::move(z));
    }
    if (seen != expected) throw std::invalid_argument("trajectory jumps do not match the jump path");
    return marks;
}

double norm_pow(double l2, double q) { return std::pow(l2, q); }

}  // namespace

MassBalanceReport mass_balance(const Trajectory& traj, const JumpPath& path, const NoiseModel& m, double q)
{
    const auto& g = m.grid;
    const auto marks = jump_marks(traj, path, m);
    const auto comp = compensator_of(m);
    const Field& mu = comp.mean_field;

    MassBalanceReport rep;
    rep.q = q;
    rep.times = traj.times;
    rep.residual_series.assign(traj.size(), 0.0);

    const double start = norm_pow(l2_norm(traj.fields[0], g), q);
    double drift = 0.0;
    double jumps = 0.0;
    std::size_t next_jump = 0;
    Field shifted(g.size());
    for (std::size_t i = 1; i < traj.size(); ++i) {
        const Field& prev = traj.fields[i - 1];
        if (next_jump < traj.jumps.size() && traj.jumps[next_jump].pre_sample == i - 1) {
            const Field& z = marks[next_jump];
            for (std::size_t j = 0; j < shifted.size(); ++j) shifted[j] = prev[j] + z[j];
            jumps += norm_pow(l2_norm(shifted, g), q) - norm_pow(l2_norm(prev, g), q);
            for (std::size_t j = 0; j < shifted.size(); ++j) shifted[j] -= traj.fields[i][j];
            rep.max_jump_mismatch = std::max(rep.max_jump_mismatch, l2_norm(shifted, g));
            ++next_jump;
        } else {
            const double width = traj.times[i] - traj.times[i - 1];
            const double l2 = l2_norm(prev, g);
            drift += -q * std::pow(l2, q - 2.0) * real_inner(prev, mu, g) * width;
        }
        const double now = norm_pow(l2_norm(traj.fields[i], g), q);
        rep.residual_series[i] = now - start - drift - jumps;
        rep.max_abs_residual = std::max(rep.max_abs_residual, std::abs(rep.residual_series[i]));
    }
    return rep;
}

double ito_martingale_term(const Trajectory& traj, const JumpPath& path, const NoiseModel& m, double q)
{
    const auto& g = m.grid;
    const auto marks = jump_marks(traj, path, m);
    double jumps = 0.0;
    double compensator = 0.0;
    std::size_t next_jump = 0;
    Field shifted(g.size());
    for (std::size_t i = 1; i < traj.size(); ++i) {
        const Field& prev = traj.fields[i - 1];
        const double base = norm_pow(l2_norm(prev, g), q);
        if (next_jump < traj.jumps.size() && traj.jumps[next_jump].pre_sample == i - 1) {
            const Field& z = marks[next_jump++];
            for (std::size_t j = 0; j < shifted.size(); ++j) shifted[j] = prev[j] + z[j];
            jumps += norm_pow(l2_norm(shifted, g), q) - base;
            continue;
        }
        const double width = traj.times[i] - traj.times[i - 1];
        double rate_sum = 0.0;
        for (const auto& atom : m.atoms) {
            for (std::size_t j = 0; j < shifted.size(); ++j) shifted[j] = prev[j] + atom.mark[j];
            rate_sum += atom.rate * (norm_pow(l2_norm(shifted, g), q) - base);
        }
        compensator += rate_sum * width;
    }
    return jumps - compensator;
}

// ── Elementary inequality ────────────────────────────────────────────────────

double elementary_ratio(std::span<const cplx> a, std::span<const cplx> b, double q, const Grid& g)
{
    Field sum(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) sum[j] = a[j] + b[j];
    const double na = std::pow(l2_norm(a, g), q);
    const double nb = std::pow(l2_norm(b, g), q);
    const double den = na + nb;
    if (den == 0.0) return 0.0;
    return std::abs(std::pow(l2_norm(sum, g), q) - nb) / den;
}

double elementary_inequality_check(double q, std::size_t n_samples, std::uint64_t seed)
{
    if (!(q >= 2.0)) throw std::invalid_argument("elementary_inequality_check: q must be >= 2");
    const Grid g(1, 8, 1.0);
    Engine eng = make_stream(seed, 0);
    auto gaussian_field = [&] {
        Field f(g.size());
        for (auto& v : f) v = {standard_normal(eng), standard_normal(eng)};
        return f;
    };
    double worst = 0.0;
    for (std::size_t s = 0; s < n_samples; ++s) {
        Field a = gaussian_field();
        Field b = gaussian_field();
        // Relative scale spans six decades; every third pair is nearly collinear.
        const double scale = std::pow(10.0, 6.0 * uniform01(eng) - 3.0);
        if (s % 3 == 2) {
            const double mix = 0.1 * uniform01(eng);
            for (std::size_t j = 0; j < a.size(); ++j) a[j] = b[j] + mix * a[j];
        }
        for (auto& v : a) v *= scale;
        worst = std::max(worst, elementary_ratio(a, b, q, g));
    }
    return worst;
}

// ── Stopping times ───────────────────────────────────────────────────────────

double tau_R(const NormSeries& ns, double horizon, double R, double p)
{
    YNormAccumulator acc(p);
    for (std::size_t i = 0; i < ns.size(); ++i) {
        acc.add(ns.times[i], ns.l2_values[i], ns.lr_values[i]);
        if (acc.value() > R) return ns.times[i];
    }
    return horizon;
}

double tau_R(const Trajectory& traj, double R, double p) { return tau_R(traj.norms, traj.horizon, R, p); }

double local_time_exponent(double alpha, int d) { return 1.0 - (alpha - 1.0) * d / 4.0; }

double StoppingReport::min_increment() const
{
    double best = kInf;
    double prev = 0.0;
    for (std::size_t j = 0; j + 1 < sigma.size(); ++j) {
        best = std::min(best, sigma[j] - prev);
        prev = sigma[j];
    }
    return best;
}

namespace {

// Exact integral of the left-continuous step function s ↦ v_l^p on [τ_l, τ_{l+1}).
class StepIntegral {
public:
    StepIntegral(const NormSeries& ns, double p) : times_(ns.times), cum_(ns.size() + 1, 0.0), pow_(ns.size())
    {
        for (std::size_t l = 0; l < ns.size(); ++l) {
            pow_[l] = std::pow(ns.lr_values[l], p);
            const double width = l + 1 < ns.size() ? ns.times[l + 1] - ns.times[l] : 0.0;
            cum_[l + 1] = cum_[l] + pow_[l] * width;
        }
    }

    double primitive(double x) const
    {
        if (times_.empty() || x <= times_.front()) return 0.0;
        auto it = std::upper_bound(times_.begin(), times_.end(), x);
        const auto l = static_cast<std::size_t>(it - times_.begin()) - 1;
        return cum_[l] + pow_[l] * (x - times_[l]);
    }

    double between(double a, double b) const { return std::max(0.0, primitive(b) - primitive(a)); }

private:
    const std::vector<double>& times_;
    std::vector<double> cum_;
    std::vector<double> pow_;
};

}  // namespace

StoppingReport sigma_sequence(const NormSeries& z_norms, const NormSeries& m_norms, const StoppingParams& sp)
{
    if (!(sp.C_hat > 0.0)) throw std::invalid_argument("sigma_sequence: C_hat must be positive");
    if (std::isinf(sp.p)) throw std::invalid_argument("sigma_sequence: p must be finite");
    if (z_norms.empty()) throw std::invalid_argument("sigma_sequence: empty trajectory");

    const double e = local_time_exponent(sp.alpha, sp.d);
    const double threshold = std::pow(2.0, -(sp.alpha + 1.0));
    const StepIntegral m_int(m_norms, sp.p);
    const auto& t = z_norms.times;
    const auto& l2 = z_norms.l2_values;

    StoppingReport rep;
    rep.tau_R = tau_R(z_norms, sp.T, sp.R, sp.p);

    double sup_all = 0.0;
    for (double v : l2) sup_all = std::max(sup_all, v);
    rep.M_R = sp.C_hat * sup_all + std::pow(m_int.between(0.0, sp.T), 1.0 / sp.p);
    rep.T_R_lower_bound = rep.M_R > 0.0
        ? std::min(sp.T, std::pow(4.0 * sp.C_hat * std::pow(2.0 * rep.M_R, sp.alpha - 1.0), -1.0 / e))
        : sp.T;

    double sigma = 0.0;
    std::size_t i = 0;
    while (true) {
        // Samples at or before σ only feed the sup.
        double sup = 0.0;
        while (i < t.size() && t[i] <= sigma) {
            if (t[i] >= sigma) sup = std::max(sup, l2[i]);
            ++i;
        }
        double next = sp.T;
        for (; i < t.size(); ++i) {
            const double width = t[i] - sigma;
            const double m_part = std::pow(m_int.between(sigma, t[i]), 1.0 / sp.p);
            const double g = sp.C_hat * std::pow(width, e) * std::pow(sp.C_hat * sup + m_part, sp.alpha - 1.0);
            if (g > threshold && t[i] < sp.T) {
                next = t[i];
                break;
            }
            sup = std::max(sup, l2[i]);
        }
        rep.sigma.push_back(next);
        if (next >= sp.T) break;
        sigma = next;
    }
    rep.n_intervals = rep.sigma.size();
    return rep;
}

// ── Root function ────────────────────────────────────────────────────────────

double root_function(double x, double K, double alpha)
{
    return K + std::pow(x, alpha) / (4.0 * std::pow(2.0 * K, alpha - 1.0)) - x;
}

std::pair<double, double> f_roots(double K, double alpha)
{
    if (!(K > 0.0) || !(alpha > 1.0)) throw std::invalid_argument("f_roots: need K > 0 and alpha > 1");
    auto bisect = [&](double lo, double hi) {
        // f(lo) and f(hi) have opposite signs.
        const bool lo_positive = root_function(lo, K, alpha) > 0.0;
        for (int it = 0; it < 200 && hi - lo > 4e-16 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            if ((root_function(mid, K, alpha) > 0.0) == lo_positive) lo = mid;
            else hi = mid;
        }
        return 0.5 * (lo + hi);
    };
    const double mid = 2.0 * K;
    const double upper = std::pow(4.0, 1.0 / (alpha - 1.0)) * 2.0 * K;
    return {bisect(0.0, mid), bisect(mid, upper)};
}

// ── Strichartz estimators ────────────────────────────────────────────────────

double homogeneous_ratio(const Field& phi, AdmissiblePair pr, double T, std::size_t time_steps, const Grid& g)
{
    if (time_steps == 0) throw std::invalid_argument("homogeneous_ratio: need at least one time step");
    const double norm = l2_norm(phi, g);
    if (norm == 0.0) throw std::invalid_argument("homogeneous_ratio: zero initial datum");
    const double dt = T / static_cast<double>(time_steps);
    Field phi_hat(g.size());
    g.forward(phi, phi_hat);
    Field w(g.size());
    std::vector<double> times(time_steps);
    std::vector<double> values(time_steps);
    for (std::size_t m = 0; m < time_steps; ++m) {
        times[m] = static_cast<double>(m) * dt;
        w = phi_hat;
        apply_free_multiplier(w, times[m], g);
        g.inverse(w, w);
        values[m] = lr_norm(w, pr.r, g);
    }
    return lp_time_norm(times, values, 0.0, T, pr.p) / norm;
}

StrichartzReport strichartz_homog(std::span<const Field> phis, AdmissiblePair pr, double T,
                                  std::size_t time_steps, const Grid& g)
{
    if (!check_admissible(pr.p, pr.r, g.dim())) throw std::invalid_argument("strichartz_homog: pair not admissible");
    StrichartzReport rep;
    rep.pair = pr;
    rep.sample_count = phis.size();
    rep.d = g.dim();
    rep.n = g.n();
    rep.box_length = g.box_length();
    rep.time_steps = time_steps;
    rep.horizon = T;
    std::vector<double> ratios;
    for (const auto& phi : phis) ratios.push_back(homogeneous_ratio(phi, pr, T, time_steps, g));
    if (!ratios.empty()) {
        rep.ratio_max = *std::max_element(ratios.begin(), ratios.end());
        const auto est = estimate_mean(ratios);
        rep.ratio_mean = est.mean;
        rep.ratio_stderr = est.std_error;
    }
    return rep;
}

std::vector<Field> duhamel_series(std::span<const Field> f, double dt, const Grid& g)
{
    std::vector<Field> out;
    out.reserve(f.size() + 1);
    out.push_back(g.zeros());
    Field acc(g.size());
    Field f_hat(g.size());
    Field phys(g.size());
    for (const auto& fm : f) {
        g.forward(fm, f_hat);
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += dt * f_hat[j];
        apply_free_multiplier(acc, dt, g);
        g.inverse(acc, phys);
        out.push_back(phys);
    }
    return out;
}

StrichartzReport strichartz_inhom(const std::vector<std::vector<Field>>& f_ensemble, AdmissiblePair source,
                                  AdmissiblePair target, double T, const Grid& g)
{
    const int d = g.dim();
    if (!check_admissible(source.p, source.r, d) || !check_admissible(target.p, target.r, d))
        throw std::invalid_argument("strichartz_inhom: pairs must be admissible");
    const double gamma_c = conjugate_exponent(source.p);
    const double rho_c = conjugate_exponent(source.r);

    StrichartzReport rep;
    rep.pair = target;
    rep.source_pair = source;
    rep.sample_count = f_ensemble.size();
    rep.d = d;
    rep.n = g.n();
    rep.box_length = g.box_length();
    rep.horizon = T;

    std::vector<double> ratios;
    std::vector<double> energy;
    for (const auto& f : f_ensemble) {
        if (f.empty()) throw std::invalid_argument("strichartz_inhom: empty forcing sample");
        rep.time_steps = f.size();
        const double dt = T / static_cast<double>(f.size());
        std::vector<double> times(f.size() + 1);
        for (std::size_t m = 0; m <= f.size(); ++m) times[m] = static_cast<double>(m) * dt;

        std::vector<double> f_norms(f.size());
        for (std::size_t m = 0; m < f.size(); ++m) f_norms[m] = lr_norm(f[m], rho_c, g);
        const double source_norm = lp_time_norm(std::span(times).first(f.size()), f_norms, 0.0, T, gamma_c);

        const auto phi = duhamel_series(f, dt, g);
        std::vector<double> phi_r(phi.size());
        double sup_l2 = 0.0;
        for (std::size_t m = 0; m < phi.size(); ++m) {
            phi_r[m] = lr_norm(phi[m], target.r, g);
            sup_l2 = std::max(sup_l2, l2_norm(phi[m], g));
        }
        const double strichartz = lp_time_norm(times, phi_r, 0.0, T, target.p);
        ratios.push_back(source_norm > 0.0 ? strichartz / source_norm : 0.0);
        energy.push_back(source_norm > 0.0 ? sup_l2 / source_norm : 0.0);
    }
    if (!ratios.empty()) {
        rep.ratio_max = *std::max_element(ratios.begin(), ratios.end());
        const auto est = estimate_mean(ratios);
        rep.ratio_mean = est.mean;
        rep.ratio_stderr = est.std_error;
        rep.energy_ratio_max = *std::max_element(energy.begin(), energy.end());
        rep.energy_ratio_mean = estimate_mean(energy).mean;
    }
    return rep;
}

NormSeries convolution_norms(const JumpPath& path, const NoiseModel& m, std::span<const double> times, double r)
{
    auto spectra = convolution_spectra(path, m, times);
    NormSeries ns;
    ns.r = r;
    for (std::size_t k = 0; k < times.size(); ++k) {
        m.grid.inverse(spectra[k], spectra[k]);
        ns.push(times[k], l2_norm(spectra[k], m.grid), lr_norm(spectra[k], r, m.grid));
    }
    return ns;
}

StrichartzReport strichartz_stoch(const NoiseModel& m, double q, AdmissiblePair pr, double T,
                                  std::size_t time_steps, std::size_t n_paths, std::uint64_t seed,
                                  unsigned workers)
{
    require_valid(m);
    if (!(q >= 2.0)) throw std::invalid_argument("strichartz_stoch: q must be >= 2");
    if (n_paths == 0 || time_steps == 0) throw std::invalid_argument("strichartz_stoch: need paths and time steps");
    if (!check_admissible(pr.p, pr.r, m.grid.dim())) throw std::invalid_argument("strichartz_stoch: pair not admissible");

    const double dt = T / static_cast<double>(time_steps);
    std::vector<double> times(time_steps + 1);
    for (std::size_t k = 0; k <= time_steps; ++k) times[k] = static_cast<double>(k) * dt;
    times.back() = T;

    std::vector<double> lhs(n_paths);
    detail::parallel_for(n_paths, workers, [&](std::size_t i) {
        const auto path = sample_jump_path(m, T, seed, i);
        const auto ns = convolution_norms(path, m, times, pr.r);
        lhs[i] = std::pow(lp_time_norm(ns.times, ns.lr_values, 0.0, T, pr.p), q);
    });

    const auto comp = compensator_of(m);
    StrichartzReport rep;
    rep.pair = pr;
    rep.q = q;
    rep.sample_count = n_paths;
    rep.d = m.grid.dim();
    rep.n = m.grid.n();
    rep.box_length = m.grid.box_length();
    rep.time_steps = time_steps;
    rep.horizon = T;
    rep.rhs = std::pow(comp.second_moment * T, 0.5 * q) + comp.q_moment(q) * T;
    const auto est = estimate_mean(lhs);
    rep.lhs_mean = est.mean;
    rep.lhs_stderr = est.std_error;
    if (rep.rhs > 0.0) {
        rep.ratio_mean = est.mean / rep.rhs;
        rep.ratio_stderr = est.std_error / rep.rhs;
        rep.ratio_max = *std::max_element(lhs.begin(), lhs.end()) / rep.rhs;
    }
    return rep;
}

}  // namespace levynls
