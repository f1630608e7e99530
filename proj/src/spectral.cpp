#include "levynls/spectral.hpp"
#include "levynls/detail/math.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <sstream>

namespace levynls {

namespace {

// The FFTW planner is not reentrant; execution with the new-array interface is.
std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

}  // namespace

class FftPlan {
public:
    FftPlan(int dim, std::size_t n)
    {
        const int dims[2] = {static_cast<int>(n), static_cast<int>(n)};
        std::size_t total = 1;
        for (int i = 0; i < dim; ++i) total *= n;

        std::lock_guard lock(planner_mutex());
        auto* a = fftw_alloc_complex(total);
        auto* b = fftw_alloc_complex(total);
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        fwd_out_ = fftw_plan_dft(dim, dims, a, b, FFTW_FORWARD, flags);
        inv_out_ = fftw_plan_dft(dim, dims, a, b, FFTW_BACKWARD, flags);
        fwd_in_ = fftw_plan_dft(dim, dims, a, a, FFTW_FORWARD, flags);
        inv_in_ = fftw_plan_dft(dim, dims, a, a, FFTW_BACKWARD, flags);
        fftw_free(a);
        fftw_free(b);
    }

    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;

    ~FftPlan()
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(fwd_out_);
        fftw_destroy_plan(inv_out_);
        fftw_destroy_plan(fwd_in_);
        fftw_destroy_plan(inv_in_);
    }

    void execute(bool forward, const cplx* in, cplx* out) const
    {
        auto* i = reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in));
        auto* o = reinterpret_cast<fftw_complex*>(out);
        fftw_plan p = in == out ? (forward ? fwd_in_ : inv_in_) : (forward ? fwd_out_ : inv_out_);
        fftw_execute_dft(p, i, o);
    }

private:
    fftw_plan fwd_out_;
    fftw_plan inv_out_;
    fftw_plan fwd_in_;
    fftw_plan inv_in_;
};

Grid::Grid(int dim, std::size_t n, double box_length)
    : dim_(dim), n_(n), size_(0), box_length_(box_length)
{
    if (dim != 1 && dim != 2) throw GridError("grid dimension must be 1 or 2, got " + std::to_string(dim));
    if (n < 8 || !is_power_of_two(n)) throw GridError("points per dimension must be a power of two >= 8, got " + std::to_string(n));
    if (!(box_length > 0.0) || !std::isfinite(box_length)) throw GridError("box length must be positive and finite");

    size_ = dim == 1 ? n : n * n;
    wavenumbers_.resize(n);
    const double base = 2.0 * std::numbers::pi / box_length;
    const auto half = static_cast<std::ptrdiff_t>(n / 2);
    for (std::size_t j = 0; j < n; ++j) {
        auto m = static_cast<std::ptrdiff_t>(j);
        if (m >= half) m -= static_cast<std::ptrdiff_t>(n);
        wavenumbers_[j] = base * static_cast<double>(m);
    }
    k_squared_.resize(size_);
    if (dim == 1) {
        for (std::size_t j = 0; j < n; ++j) k_squared_[j] = wavenumbers_[j] * wavenumbers_[j];
    } else {
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b)
                k_squared_[a * n + b] = wavenumbers_[a] * wavenumbers_[a] + wavenumbers_[b] * wavenumbers_[b];
    }
    plan_ = std::make_shared<const FftPlan>(dim, n);
}

double Grid::cell_volume() const
{
    const double h = spacing();
    return dim_ == 1 ? h : h * h;
}

double Grid::coordinate(std::size_t j) const
{
    return -0.5 * box_length_ + static_cast<double>(j) * spacing();
}

void Grid::forward(std::span<const cplx> in, std::span<cplx> out) const
{
    plan_->execute(true, in.data(), out.data());
}

void Grid::inverse(std::span<const cplx> in, std::span<cplx> out) const
{
    plan_->execute(false, in.data(), out.data());
    const double scale = 1.0 / static_cast<double>(size_);
    for (auto& v : out) v *= scale;
}

Grid make_grid(int d, std::size_t n, double box_length) { return Grid(d, n, box_length); }

void apply_free_multiplier(std::span<cplx> u_hat, double t, const Grid& g)
{
    const auto ksq = g.k_squared();
    for (std::size_t j = 0; j < u_hat.size(); ++j) {
        const double phase = -ksq[j] * t;
        u_hat[j] *= cplx(std::cos(phase), std::sin(phase));
    }
}

Field free_propagate(const Field& u, double t, const Grid& g)
{
    if (t == 0.0) return u;
    Field w(u.size());
    g.forward(u, w);
    apply_free_multiplier(w, t, g);
    g.inverse(w, w);
    return w;
}

double l2_norm(std::span<const cplx> u, const Grid& g)
{
    double s = 0.0;
    for (const auto& v : u) s += std::norm(v);
    return std::sqrt(g.cell_volume() * s);
}

double lr_norm(std::span<const cplx> u, double r, const Grid& g)
{
    if (!(r >= 1.0)) throw std::invalid_argument("lr_norm: r must be >= 1");
    if (std::isinf(r)) {
        double m = 0.0;
        for (const auto& v : u) m = std::max(m, std::abs(v));
        return m;
    }
    if (r == 2.0) return l2_norm(u, g);
    const double e = 0.5 * r;
    double s = 0.0;
    for (const auto& v : u) s += detail::pow_sq(std::norm(v), e);
    return std::pow(g.cell_volume() * s, 1.0 / r);
}

double real_inner(std::span<const cplx> u, std::span<const cplx> v, const Grid& g)
{
    double s = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) s += u[j].real() * v[j].real() + u[j].imag() * v[j].imag();
    return g.cell_volume() * s;
}

bool all_finite(std::span<const cplx> u)
{
    return std::all_of(u.begin(), u.end(),
                       [](const cplx& v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); });
}

// ── Admissibility ────────────────────────────────────────────────────────────

bool check_admissible(double p, double r, int d)
{
    if (d < 1) return false;
    if (std::isnan(p) || std::isnan(r)) return false;
    if (p < 2.0 || r < 2.0) return false;
    if (d == 2 && p == 2.0 && std::isinf(r)) return false;
    if (d >= 3 && r > 2.0 * d / (d - 2.0)) return false;
    const double lhs = 2.0 / p + static_cast<double>(d) / r;  // 1/∞ = 0
    const double rhs = 0.5 * d;
    return std::abs(lhs - rhs) <= 1e-12 * rhs;
}

AdmissiblePair pair_for_exponent(double alpha, int d)
{
    return {4.0 * (alpha + 1.0) / (d * (alpha - 1.0)), alpha + 1.0};
}

double conjugate_exponent(double e)
{
    if (std::isinf(e)) return 1.0;
    if (e == 1.0) return kInf;
    return e / (e - 1.0);
}

// ── Norm series ──────────────────────────────────────────────────────────────

void NormSeries::push(double t, double l2, double lr)
{
    times.push_back(t);
    l2_values.push_back(l2);
    lr_values.push_back(lr);
}

double lp_time_norm(std::span<const double> times, std::span<const double> values,
                    double a, double b, double p)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < a) continue;
        if (times[i] >= b) break;
        const double next = i + 1 < times.size() ? std::min(times[i + 1], b) : b;
        const double width = next - times[i];
        if (std::isinf(p)) {
            if (width > 0.0) acc = std::max(acc, values[i]);
        } else {
            acc += std::pow(values[i], p) * width;
        }
    }
    return std::isinf(p) ? acc : std::pow(acc, 1.0 / p);
}

double y_norm(const NormSeries& ns, double t, double p)
{
    if (ns.empty()) throw std::out_of_range("y_norm: empty norm series");
    if (t > ns.times.back()) throw std::out_of_range("y_norm: t beyond the last stored time");
    double sup = 0.0;
    for (std::size_t i = 0; i < ns.size() && ns.times[i] <= t; ++i) sup = std::max(sup, ns.l2_values[i]);
    return sup + lp_time_norm(ns.times, ns.lr_values, ns.times.front(), t, p);
}

void YNormAccumulator::add(double t, double l2, double lr)
{
    if (started_) {
        const double width = t - last_t_;
        if (std::isinf(p_)) {
            if (width > 0.0) integral_ = std::max(integral_, last_lr_);
        } else {
            integral_ += std::pow(last_lr_, p_) * width;
        }
    }
    started_ = true;
    sup_l2_ = std::max(sup_l2_, l2);
    last_t_ = t;
    last_lr_ = lr;
}

double YNormAccumulator::lp_part() const
{
    return std::isinf(p_) ? integral_ : std::pow(integral_, 1.0 / p_);
}

double YNormAccumulator::value() const { return sup_l2_ + lp_part(); }

// ── Snapshots ────────────────────────────────────────────────────────────────

void write_snapshot(const std::string& path, const Field& u, const Grid& g)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open snapshot for writing: " + path);
    out << std::setprecision(17);
    out << g.dim() << ' ' << g.n() << ' ' << g.box_length() << '\n';
    for (const auto& v : u) out << v.real() << ' ' << v.imag() << '\n';
}

Snapshot read_snapshot(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open snapshot: " + path);
    Snapshot s{};
    if (!(in >> s.dim >> s.n >> s.box_length)) throw std::runtime_error("malformed snapshot header: " + path);
    const Grid g(s.dim, s.n, s.box_length);
    s.values.resize(g.size());
    for (auto& v : s.values) {
        double re = 0.0;
        double im = 0.0;
        if (!(in >> re >> im)) throw std::runtime_error("snapshot truncated: " + path);
        v = {re, im};
    }
    return s;
}

}  // namespace levynls
