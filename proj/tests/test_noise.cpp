#include "support.hpp"

#include "levynls/analysis.hpp"

#include <doctest.h>

#include <cmath>

using namespace levynls;

namespace {

const Grid& grid()
{
    static const Grid g(1, 256, 40.0);
    return g;
}

}  // namespace

TEST_CASE("noise model validation")
{
    const auto& g = grid();
    const Field z = test::scaled_to(test::gaussian(g, 1.0, 1.0), 0.5, g);
    CHECK_FALSE(validate_noise_model(NoiseModel{g, {{2.0, z}}}).has_value());

    const auto outside = validate_noise_model(NoiseModel{g, {{2.0, test::scaled_to(z, 1.5, g)}}});
    REQUIRE(outside.has_value());
    CHECK(outside->kind == NoiseIssueKind::MarkOutsideBall);

    const auto zero_rate = validate_noise_model(NoiseModel{g, {{2.0, z}, {0.0, z}}});
    REQUIRE(zero_rate.has_value());
    CHECK(zero_rate->kind == NoiseIssueKind::NonpositiveRate);
    CHECK(zero_rate->atom == 1);

    const auto mismatch = validate_noise_model(NoiseModel{g, {{1.0, Field(7)}}});
    REQUIRE(mismatch.has_value());
    CHECK(mismatch->kind == NoiseIssueKind::MarkSizeMismatch);

    CHECK_THROWS_AS(require_valid(NoiseModel{g, {{-1.0, z}}}), NoiseModelError);
    CHECK_NOTHROW(require_valid(NoiseModel{g, {{1.0, test::scaled_to(z, 1.0, g)}}}));
}

TEST_CASE("jump path sampling")
{
    const auto& g = grid();
    const Field z = test::scaled_to(test::gaussian(g, 1.0, 1.0), 0.5, g);
    const NoiseModel m{g, {{3.0, z}}};

    CHECK(sample_jump_path(m, 0.0, 1).events.empty());
    CHECK(sample_jump_path(NoiseModel{g, {}}, 5.0, 1).events.empty());
    CHECK_THROWS(sample_jump_path(m, -1.0, 1));

    SUBCASE("Poisson mean count")
    {
        const std::size_t paths = 10000;
        const double T = 10.0;
        double sum = 0.0;
        for (std::size_t i = 0; i < paths; ++i) {
            const auto p = sample_jump_path(m, T, 42, i);
            for (std::size_t k = 0; k < p.events.size(); ++k) {
                REQUIRE(p.events[k].time > 0.0);
                REQUIRE(p.events[k].time <= T);
                if (k > 0) REQUIRE(p.events[k].time > p.events[k - 1].time);
            }
            sum += static_cast<double>(p.events.size());
        }
        const double mean = sum / static_cast<double>(paths);
        const double se = std::sqrt(30.0 / static_cast<double>(paths));
        CHECK(std::abs(mean - 30.0) < 3.0 * se);
    }

    SUBCASE("mark frequencies follow the rates")
    {
        const NoiseModel two{g, {{1.0, z}, {3.0, z}}};
        std::size_t counts[2] = {0, 0};
        for (std::size_t i = 0; i < 2000; ++i)
            for (const auto& e : sample_jump_path(two, 5.0, 7, i).events) ++counts[e.atom];
        const double n = static_cast<double>(counts[0] + counts[1]);
        const double f0 = static_cast<double>(counts[0]) / n;
        CHECK(std::abs(f0 - 0.25) < 3.0 * std::sqrt(0.25 * 0.75 / n));
    }

    SUBCASE("paths are reproducible from (seed, stream)")
    {
        const auto a = sample_jump_path(m, 4.0, 99, 17);
        const auto b = sample_jump_path(m, 4.0, 99, 17);
        const auto c = sample_jump_path(m, 4.0, 99, 18);
        REQUIRE(a.events.size() == b.events.size());
        for (std::size_t k = 0; k < a.events.size(); ++k) CHECK(a.events[k].time == b.events[k].time);
        CHECK((c.events.size() != a.events.size() || c.events.front().time != a.events.front().time));
    }
}

TEST_CASE("compensator arithmetic")
{
    const auto& g = grid();
    const Field z = test::scaled_to(test::gaussian(g, 1.0, 1.0), 0.5, g);
    CHECK(compensator_of(NoiseModel{g, {{2.0, z}}}).second_moment == doctest::Approx(0.5).epsilon(1e-14));

    const auto sym = compensator_of(test::symmetric_model(g, 1.7, z));
    CHECK(test::max_abs(sym.mean_field) == 0.0);

    const Field unit = test::scaled_to(z, 1.0, g);
    const auto c = compensator_of(NoiseModel{g, {{1.0, unit}, {2.0, z}}});
    CHECK(c.q_moment(4.0) == doctest::Approx(1.125).epsilon(1e-14));
    CHECK(c.q_moment(2.0) == doctest::Approx(c.second_moment).epsilon(1e-14));
    for (std::size_t j = 0; j < g.size(); ++j) CHECK(std::abs(c.mean_field[j] - (unit[j] + 2.0 * z[j])) < 1e-15);
}

TEST_CASE("stochastic convolution closed forms")
{
    const auto& g = grid();
    const Field z = test::scaled_to(test::gaussian(g, 1.0, 1.0, 2.0), 0.5, g);
    const NoiseModel sym = test::symmetric_model(g, 1.0, z);

    JumpPath path;
    path.horizon = 2.0;
    path.events = {{0.7, 0}};

    CHECK(test::max_abs(stochastic_convolution(path, sym, 0.5)) == 0.0);
    const Field m = stochastic_convolution(path, sym, 1.6);
    CHECK(test::max_abs_diff(m, free_propagate(z, 0.9, g)) < 1e-13);
    CHECK_THROWS_AS(stochastic_convolution(path, sym, 2.5), std::out_of_range);
}

TEST_CASE("compensator drift matches a fine Riemann sum")
{
    const auto& g = grid();
    const Field z = test::scaled_to(test::gaussian(g, 1.0, 2.0, -1.0), 0.8, g);
    const NoiseModel m{g, {{1.5, z}}};
    const double t = 0.5;
    JumpPath empty;
    empty.horizon = t;
    const Field closed = stochastic_convolution(empty, m, t);

    // Midpoint sum of −∫_0^t S_{t−s} μ ds with ds = 1e−5, mode by mode.
    const auto comp = compensator_of(m);
    Field mu_hat(g.size());
    g.forward(comp.mean_field, mu_hat);
    const std::size_t steps = 50000;
    const double ds = t / static_cast<double>(steps);
    Field sum_hat(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
        cplx acc{};
        const double k2 = g.k_squared()[j];
        for (std::size_t l = 0; l < steps; ++l) {
            const double s = (static_cast<double>(l) + 0.5) * ds;
            acc += std::polar(1.0, -k2 * (t - s));
        }
        sum_hat[j] = -acc * ds * mu_hat[j];
    }
    Field riemann(g.size());
    g.inverse(sum_hat, riemann);
    CHECK(l2_norm(test::difference(closed, riemann), g) / l2_norm(riemann, g) < 1e-10);
}

TEST_CASE("incremental convolution spectra agree with the closed form")
{
    const auto& g = grid();
    const Field z1 = test::scaled_to(test::gaussian(g, 1.0, 1.0, -3.0), 0.6, g);
    const Field z2 = test::scaled_to(test::gaussian(g, 1.0, 0.5, 4.0), 0.3, g);
    const NoiseModel m{g, {{4.0, z1}, {2.0, z2}}};
    const auto path = sample_jump_path(m, 1.0, 5, 0);
    REQUIRE(path.events.size() >= 2);
    std::vector<double> times;
    for (int k = 0; k <= 40; ++k) times.push_back(0.025 * k);
    const auto spectra = convolution_spectra(path, m, times);
    for (std::size_t k = 0; k < times.size(); ++k) {
        Field u(g.size());
        g.inverse(spectra[k], u);
        CHECK(test::max_abs_diff(u, stochastic_convolution(path, m, times[k])) < 1e-12);
    }
}

TEST_CASE("pathwise isometry bound and mean-square isometry")
{
    const auto& g = grid();
    const Field z1 = test::scaled_to(test::gaussian(g, 1.0, 1.0, -3.0), 0.6, g);
    const Field z2 = test::scaled_to(test::gaussian(g, 1.0, 0.5, 4.0), 0.3, g);
    const NoiseModel m{g, {{4.0, z1}, {2.0, z2}}};
    const auto comp = compensator_of(m);
    const double mu_norm = l2_norm(comp.mean_field, g);
    const double T = 1.0;

    const std::size_t paths = 4000;
    std::vector<double> sq(paths);
    std::vector<double> proj(paths);
    const Field probe = test::gaussian(g, 1.0, 2.0);
    for (std::size_t i = 0; i < paths; ++i) {
        const auto path = sample_jump_path(m, T, 2024, i);
        const Field mt = stochastic_convolution(path, m, T);
        double bound = T * mu_norm;
        for (const auto& e : path.events) bound += e.atom == 0 ? 0.6 : 0.3;
        REQUIRE(l2_norm(mt, g) <= bound * (1.0 + 1e-12));
        sq[i] = std::pow(l2_norm(mt, g), 2.0);
        proj[i] = real_inner(mt, probe, g);
    }
    // E‖M(T)‖² = T·Σλ‖z‖² and E⟨M(T), φ⟩ = 0.
    const auto e_sq = estimate_mean(sq);
    CHECK(std::abs(e_sq.mean - comp.second_moment * T) < 4.0 * e_sq.std_error);
    const auto e_proj = estimate_mean(proj);
    CHECK(std::abs(e_proj.mean) < 4.0 * e_proj.std_error);
}
