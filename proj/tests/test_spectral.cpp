#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

using namespace levynls;

TEST_CASE("wavenumbers follow the discrete Fourier ordering")
{
    const Grid g(1, 8, 2.0 * std::numbers::pi);
    const std::vector<double> expected{0, 1, 2, 3, -4, -3, -2, -1};
    REQUIRE(g.wavenumbers().size() == expected.size());
    for (std::size_t j = 0; j < expected.size(); ++j) CHECK(g.wavenumbers()[j] == doctest::Approx(expected[j]).epsilon(1e-15));
}

TEST_CASE("grid construction")
{
    CHECK(Grid(2, 16, 10.0).size() == 256);
    CHECK_THROWS_AS(Grid(3, 8, 1.0), GridError);
    CHECK_THROWS_AS(Grid(1, 12, 1.0), GridError);
    CHECK_THROWS_AS(Grid(1, 8, -1.0), GridError);
    const Grid g(1, 8, 4.0);
    CHECK(g.coordinate(0) == doctest::Approx(-2.0));
    CHECK(g.spacing() == doctest::Approx(0.5));
}

TEST_CASE("forward then inverse transform is the identity")
{
    for (int d : {1, 2}) {
        const Grid g(d, 32, 7.0);
        const Field u = test::random_field(g, 3);
        Field hat(g.size()), back(g.size());
        g.forward(u, hat);
        g.inverse(hat, back);
        CHECK(test::max_abs_diff(u, back) < 1e-13);
    }
}

TEST_CASE("free propagation: identity, unitarity and group law")
{
    for (int d : {1, 2}) {
        const Grid g(d, d == 1 ? 256 : 32, 20.0);
        const Field u = test::random_field(g, 11, static_cast<std::uint64_t>(d));
        CHECK(test::max_abs_diff(free_propagate(u, 0.0, g), u) < 1e-13);
        CHECK(l2_norm(free_propagate(u, 0.37, g), g) == doctest::Approx(l2_norm(u, g)).epsilon(1e-13));
        const Field composed = free_propagate(free_propagate(u, 0.2, g), 0.5, g);
        const Field direct = free_propagate(u, 0.7, g);
        CHECK(test::max_abs_diff(composed, direct) < 1e-12);
        const Field back = free_propagate(direct, -0.7, g);
        CHECK(test::max_abs_diff(back, u) < 1e-12);
    }
}

TEST_CASE("a single Fourier mode acquires the phase exp(-i k^2 t)")
{
    const double L = 2.0 * std::numbers::pi;
    const Grid g(1, 16, L);
    Field u(g.size());
    for (std::size_t j = 0; j < g.n(); ++j) u[j] = std::polar(1.0, 3.0 * g.coordinate(j));
    const Field v = free_propagate(u, 0.25, g);
    const cplx phase = std::polar(1.0, -9.0 * 0.25);
    for (std::size_t j = 0; j < g.n(); ++j) CHECK(std::abs(v[j] - phase * u[j]) < 1e-13);
}

TEST_CASE("norms")
{
    const Grid g(1, 64, 2.0 * std::numbers::pi);
    CHECK(l2_norm(g.zeros(), g) == 0.0);
    const Field one(g.size(), cplx{1.0, 0.0});
    CHECK(l2_norm(one, g) == doctest::Approx(std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-14));
    CHECK(lr_norm(one, 4.0, g) == doctest::Approx(std::pow(2.0 * std::numbers::pi, 0.25)).epsilon(1e-14));

    const Field u = test::random_field(g, 5);
    Field u2 = u;
    for (auto& v : u2) v *= 2.0;
    CHECK(lr_norm(u2, 4.0, g) == doctest::Approx(2.0 * lr_norm(u, 4.0, g)).epsilon(1e-14));
    CHECK(lr_norm(u, kInf, g) == doctest::Approx(test::max_abs(u)).epsilon(1e-15));
    CHECK(lr_norm(u, 2.0, g) == doctest::Approx(l2_norm(u, g)).epsilon(1e-14));
    CHECK(real_inner(u, u, g) == doctest::Approx(l2_norm(u, g) * l2_norm(u, g)).epsilon(1e-13));
    CHECK_THROWS(lr_norm(u, 0.5, g));

    Field bad = u;
    CHECK(all_finite(bad));
    bad[3] = cplx(std::nan(""), 0.0);
    CHECK_FALSE(all_finite(bad));
}

TEST_CASE("admissible pairs")
{
    CHECK(check_admissible(8.0, 4.0, 1));
    CHECK_FALSE(check_admissible(2.0, kInf, 2));
    CHECK_FALSE(check_admissible(4.0, 4.0, 1));
    CHECK(check_admissible(kInf, 2.0, 1));
    CHECK(check_admissible(4.0, kInf, 1));
    const auto pr = pair_for_exponent(3.0, 1);
    CHECK(pr.p == doctest::Approx(8.0));
    CHECK(pr.r == doctest::Approx(4.0));
    const auto pr2 = pair_for_exponent(2.0, 2);
    CHECK(check_admissible(pr2.p, pr2.r, 2));
    CHECK(pr2.r == doctest::Approx(3.0));
    CHECK(conjugate_exponent(4.0) == doctest::Approx(4.0 / 3.0));
    CHECK(conjugate_exponent(1.0) == kInf);
}

TEST_CASE("Y-norm of a norm series")
{
    NormSeries zero;
    for (int i = 0; i <= 10; ++i) zero.push(0.1 * i, 0.0, 0.0);
    CHECK(y_norm(zero, 1.0, 8.0) == 0.0);

    const double a = 1.5, b = 0.7, p = 8.0;
    NormSeries constant;
    for (int i = 0; i <= 100; ++i) constant.push(0.01 * i, a, b);
    CHECK(y_norm(constant, 1.0, p) == doctest::Approx(a + b).epsilon(1e-13));
    CHECK(y_norm(constant, 0.5, p) == doctest::Approx(a + b * std::pow(0.5, 1.0 / p)).epsilon(1e-13));

    // Hand-computed left-endpoint sums.
    NormSeries three;
    three.push(0.0, 1.0, 2.0);
    three.push(0.5, 3.0, 1.0);
    three.push(1.5, 2.0, 4.0);
    CHECK(y_norm(three, 1.5, 2.0) == doctest::Approx(3.0 + std::sqrt(4.0 * 0.5 + 1.0 * 1.0)).epsilon(1e-15));
    CHECK(y_norm(three, 1.0, 2.0) == doctest::Approx(3.0 + std::sqrt(4.0 * 0.5 + 1.0 * 0.5)).epsilon(1e-15));
    CHECK(y_norm(three, 0.25, 2.0) == doctest::Approx(1.0 + std::sqrt(4.0 * 0.25)).epsilon(1e-15));
    CHECK(y_norm(three, 1.5, kInf) == doctest::Approx(3.0 + 2.0));
    CHECK_THROWS_AS(y_norm(three, 2.0, 2.0), std::out_of_range);

    YNormAccumulator acc(2.0);
    for (std::size_t i = 0; i < three.size(); ++i) acc.add(three.times[i], three.l2_values[i], three.lr_values[i]);
    CHECK(acc.value() == doctest::Approx(y_norm(three, 1.5, 2.0)).epsilon(1e-15));
    CHECK(acc.sup_l2() == 3.0);
}

TEST_CASE("Y-norm accumulator agrees with the batch evaluation")
{
    NormSeries ns;
    Engine eng = make_stream(7, 0);
    double t = 0.0;
    YNormAccumulator acc(8.0);
    for (int i = 0; i < 500; ++i) {
        ns.push(t, uniform01(eng), uniform01(eng));
        acc.add(ns.times.back(), ns.l2_values.back(), ns.lr_values.back());
        CHECK(acc.value() == doctest::Approx(y_norm(ns, t, 8.0)).epsilon(1e-12));
        t += 0.001 * (0.5 + uniform01(eng));
    }
}

TEST_CASE("snapshots round-trip bit-exactly")
{
    const Grid g(2, 8, 3.3);
    const Field u = test::random_field(g, 9);
    const auto path = (std::filesystem::temp_directory_path() / "levynls_snapshot_test.txt").string();
    write_snapshot(path, u, g);
    const auto s = read_snapshot(path);
    CHECK(s.dim == 2);
    CHECK(s.n == 8);
    CHECK(s.box_length == 3.3);
    REQUIRE(s.values.size() == u.size());
    for (std::size_t j = 0; j < u.size(); ++j) CHECK(s.values[j] == u[j]);
    std::filesystem::remove(path);
    CHECK_THROWS(read_snapshot(path));
}
