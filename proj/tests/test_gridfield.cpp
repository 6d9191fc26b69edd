#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include "chpss/calculus.hpp"
#include "chpss/fault.hpp"
#include "chpss/grid.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace chpss;
using std::numbers::pi;

namespace {

double max_diff(const Field& f, double (*ref)(double)) {
    double e = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) e = std::max(e, std::abs(f[j] - ref(f.grid().x(j))));
    return e;
}

Field gauss(const Grid& g, double n = 1.0) {
    return Field::sample(g, [n](double x) { return oracle::gaussian(x, n); });
}

} // namespace

TEST_CASE("grid validates its shape") {
    CHECK_THROWS_AS(Grid(30.0, 8), Fault);
    CHECK_THROWS_AS(Grid(-1.0, 64), Fault);
    CHECK_THROWS_AS(Grid(30.0, 65), Fault);
    Grid g(30.0, 2048);
    CHECK(g.dx() == doctest::Approx(60.0 / 2048));
    CHECK(g.x(0) == -30.0);
    CHECK(g.x(2047) == doctest::Approx(30.0 - g.dx()));
}

TEST_CASE("fields reject non-finite values with the offending index") {
    Grid g(1.0, 16);
    Field f(g);
    f[5] = std::nan("");
    try {
        derivative(f, 1);
        FAIL("expected a fault");
    } catch (const Fault& e) {
        CHECK(e.kind() == FaultKind::NonFinite);
        CHECK(std::string(e.what()).find("5") != std::string::npos);
    }
    CHECK_THROWS_AS(derivative(Field(g), 5), Fault);
}

TEST_CASE("spectral derivative of sin") {
    Grid g(pi, 64);
    Field f = Field::sample(g, [](double x) { return std::sin(x); });
    CHECK(max_diff(derivative(f, 1), [](double x) { return std::cos(x); }) < 1e-10);
    CHECK(max_diff(derivative(f, 3), [](double x) { return -std::cos(x); }) < 1e-10);
    // fourth order amplifies rounding by ~(N/2)^4
    CHECK(max_diff(derivative(f, 4), [](double x) { return std::sin(x); }) < 1e-9);
}

TEST_CASE("derivative of a constant vanishes") {
    for (auto mode : {BoundaryMode::Periodic, BoundaryMode::DecayTruncated}) {
        Grid g(5.0, 128, mode);
        Field c = Field::sample(g, [](double) { return 2.5; });
        for (int order = 1; order <= 4; ++order) CHECK(derivative(c, order).max_abs() < 1e-9);
    }
}

TEST_CASE("second derivative of a Gaussian against the closed form") {
    Grid g(30.0, 2048);
    Field d2 = derivative(gauss(g), 2);
    CHECK(max_diff(d2, [](double x) { return oracle::gaussian_d2(x, 1.0); }) <= 1e-8);
}

TEST_CASE("finite differences converge at fourth order") {
    double err[2];
    int k = 0;
    for (std::size_t n : {512u, 1024u}) {
        Grid g(10.0, n, BoundaryMode::DecayTruncated);
        Field d1 = derivative(gauss(g), 1);
        err[k++] = max_diff(d1, [](double x) { return oracle::gaussian_d1(x, 1.0); });
    }
    CHECK(std::log2(err[0] / err[1]) > 3.8);
}

TEST_CASE("iterated first derivative equals second derivative") {
    Grid g(pi, 64);
    Field f = Field::sample(g, [](double x) { return std::sin(3 * x) + 0.2 * std::cos(7 * x); });
    Field a = derivative(derivative(f, 1), 1);
    Field b = derivative(f, 2);
    CHECK((a - b).max_abs() < 1e-8);
}

TEST_CASE("trapezoid quadrature") {
    Grid g(30.0, 2048);
    CHECK(integrate(Field(g)) == 0.0);
    CHECK(integrate(Field::sample(g, [](double) { return 1.0; })) == doctest::Approx(60.0).epsilon(1e-14));
    CHECK(std::abs(integrate(gauss(g)) - std::sqrt(pi)) < 1e-10);
    Grid d(30.0, 2048, BoundaryMode::DecayTruncated);
    CHECK(std::abs(integrate(gauss(d)) - std::sqrt(pi)) < 1e-10);
}

TEST_CASE("integral of a periodic derivative vanishes") {
    Grid g(4.0, 256);
    for (double shift : {0.0, 0.7, -1.3}) {
        Field f = Field::sample(g, [shift](double x) { return std::exp(-(x - shift) * (x - shift)) + 0.1 * x * x; });
        CHECK(std::abs(integrate(derivative(f, 1))) < 1e-10);
    }
}

TEST_CASE("Sobolev norms of a Gaussian") {
    Grid g(30.0, 2048);
    Field f = gauss(g);
    CHECK(sobolev_norm(Field(g), 1.5) == 0.0);
    CHECK(std::abs(sobolev_norm(f, 0.0) - std::pow(pi / 2.0, 0.25)) < 1e-8);
    CHECK(sobolev_norm(f, 0.0) == doctest::Approx(std::sqrt(integrate(hadamard(f, f)))).epsilon(1e-10));

    // H^1 against Gauss-Legendre quadrature of f^2 + f'^2
    auto integrand = [](double x) {
        const double v = oracle::gaussian(x, 1.0), d = oracle::gaussian_d1(x, 1.0);
        return v * v + d * d;
    };
    const double ref = std::sqrt(oracle::composite_gl(integrand, -30.0, 30.0, 120));
    CHECK(std::abs(sobolev_norm(f, 1.0) - ref) / ref <= 1e-8);
    CHECK(sobolev_norm(f, 1.0) * sobolev_norm(f, 1.0) ==
          doctest::Approx(oracle::gaussian_h1_squared(1.0)).epsilon(1e-12));

    double prev = 0.0;
    for (double s = -1.0; s <= 3.0; s += 0.5) {
        const double v = sobolev_norm(f, s);
        CHECK(v >= prev);
        prev = v;
    }
    CHECK_THROWS_AS(sobolev_norm(gauss(Grid(30.0, 256, BoundaryMode::DecayTruncated)), 1.0), Fault);
}

TEST_CASE("argmin tie-breaks to the leftmost point") {
    Grid g(30.0, 64);
    auto e = inf_with_argmin(Field::sample(g, [](double) { return 3.0; }));
    CHECK(e.value == 3.0);
    CHECK(e.position == -30.0);
    CHECK(e.index == 0);

    Grid s(pi, 64);
    auto m = inf_with_argmin(Field::sample(s, [](double x) { return std::sin(x); }));
    CHECK(m.value == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(std::abs(m.position + pi / 2) <= s.dx());
}

TEST_CASE("minimum of a Gaussian slope") {
    Grid g(30.0, 2048);
    Field d1 = derivative(gauss(g), 1);
    auto m = inf_with_argmin(d1);
    CHECK(std::abs(m.position - 1.0 / std::sqrt(2.0)) <= g.dx());
    CHECK(std::abs(m.value + std::sqrt(2.0 / std::exp(1.0))) < 1e-3);

    auto r = refine_minimum(d1);
    CHECK(r.value == doctest::Approx(-std::sqrt(2.0 / std::exp(1.0))).epsilon(1e-10));
    CHECK(r.position == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-8));
}

TEST_CASE("spectral interpolant reproduces samples and derivatives") {
    Grid g(pi, 64);
    Field f = Field::sample(g, [](double x) { return std::sin(2 * x) + std::cos(x); });
    SpectralInterpolant p(f);
    for (double x : {-3.0, -0.4, 0.123, 2.9}) {
        auto v = p.evaluate(x);
        CHECK(v[0] == doctest::Approx(std::sin(2 * x) + std::cos(x)).epsilon(1e-12));
        CHECK(v[1] == doctest::Approx(2 * std::cos(2 * x) - std::sin(x)).epsilon(1e-11));
        CHECK(v[2] == doctest::Approx(-4 * std::sin(2 * x) - std::cos(x)).epsilon(1e-11));
    }
}

TEST_CASE("Fornberg weights on a nonuniform stencil") {
    const double nodes[] = {-0.3, 0.0, 0.5, 1.1, 1.4};
    auto w = fornberg_weights(0.2, nodes, 2);
    double d1 = 0.0, d2 = 0.0;
    for (int i = 0; i < 5; ++i) {
        d1 += w[1][i] * std::pow(nodes[i], 3);
        d2 += w[2][i] * std::pow(nodes[i], 3);
    }
    CHECK(d1 == doctest::Approx(3 * 0.04).epsilon(1e-12));
    CHECK(d2 == doctest::Approx(6 * 0.2).epsilon(1e-12));
}

TEST_CASE("field CSV round trip keeps every bit") {
    Grid g(3.0, 32);
    Field f = Field::sample(g, [](double x) { return std::exp(-x * x) / 3.0; });
    auto path = std::filesystem::temp_directory_path() / "chpss_field_roundtrip.csv";
    write_field_csv(f, path.string());
    Field r = read_field_csv(g, path.string());
    for (std::size_t j = 0; j < f.size(); ++j) CHECK(r[j] == f[j]);
    std::filesystem::remove(path);
}
