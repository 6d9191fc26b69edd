#include <cmath>
#include <numbers>

#include "chpss/calculus.hpp"
#include "chpss/fault.hpp"
#include "chpss/helmholtz.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace chpss;
using std::numbers::pi;

namespace {

Field gauss(const Grid& g, double n = 1.0) {
    return Field::sample(g, [n](double x) { return oracle::gaussian(x, n); });
}

constexpr KernelMethod kBoth[] = {KernelMethod::SpectralMultiplier, KernelMethod::TwoPassExponential};

} // namespace

TEST_CASE("constants are fixed points of the inverse") {
    Grid g(pi, 64);
    Field c = Field::sample(g, [](double) { return 1.7; });
    CHECK((helmholtz_inverse(c) - c).max_abs() < 1e-13);
    CHECK(dx_helmholtz_inverse(c).max_abs() < 1e-13);
    CHECK((momentum(c) - c).max_abs() < 1e-13);
}

TEST_CASE("single Fourier modes") {
    Grid g(pi, 64);
    Field two_sin = Field::sample(g, [](double x) { return 2 * std::sin(x); });
    Field two_cos = Field::sample(g, [](double x) { return 2 * std::cos(x); });
    Field sin = Field::sample(g, [](double x) { return std::sin(x); });
    CHECK((helmholtz_inverse(two_sin) - sin).max_abs() <= 1e-10);
    CHECK((dx_helmholtz_inverse(two_cos) + sin).max_abs() <= 1e-10);
    CHECK((momentum(sin) - two_sin).max_abs() <= 1e-10);
    CHECK((velocity_from_momentum(two_sin) - sin).max_abs() <= 1e-10);
    CHECK(velocity_from_momentum(Field(g)).is_zero());
}

TEST_CASE("both kernels agree with brute-force quadrature") {
    Grid g(30.0, 2048);
    Field f = gauss(g);
    auto fn = [](double y) { return oracle::gaussian(y, 1.0); };
    for (auto method : kBoth) {
        Field u = helmholtz_inverse(f, method);
        Field du = dx_helmholtz_inverse(f, method);
        double err = 0.0, derr = 0.0;
        for (std::size_t j = 0; j < g.size(); j += 7) {
            const double x = g.x(j);
            if (std::abs(x) > 12.0) continue;
            err = std::max(err, std::abs(u[j] - oracle::kernel_convolution(fn, x, 30.0, 24)));
            derr = std::max(derr, std::abs(du[j] - oracle::kernel_dx_convolution(fn, x, 30.0, 24)));
        }
        CAPTURE(to_string(method));
        CHECK(err <= 1e-6);
        CHECK(derr <= 1e-6);
    }
}

TEST_CASE("two-pass kernel works on decay-truncated grids") {
    Grid g(30.0, 2048, BoundaryMode::DecayTruncated);
    Field f = gauss(g);
    CHECK_THROWS_AS(helmholtz_inverse(f), Fault);
    CHECK_THROWS_AS(dx_helmholtz_inverse(f), Fault);
    Field u = helmholtz_inverse(f, KernelMethod::TwoPassExponential);
    Field ref = helmholtz_inverse(gauss(Grid(30.0, 2048)));
    double diff = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) diff = std::max(diff, std::abs(u[j] - ref[j]));
    CHECK(diff <= 1e-10);
    // momentum here goes through 4th-order differences
    CHECK((momentum(u) - f).max_abs() <= 1e-6);
}

TEST_CASE("derivative kernel matches differentiating the inverse") {
    Grid g(30.0, 2048);
    Field f = gauss(g);
    for (auto method : kBoth) {
        CHECK((dx_helmholtz_inverse(f, method) - derivative(helmholtz_inverse(f, method), 1)).max_abs() <= 1e-8);
    }
}

TEST_CASE("momentum of a Gaussian") {
    Grid g(30.0, 2048);
    Field m = momentum(gauss(g));
    double err = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
        const double x = g.x(j);
        err = std::max(err, std::abs(m[j] - (3 - 4 * x * x) * std::exp(-x * x)));
    }
    CHECK(err <= 1e-8);
}

TEST_CASE("left inverse, positivity and method agreement") {
    Grid g(30.0, 2048);
    for (double n : {1.0, 2.0, 0.5}) {
        Field f = gauss(g, n);
        Field us = helmholtz_inverse(f, KernelMethod::SpectralMultiplier);
        Field ut = helmholtz_inverse(f, KernelMethod::TwoPassExponential);
        CHECK((momentum(us) - f).max_abs() <= 1e-8);
        CHECK((momentum(ut) - f).max_abs() <= 1e-8);
        CHECK((us - ut).max_abs() <= 1e-6);
        for (const Field* u : {&us, &ut}) {
            CHECK(inf_with_argmin(*u).value >= -1e-12 * u->max_abs());
        }
    }
}

TEST_CASE("velocity from the Gaussian momentum is positive") {
    Grid g(30.0, 2048);
    Field u0 = velocity_from_momentum(gauss(g));
    for (std::size_t j = 1; j + 1 < g.size(); ++j) CHECK(u0[j] > 0.0);
}

TEST_CASE("inverse gains two Sobolev orders") {
    Grid g(30.0, 2048);
    Field f = Field::sample(g, [](double x) { return std::exp(-x * x) * std::cos(3 * x); });
    Field u = helmholtz_inverse(f);
    for (double s : {-1.0, 0.0, 1.0, 2.5}) {
        CHECK(sobolev_norm(u, s + 2) <= sobolev_norm(f, s) * (1 + 1e-12));
    }
}

TEST_CASE("kernel method names round-trip") {
    for (auto m : kBoth) CHECK(kernel_method_from_string(to_string(m)) == m);
    CHECK_THROWS_AS(kernel_method_from_string("fmm"), Fault);
}
