#include <cmath>
#include <numbers>

#include "chpss/calculus.hpp"
#include "chpss/diagnostics.hpp"
#include "chpss/fault.hpp"
#include "chpss/solver.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace chpss;
using std::numbers::pi;

namespace {

Field gauss(const Grid& g, double n = 1.0) {
    return Field::sample(g, [n](double x) { return oracle::gaussian(x, n); });
}

double h1_energy(const SolutionFrame& f) { return conserved_channels(f).H1; }

} // namespace

TEST_CASE("zero state is an equilibrium") {
    Grid g(30, 256);
    CHECK(rhs(Field(g)).is_zero());
    RunConfig cfg(g);
    cfg.allow_trivial = true;
    const SolutionFrame z = SolutionFrame::from_velocity(Field(g));
    CHECK(step_rk4(z, 0.5, cfg).u.is_zero());

    cfg.t_end = 2.0;
    const Trajectory tr = run(Field(g), cfg);
    CHECK(tr.termination == Termination::ReachedEnd);
    CHECK(tr.trivial());
    CHECK(tr.frames.back().t == 2.0);
    for (const auto& f : tr.frames) CHECK(f.u.is_zero());
}

TEST_CASE("zero datum is rejected unless allowed") {
    Grid g(30, 256);
    RunConfig cfg(g);
    CHECK_THROWS_AS(run(Field(g), cfg), Fault);
}

TEST_CASE("config validation") {
    Grid g(30, 256);
    RunConfig cfg(g);
    cfg.lambda = 0.0;
    CHECK_THROWS_WITH(cfg.validate(), doctest::Contains("lambda must be nonzero"));
    cfg = RunConfig(g);
    cfg.cfl = 0.0;
    CHECK_THROWS(cfg.validate());
    cfg = RunConfig(g);
    cfg.t_end = -1.0;
    CHECK_THROWS(cfg.validate());
}

TEST_CASE("rhs of an even datum is odd") {
    Grid g(30, 1024);
    const Field r = rhs(gauss(g));
    const std::size_t mid = g.size() / 2;
    CHECK(g.x(mid) == doctest::Approx(0.0));
    CHECK(std::abs(r[mid]) <= 1e-10);
    double asym = 0.0;
    for (std::size_t j = 1; j < mid; ++j) asym = std::max(asym, std::abs(r[mid + j] + r[mid - j]));
    CHECK(asym <= 1e-12);
}

TEST_CASE("rhs matches the local form after applying 1 - dxx") {
    // u = e^{-x^2}; derivatives in closed form
    Grid g(30, 2048);
    const Field u = gauss(g);
    const Field lhs = momentum(rhs(u));
    double err = 0.0, scale = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
        const double x = g.x(j), e = std::exp(-x * x);
        const double u0 = e, u1 = -2 * x * e, u2 = (4 * x * x - 2) * e, u3 = (12 * x - 8 * x * x * x) * e;
        const double want = -(3 * u0 * u1 - 2 * u1 * u2 - u0 * u3);
        err = std::max(err, std::abs(lhs[j] - want));
        scale = std::max(scale, std::abs(want));
    }
    CHECK(err / scale <= 1e-6);
}

TEST_CASE("rk4 self-convergence order") {
    Grid g(30, 512);
    RunConfig cfg(g);
    cfg.filter = SpectralFilter::None;
    const SolutionFrame f0 = SolutionFrame::from_velocity(gauss(g));
    std::vector<double> errs;
    for (double dt : {0.16, 0.08, 0.04}) {
        const SolutionFrame one = step_rk4(f0, dt, cfg);
        const SolutionFrame two = step_rk4(step_rk4(f0, dt / 2, cfg), dt / 2, cfg);
        errs.push_back((one.u - two.u).max_abs());
    }
    const double p1 = std::log2(errs[0] / errs[1]);
    const double p2 = std::log2(errs[1] / errs[2]);
    INFO("orders " << p1 << " " << p2);
    CHECK(p1 >= 3.9);
    CHECK(p2 >= 3.9);
}

TEST_CASE("H1 is conserved over [0, 1]") {
    Grid g(30, 2048);
    RunConfig cfg(g);
    cfg.t_end = 1.0;
    cfg.output_stride = 1000;
    const Field u0 = velocity_from_momentum(gauss(g));
    const Trajectory tr = run(u0, cfg);
    REQUIRE(tr.termination == Termination::ReachedEnd);
    CHECK(tr.frames.back().t == 1.0);
    const double h0 = h1_energy(tr.frames.front());
    const double h1 = h1_energy(tr.frames.back());
    CHECK(std::abs(h1 - h0) / h0 <= 1e-6);
}

TEST_CASE("frames honor the stride and the history covers every step") {
    Grid g(30, 1024);
    RunConfig cfg(g);
    cfg.t_end = 0.5;
    cfg.output_stride = 7;
    const Trajectory tr = run(gauss(g), cfg);
    REQUIRE(tr.termination == Termination::ReachedEnd);
    CHECK(tr.history.size() == tr.frames.back().step_index + 1);
    for (std::size_t k = 1; k + 1 < tr.frames.size(); ++k) CHECK(tr.frames[k].step_index % 7 == 0);
    for (std::size_t i = 1; i < tr.history.size(); ++i) CHECK(tr.history[i].t > tr.history[i - 1].t);
}

TEST_CASE("runs are deterministic") {
    Grid g(30, 512);
    RunConfig cfg(g);
    cfg.t_end = 0.3;
    const Trajectory a = run(gauss(g), cfg);
    const Trajectory b = run(gauss(g), cfg);
    REQUIRE(a.frames.size() == b.frames.size());
    CHECK((a.frames.back().u - b.frames.back().u).max_abs() == 0.0);
}

TEST_CASE("tail monitor rejects non-decaying data") {
    Grid g(30, 256);
    RunConfig cfg(g);
    const Field c = Field::sample(g, [](double) { return 1.0; });
    CHECK_FALSE(tail_compliant(c, derivative(c, 1)));
    try {
        run(c, cfg);
        FAIL("expected a tail fault");
    } catch (const Fault& e) {
        CHECK(e.kind() == FaultKind::Tail);
    }
    CHECK_THROWS_AS(rhs(c), Fault);
}

TEST_CASE("steep Gaussian triggers the blow-up stop") {
    Grid g(30, 4096);
    RunConfig cfg(g);
    cfg.t_end = 5.0;
    cfg.blowup_threshold = 3.0;
    const Trajectory tr = run(gauss(g, 2.0), cfg);
    REQUIRE(tr.termination == Termination::BlowupDetected);
    REQUIRE(tr.t_numeric);
    CHECK(*tr.t_numeric > 0.0);
    CHECK(tr.history.back().y < -3.0);
    CHECK(tr.frames.back().t == *tr.t_numeric);
}

TEST_CASE("filter keeps resolved modes") {
    Grid g(pi, 64);
    Field s = Field::sample(g, [](double x) { return std::sin(3 * x); });
    Field f = s;
    apply_filter(f, SpectralFilter::HouLi);
    CHECK((f - s).max_abs() <= 1e-14);
    Field nyq = Field::sample(g, [](double x) { return std::cos(32 * x); });
    apply_filter(nyq, SpectralFilter::HouLi);
    CHECK(nyq.max_abs() <= 1e-12);
    Field high = Field::sample(g, [](double x) { return std::cos(25 * x); });
    apply_filter(high, SpectralFilter::TwoThirds);
    CHECK(high.max_abs() <= 1e-14);
    CHECK(spectral_filter_from_string(to_string(SpectralFilter::TwoThirds)) == SpectralFilter::TwoThirds);
}
