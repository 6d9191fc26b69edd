#include "chpss/characteristics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

#include "chpss/calculus.hpp"
#include "chpss/fault.hpp"

namespace chpss {

double CharacteristicFan::min_gap() const {
    double gap = std::numeric_limits<double>::infinity();
    for (const auto& q : paths) {
        for (std::size_t i = 0; i + 1 < q.size(); ++i) gap = std::min(gap, q[i + 1] - q[i]);
    }
    return gap;
}

PointSampler::PointSampler(const Field& f) : field_(&f) {
    const Grid& g = f.grid();
    if (!g.periodic()) return;
    spectral_ = true;
    coeff_.resize(g.spectrum_size());
    g.fft().forward(f.values(), coeff_);
    const double inv_n = 1.0 / static_cast<double>(g.size());
    const std::size_t nyq = g.size() / 2;
    for (std::size_t k = 0; k < coeff_.size(); ++k) coeff_[k] *= (k == 0 || k == nyq) ? inv_n : 2.0 * inv_n;
    origin_ = g.x(0);
    dk_ = g.wavenumber(1);
}

double PointSampler::operator()(double x) const {
    if (spectral_) {
        const double theta = dk_ * (x - origin_);
        const std::complex<double> step(std::cos(theta), std::sin(theta));
        std::complex<double> z(1.0, 0.0);
        double v = 0.0;
        for (std::size_t k = 0; k < coeff_.size(); ++k) {
            v += (coeff_[k] * z).real();
            if ((k & 63) == 63) {
                const double a = theta * static_cast<double>(k + 1);
                z = std::complex<double>(std::cos(a), std::sin(a));
            } else {
                z *= step;
            }
        }
        return v;
    }
    const Field& f = *field_;
    const Grid& g = f.grid();
    const std::size_t n = g.size();
    const double s = (x - g.x(0)) / g.dx();
    const auto base = static_cast<std::ptrdiff_t>(std::floor(s)) - 2;
    const auto start = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(base, 0, static_cast<std::ptrdiff_t>(n) - 6));
    double nodes[6];
    for (std::size_t i = 0; i < 6; ++i) nodes[i] = g.x(start + i);
    const auto w = fornberg_weights(x, nodes, 0)[0];
    double v = 0.0;
    for (std::size_t i = 0; i < 6; ++i) v += w[i] * f[start + i];
    return v;
}

namespace {

void check_inside(double q, double L, std::size_t seed, double t) {
    if (!(std::abs(q) <= L)) {
        std::ostringstream os;
        os << "characteristic from seed " << seed << " left [-L, L] at t=" << t;
        throw Fault(FaultKind::Tail, os.str());
    }
}

std::vector<double> seed_derivative(const std::vector<double>& q, std::span<const double> x) {
    const std::size_t n = q.size();
    std::vector<double> d(n, 1.0);
    if (n < 2) return d;
    d[0] = (q[1] - q[0]) / (x[1] - x[0]);
    d[n - 1] = (q[n - 1] - q[n - 2]) / (x[n - 1] - x[n - 2]);
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (q[i + 1] - q[i - 1]) / (x[i + 1] - x[i - 1]);
    return d;
}

} // namespace

CharacteristicFan evolve_characteristics(const Trajectory& traj, std::span<const double> seeds, int substeps) {
    if (traj.frames.empty()) throw Fault(FaultKind::InvalidArgument, "evolve_characteristics: empty trajectory");
    if (substeps < 1) throw Fault(FaultKind::InvalidArgument, "evolve_characteristics: substeps must be >= 1");
    for (std::size_t i = 1; i < seeds.size(); ++i) {
        if (!(seeds[i] > seeds[i - 1])) throw Fault(FaultKind::InvalidArgument, "seeds must be strictly increasing");
    }
    const double L = traj.grid().half_width();
    const std::size_t n_seeds = seeds.size();
    for (std::size_t i = 0; i < n_seeds; ++i) check_inside(seeds[i], L, i, traj.frames.front().t);

    CharacteristicFan fan;
    fan.seeds.assign(seeds.begin(), seeds.end());
    std::vector<double> q(seeds.begin(), seeds.end());

    auto record = [&](const SolutionFrame& f, const PointSampler& ux, const PointSampler& m) {
        fan.times.push_back(f.t);
        fan.paths.push_back(q);
        fan.qx.push_back(seed_derivative(q, seeds));
        std::vector<double> a(n_seeds), b(n_seeds);
        for (std::size_t i = 0; i < n_seeds; ++i) {
            a[i] = ux(q[i]);
            b[i] = m(q[i]);
        }
        fan.ux_on_path.push_back(std::move(a));
        fan.m_on_path.push_back(std::move(b));
    };

    PointSampler u_now(traj.frames[0].u);
    record(traj.frames[0], PointSampler(traj.frames[0].ux), PointSampler(traj.frames[0].m));

    for (std::size_t k = 0; k + 1 < traj.frames.size(); ++k) {
        const SolutionFrame& a = traj.frames[k];
        const SolutionFrame& b = traj.frames[k + 1];
        PointSampler u_next(b.u);
        const double span_t = b.t - a.t;
        const double h = span_t / substeps;
        // velocity at fraction theta of the interval
        auto vel = [&](double x, double theta) {
            if (theta == 0.0) return u_now(x);
            if (theta == 1.0) return u_next(x);
            return (1.0 - theta) * u_now(x) + theta * u_next(x);
        };
        for (std::size_t i = 0; i < n_seeds; ++i) {
            double x = q[i];
            for (int s = 0; s < substeps; ++s) {
                const double th0 = static_cast<double>(s) / substeps;
                const double th1 = static_cast<double>(s + 1) / substeps;
                const double thm = 0.5 * (th0 + th1);
                const double k1 = vel(x, th0);
                const double k2 = vel(x + 0.5 * h * k1, thm);
                const double k3 = vel(x + 0.5 * h * k2, thm);
                const double k4 = vel(x + h * k3, th1);
                x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
            check_inside(x, L, i, b.t);
            q[i] = x;
        }
        record(b, PointSampler(b.ux), PointSampler(b.m));
        u_now = std::move(u_next);
    }
    return fan;
}

TransportReport transport_identity_residual(const Trajectory& traj, const CharacteristicFan& fan) {
    TransportReport rep;
    const std::size_t n_seeds = fan.seeds.size();
    const std::size_t n_frames = fan.times.size();
    rep.residual.assign(n_seeds, std::vector<double>(n_frames, 0.0));
    rep.scale = traj.frames.front().m.max_abs();
    if (rep.scale == 0.0 || n_frames == 0) return rep;
    const double floor = 1e-8 * rep.scale;
    for (std::size_t i = 0; i < n_seeds; ++i) {
        const double m0 = fan.m_on_path[0][i];
        double integral = 0.0;
        for (std::size_t k = 0; k < n_frames; ++k) {
            if (k > 0) {
                integral += 0.5 * (fan.times[k] - fan.times[k - 1]) * (fan.ux_on_path[k][i] + fan.ux_on_path[k - 1][i]);
            }
            const double transported = m0 * std::exp(-2.0 * integral);
            const double actual = fan.m_on_path[k][i];
            const double r = std::abs(actual - transported) / rep.scale;
            rep.residual[i][k] = r;
            rep.max_relative = std::max(rep.max_relative, r);
            if (std::abs(m0) > floor && actual * m0 <= 0.0) {
                rep.sign_preserved = false;
                ++rep.sign_violations;
            }
        }
    }
    return rep;
}

} // namespace chpss
