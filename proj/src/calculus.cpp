#include "chpss/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <sstream>

#include "chpss/fault.hpp"
#include "csv_util.hpp"

namespace chpss {

namespace {

using cplx = std::complex<double>;

Field spectral_derivative(const Field& f, int order) {
    const Grid& g = f.grid();
    std::vector<cplx> spec(g.spectrum_size());
    g.fft().forward(f.values(), spec);
    const std::size_t nyq = g.size() / 2;
    const cplx i_unit(0.0, 1.0);
    for (std::size_t k = 0; k < spec.size(); ++k) {
        if (k == nyq && order % 2 == 1) {
            spec[k] = 0.0;
            continue;
        }
        const cplx ik = i_unit * g.wavenumber(k);
        cplx factor = ik;
        for (int p = 1; p < order; ++p) factor *= ik;
        spec[k] *= factor;
    }
    Field out(g);
    g.fft().backward(spec, out.values());
    return out;
}

// 4th-order accurate stencils; (order + 4) points for odd orders rounded to
// the symmetric width, shifted inward near the edges.
Field finite_difference_derivative(const Field& f, int order) {
    const Grid& g = f.grid();
    const std::size_t n = g.size();
    const std::size_t width = (order <= 2) ? 5 : 7;
    const std::size_t half = width / 2;
    std::vector<double> nodes(width);
    Field out(g);
    // Interior weights are shared; compute once on the unit lattice.
    for (std::size_t i = 0; i < width; ++i) nodes[i] = static_cast<double>(i) - static_cast<double>(half);
    const auto interior = fornberg_weights(0.0, nodes, order)[order];
    const double scale = std::pow(g.dx(), -order);
    for (std::size_t j = 0; j < n; ++j) {
        std::size_t start;
        if (j < half) {
            start = 0;
        } else if (j + half >= n) {
            start = n - width;
        } else {
            start = j - half;
        }
        double acc = 0.0;
        if (start + half == j) {
            for (std::size_t i = 0; i < width; ++i) acc += interior[i] * f[start + i];
        } else {
            for (std::size_t i = 0; i < width; ++i) {
                nodes[i] = static_cast<double>(start + i) - static_cast<double>(j);
            }
            const auto w = fornberg_weights(0.0, nodes, order)[order];
            for (std::size_t i = 0; i < width; ++i) acc += w[i] * f[start + i];
        }
        out[j] = acc * scale;
    }
    return out;
}

} // namespace

Field fd_derivative(const Field& f, int order) {
    if (order < 1 || order > 4) {
        throw Fault(FaultKind::InvalidArgument, "derivative order must be in 1..4");
    }
    require_finite(f, "fd_derivative");
    return finite_difference_derivative(f, order);
}

Field derivative(const Field& f, int order) {
    if (order < 1 || order > 4) {
        throw Fault(FaultKind::InvalidArgument, "derivative order must be in 1..4");
    }
    require_finite(f, "derivative");
    return f.grid().periodic() ? spectral_derivative(f, order) : finite_difference_derivative(f, order);
}

double integrate(const Field& f) {
    require_finite(f, "integrate");
    double sum = 0.0;
    for (double v : f.values()) sum += v;
    if (!f.grid().periodic()) sum -= 0.5 * f[0];
    return sum * f.grid().dx();
}

double sobolev_norm(const Field& f, double s) {
    const Grid& g = f.grid();
    if (!g.periodic()) {
        throw Fault(FaultKind::Unsupported, "sobolev_norm requires a periodic grid");
    }
    require_finite(f, "sobolev_norm");
    std::vector<cplx> spec(g.spectrum_size());
    g.fft().forward(f.values(), spec);
    const std::size_t nyq = g.size() / 2;
    double acc = 0.0;
    for (std::size_t k = 0; k < spec.size(); ++k) {
        const double xi = g.wavenumber(k);
        const double weight = (k == 0 || k == nyq) ? 1.0 : 2.0;
        acc += weight * std::pow(1.0 + xi * xi, s) * std::norm(spec[k]);
    }
    // Parseval: dx * sum |f_j|^2 = (dx / N) * sum_k |f_k|^2.
    return std::sqrt(acc * g.dx() / static_cast<double>(g.size()));
}

Extremum inf_with_argmin(const Field& f) {
    require_finite(f, "inf_with_argmin");
    const auto vals = f.values();
    const auto it = std::min_element(vals.begin(), vals.end());
    const auto idx = static_cast<std::size_t>(it - vals.begin());
    return {*it, f.grid().x(idx), idx};
}

Extremum sup_with_argmax(const Field& f) {
    require_finite(f, "sup_with_argmax");
    const auto vals = f.values();
    const auto it = std::max_element(vals.begin(), vals.end());
    const auto idx = static_cast<std::size_t>(it - vals.begin());
    return {*it, f.grid().x(idx), idx};
}

Extremum refine_minimum(const Field& f) {
    const Extremum lattice = inf_with_argmin(f);
    const Grid& g = f.grid();
    const double dx = g.dx();

    if (!g.periodic()) {
        if (lattice.index == 0 || lattice.index + 1 >= g.size()) return lattice;
        const double fm = f[lattice.index - 1], f0 = f[lattice.index], fp = f[lattice.index + 1];
        const double curv = fm - 2.0 * f0 + fp;
        if (curv <= 0.0) return lattice;
        const double shift = 0.5 * (fm - fp) / curv;
        return {f0 - 0.25 * (fm - fp) * shift, lattice.position + shift * dx, lattice.index};
    }

    const SpectralInterpolant interp(f);
    const double lo = lattice.position - dx;
    const double hi = lattice.position + dx;
    double x = lattice.position;
    bool converged = false;
    for (int it = 0; it < 30; ++it) {
        const auto d = interp.evaluate(x);
        if (d[2] <= 0.0) break;
        const double step = d[1] / d[2];
        x -= step;
        if (x < lo || x > hi) break;
        if (std::abs(step) < 1e-14 * std::max(1.0, std::abs(x))) {
            converged = true;
            break;
        }
    }
    if (!converged || x < lo || x > hi) {
        // Golden-section fallback on the bracketing cell pair.
        const double r = 0.5 * (std::sqrt(5.0) - 1.0);
        double a = lo, b = hi;
        double c = b - r * (b - a), e = a + r * (b - a);
        double fc = interp.value(c), fe = interp.value(e);
        for (int it = 0; it < 200 && (b - a) > 1e-13 * std::max(1.0, std::abs(a)); ++it) {
            if (fc < fe) {
                b = e; e = c; fe = fc;
                c = b - r * (b - a); fc = interp.value(c);
            } else {
                a = c; c = e; fc = fe;
                e = a + r * (b - a); fe = interp.value(e);
            }
        }
        x = 0.5 * (a + b);
    }
    const double v = interp.value(x);
    if (v > lattice.value) return lattice;
    return {v, x, lattice.index};
}

SpectralInterpolant::SpectralInterpolant(const Field& f) : origin_(f.grid().x(0)), dk_(0.0) {
    const Grid& g = f.grid();
    if (!g.periodic()) {
        throw Fault(FaultKind::Unsupported, "spectral interpolation requires a periodic grid");
    }
    require_finite(f, "SpectralInterpolant");
    coeff_.resize(g.spectrum_size());
    g.fft().forward(f.values(), coeff_);
    const double inv_n = 1.0 / static_cast<double>(g.size());
    const std::size_t nyq = g.size() / 2;
    for (std::size_t k = 0; k < coeff_.size(); ++k) {
        coeff_[k] *= (k == 0 || k == nyq) ? inv_n : 2.0 * inv_n;
    }
    dk_ = g.wavenumber(1);
}

std::array<double, 3> SpectralInterpolant::evaluate(double x) const {
    const double theta = dk_ * (x - origin_);
    const cplx step(std::cos(theta), std::sin(theta));
    cplx z(1.0, 0.0);
    double v = 0.0, d1 = 0.0, d2 = 0.0;
    const std::size_t nyq = coeff_.size() - 1;
    for (std::size_t k = 0; k < coeff_.size(); ++k) {
        const double kk = dk_ * static_cast<double>(k);
        const cplx term = coeff_[k] * z;
        v += term.real();
        if (k != nyq) d1 -= kk * term.imag();
        d2 -= kk * kk * term.real();
        // Re-anchor periodically to limit drift of the running product.
        if ((k & 63) == 63) {
            const double a = theta * static_cast<double>(k + 1);
            z = cplx(std::cos(a), std::sin(a));
        } else {
            z *= step;
        }
    }
    return {v, d1, d2};
}

std::vector<std::vector<double>> fornberg_weights(double x0, std::span<const double> nodes, int max_order) {
    const std::size_t n = nodes.size();
    const auto m = static_cast<std::size_t>(max_order);
    if (n == 0 || m + 1 > n) {
        throw Fault(FaultKind::InvalidArgument, "fornberg_weights: not enough nodes for requested order");
    }
    std::vector<std::vector<double>> c(m + 1, std::vector<double>(n, 0.0));
    double c1 = 1.0;
    double c4 = nodes[0] - x0;
    c[0][0] = 1.0;
    for (std::size_t i = 1; i < n; ++i) {
        const std::size_t mn = std::min(i, m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = nodes[i] - x0;
        for (std::size_t j = 0; j < i; ++j) {
            const double c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if (j == i - 1) {
                for (std::size_t k = mn; k >= 1; --k) {
                    c[k][i] = c1 * (static_cast<double>(k) * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for (std::size_t k = mn; k >= 1; --k) {
                c[k][j] = (c4 * c[k][j] - static_cast<double>(k) * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    return c;
}

void write_field_csv(const Field& f, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Fault(FaultKind::Io, "cannot open " + path + " for writing");
    out << "x,value\n";
    for (std::size_t j = 0; j < f.size(); ++j) {
        out << csv::num(f.grid().x(j)) << ',' << csv::num(f[j]) << '\n';
    }
}

Field read_field_csv(const Grid& grid, const std::string& path) {
    const auto table = csv::read(path);
    const auto col = table.column("value");
    return Field(grid, col);
}

} // namespace chpss
