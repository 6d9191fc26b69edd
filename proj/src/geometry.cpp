#include "chpss/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "chpss/calculus.hpp"
#include "chpss/fault.hpp"
#include "csv_util.hpp"

namespace chpss {

namespace {

void require_lambda(double lambda) {
    if (lambda == 0.0 || !std::isfinite(lambda)) throw Fault(FaultKind::InvalidArgument, "lambda must be nonzero");
}

struct LambdaConstants {
    double a, b, c, d;
    explicit LambdaConstants(double lambda)
        : a(0.5 * lambda + 0.5 / lambda),
          b(0.5 * lambda - 0.5 / lambda),
          c(0.5 * lambda * lambda - 0.5),
          d(0.5 * lambda * lambda + 0.5) {}
};

Field row_field(const Grid& g, const std::vector<double>& row) { return Field(g, row); }

} // namespace

CoframeSample coframe(double u, double ux, double m, double lambda) {
    require_lambda(lambda);
    const LambdaConstants k(lambda);
    CoframeSample cf{};
    cf.lambda = lambda;
    cf.f11 = k.a - m;
    cf.f12 = u * m + k.b * u - k.d;
    cf.f21 = 0.0;
    cf.f22 = -ux;
    cf.f31 = m - k.b;
    cf.f32 = k.c - k.a * u - u * m;
    return cf;
}

double wedge12(double ux, double m, double lambda) {
    require_lambda(lambda);
    return -(LambdaConstants(lambda).a - m) * ux;
}

MetricSample metric(const CoframeSample& cf) {
    return MetricSample{cf.f11 * cf.f11, cf.f11 * cf.f12, cf.f22 * cf.f22 + cf.f12 * cf.f12};
}

GeometryLattice metric_lattice(const Trajectory& traj, double lambda, std::size_t first, std::size_t last) {
    require_lambda(lambda);
    if (traj.frames.empty()) throw Fault(FaultKind::InvalidArgument, "metric_lattice: empty trajectory");
    if (last == 0 || last > traj.frames.size()) last = traj.frames.size();
    if (first >= last) throw Fault(FaultKind::InvalidArgument, "metric_lattice: empty frame range");
    GeometryLattice lat(traj.grid());
    lat.lambda = lambda;
    const std::size_t n = lat.grid.size();
    for (std::size_t k = first; k < last; ++k) {
        const SolutionFrame& f = traj.frames[k];
        std::vector<double> g11(n), g12(n), g22(n), w(n), ux(n);
        for (std::size_t j = 0; j < n; ++j) {
            const MetricSample g = metric(coframe(f.u[j], f.ux[j], f.m[j], lambda));
            g11[j] = g.g11;
            g12[j] = g.g12;
            g22[j] = g.g22;
            w[j] = wedge12(f.ux[j], f.m[j], lambda);
            ux[j] = f.ux[j];
        }
        lat.t.push_back(f.t);
        lat.g11.push_back(std::move(g11));
        lat.g12.push_back(std::move(g12));
        lat.g22.push_back(std::move(g22));
        lat.wedge.push_back(std::move(w));
        lat.ux.push_back(std::move(ux));
    }
    return lat;
}

double CurvatureField::fraction_within(double target, double tol) const {
    if (evaluated == 0) return 0.0;
    std::size_t hit = 0;
    for (std::size_t k = 0; k < K.size(); ++k) {
        for (std::size_t j = 0; j < K[k].size(); ++j) {
            if (ok[k][j] && std::abs(K[k][j] - target) <= tol) ++hit;
        }
    }
    return static_cast<double>(hit) / static_cast<double>(evaluated);
}

double CurvatureField::median_deviation(double target) const {
    std::vector<double> dev;
    dev.reserve(evaluated);
    for (std::size_t k = 0; k < K.size(); ++k) {
        for (std::size_t j = 0; j < K[k].size(); ++j) {
            if (ok[k][j]) dev.push_back(std::abs(K[k][j] - target));
        }
    }
    if (dev.empty()) return std::numeric_limits<double>::quiet_NaN();
    auto mid = dev.begin() + static_cast<std::ptrdiff_t>(dev.size() / 2);
    std::nth_element(dev.begin(), mid, dev.end());
    return *mid;
}

CurvatureField gaussian_curvature(const GeometryLattice& lat, const CurvatureOptions& opt) {
    const std::size_t nt = lat.frames();
    const std::size_t n = lat.grid.size();
    CurvatureField out;
    out.K.assign(nt, std::vector<double>(n, std::numeric_limits<double>::quiet_NaN()));
    out.ok.assign(nt, std::vector<std::uint8_t>(n, 0));
    constexpr std::size_t half = 3;

    // x derivatives of every row
    std::vector<std::vector<double>> Ex(nt), Fx(nt), Gx(nt), Gxx(nt);
    for (std::size_t k = 0; k < nt; ++k) {
        const Field E = row_field(lat.grid, lat.g11[k]);
        const Field F = row_field(lat.grid, lat.g12[k]);
        const Field G = row_field(lat.grid, lat.g22[k]);
        Ex[k] = derivative(E, 1).data();
        Fx[k] = derivative(F, 1).data();
        Gx[k] = derivative(G, 1).data();
        Gxx[k] = derivative(G, 2).data();
    }

    for (std::size_t k = 0; k < nt; ++k) {
        double wmax = 0.0;
        for (double w : lat.wedge[k]) wmax = std::max(wmax, std::abs(w));
        const bool centered = k >= half && k + half < nt;
        if (!centered || wmax == 0.0) {
            out.masked += n;
            continue;
        }
        std::vector<double> nodes(2 * half + 1);
        for (std::size_t i = 0; i < nodes.size(); ++i) nodes[i] = lat.t[k - half + i];
        const auto w = fornberg_weights(lat.t[k], nodes, 2);
        for (std::size_t j = 0; j < n; ++j) {
            if (std::abs(lat.wedge[k][j]) < opt.delta * wmax) {
                ++out.masked;
                continue;
            }
            double Et = 0, Ett = 0, Ft = 0, Gt = 0, Fxt = 0;
            for (std::size_t i = 0; i < nodes.size(); ++i) {
                const std::size_t r = k - half + i;
                Et += w[1][i] * lat.g11[r][j];
                Ett += w[2][i] * lat.g11[r][j];
                Ft += w[1][i] * lat.g12[r][j];
                Gt += w[1][i] * lat.g22[r][j];
                Fxt += w[1][i] * Fx[r][j];
            }
            const double E = lat.g11[k][j], F = lat.g12[k][j], G = lat.g22[k][j];
            const double Eu = Ex[k][j], Fu = Fx[k][j], Gu = Gx[k][j], Guu = Gxx[k][j];
            // Brioschi with (u, v) = (x, t)
            const double a11 = -0.5 * Ett + Fxt - 0.5 * Guu;
            const double a12 = 0.5 * Eu;
            const double a13 = Fu - 0.5 * Et;
            const double a21 = Ft - 0.5 * Gu;
            const double a31 = 0.5 * Gt;
            const double det1 = a11 * (E * G - F * F) - a12 * (a21 * G - F * a31) + a13 * (a21 * F - E * a31);
            const double b12 = 0.5 * Et, b13 = 0.5 * Gu;
            const double det2 = -b12 * (b12 * G - F * b13) + b13 * (b12 * F - E * b13);
            const double W = E * G - F * F;
            out.K[k][j] = (det1 - det2) / (W * W);
            out.ok[k][j] = 1;
            ++out.evaluated;
        }
    }
    return out;
}

StructureResiduals structure_residuals(const Trajectory& traj, double lambda) {
    require_lambda(lambda);
    const std::size_t nt = traj.frames.size();
    if (nt < 3) throw Fault(FaultKind::InvalidArgument, "structure_residuals: need at least 3 frames");
    const Grid& grid = traj.grid();
    const std::size_t n = grid.size();
    const LambdaConstants c(lambda);

    StructureResiduals res;
    std::vector<std::vector<double>> f11(nt, std::vector<double>(n)), f31(nt, std::vector<double>(n));
    for (std::size_t k = 0; k < nt; ++k) {
        res.t.push_back(traj.frames[k].t);
        for (std::size_t j = 0; j < n; ++j) {
            f11[k][j] = c.a - traj.frames[k].m[j];
            f31[k][j] = traj.frames[k].m[j] - c.b;
        }
    }
    res.r1.assign(nt, std::vector<double>(n));
    res.r2.assign(nt, std::vector<double>(n));
    res.r3.assign(nt, std::vector<double>(n));
    for (std::size_t k = 0; k < nt; ++k) {
        const SolutionFrame& f = traj.frames[k];
        Field f12(grid), f22(grid), f32(grid);
        for (std::size_t j = 0; j < n; ++j) {
            const CoframeSample cf = coframe(f.u[j], f.ux[j], f.m[j], lambda);
            f12[j] = cf.f12;
            f22[j] = cf.f22;
            f32[j] = cf.f32;
        }
        const Field d12 = derivative(f12, 1);
        const Field d22 = derivative(f22, 1);
        const Field d32 = derivative(f32, 1);
        const std::size_t start = (k == 0) ? 0 : (k + 1 == nt ? nt - 3 : k - 1);
        const double nodes[3] = {res.t[start], res.t[start + 1], res.t[start + 2]};
        const auto w = fornberg_weights(res.t[k], nodes, 1)[1];
        for (std::size_t j = 0; j < n; ++j) {
            double dt11 = 0.0, dt31 = 0.0;
            for (std::size_t i = 0; i < 3; ++i) {
                dt11 += w[i] * f11[start + i][j];
                dt31 += w[i] * f31[start + i][j];
            }
            const double F11 = f11[k][j], F31 = f31[k][j];
            const double r1 = d12[j] - dt11 - F31 * f22[j];
            const double r2 = d22[j] - (F11 * f32[j] - f12[j] * F31);
            const double r3 = d32[j] - dt31 - F11 * f22[j];
            res.r1[k][j] = r1;
            res.r2[k][j] = r2;
            res.r3[k][j] = r3;
            res.max_r1 = std::max(res.max_r1, std::abs(r1));
            res.max_r2 = std::max(res.max_r2, std::abs(r2));
            res.max_r1_plus_r3 = std::max(res.max_r1_plus_r3, std::abs(r1 + r3));
        }
    }
    return res;
}

namespace {

struct Run {
    std::size_t lo, hi; // inclusive
    int sign;
};

std::vector<Run> good_runs(const GeometryLattice& lat, std::size_t k, double delta) {
    const auto& w = lat.wedge[k];
    const auto& ux = lat.ux[k];
    double wmax = 0.0;
    for (double v : w) wmax = std::max(wmax, std::abs(v));
    std::vector<Run> runs;
    if (wmax == 0.0) return runs;
    const double cut = delta * wmax;
    std::size_t j = 0;
    const std::size_t n = w.size();
    while (j < n) {
        if (!(std::abs(w[j]) > cut) || ux[j] == 0.0) {
            ++j;
            continue;
        }
        const int sign = ux[j] > 0.0 ? 1 : -1;
        std::size_t e = j;
        while (e + 1 < n && std::abs(w[e + 1]) > cut && (ux[e + 1] > 0.0 ? 1 : (ux[e + 1] < 0.0 ? -1 : 0)) == sign) ++e;
        runs.push_back(Run{j, e, sign});
        j = e + 1;
    }
    return runs;
}

} // namespace

RegionSet generic_regions(const GeometryLattice& lat, const RegionOptions& opt, bool trivial_allowed) {
    RegionSet out;
    const std::size_t nt = lat.frames();
    out.frames = nt;
    std::vector<std::vector<Run>> runs(nt);
    std::vector<std::vector<std::uint8_t>> claimed(nt);
    for (std::size_t k = 0; k < nt; ++k) {
        runs[k] = good_runs(lat, k, opt.delta);
        claimed[k].assign(runs[k].size(), 0);
    }
    const std::size_t min_w = std::max<std::size_t>(opt.min_width, 1);
    for (std::size_t k0 = 0; k0 < nt; ++k0) {
        for (std::size_t r = 0; r < runs[k0].size(); ++r) {
            if (claimed[k0][r]) continue;
            const Run& seed = runs[k0][r];
            if (seed.hi - seed.lo + 1 < min_w) continue;
            claimed[k0][r] = 1;
            std::size_t lo = seed.lo, hi = seed.hi, k_end = k0;
            const std::size_t keep = std::max(min_w, (seed.hi - seed.lo + 1 + 1) / 2);
            for (std::size_t k = k0 + 1; k < nt; ++k) {
                std::size_t best = runs[k].size(), best_w = 0, best_lo = 0, best_hi = 0;
                for (std::size_t q = 0; q < runs[k].size(); ++q) {
                    const Run& c = runs[k][q];
                    if (claimed[k][q] || c.sign != seed.sign) continue;
                    const std::size_t a = std::max(lo, c.lo), b = std::min(hi, c.hi);
                    if (a > b) continue;
                    if (b - a + 1 > best_w) {
                        best = q;
                        best_w = b - a + 1;
                        best_lo = a;
                        best_hi = b;
                    }
                }
                if (best == runs[k].size() || best_w < keep) break;
                claimed[k][best] = 1;
                lo = best_lo;
                hi = best_hi;
                k_end = k;
            }
            out.regions.push_back(GenericRegion{lo, hi, k0, k_end, lat.grid.x(lo), lat.grid.x(hi), lat.t[k0],
                                                lat.t[k_end], seed.sign});
        }
    }
    std::vector<std::uint8_t> covered(nt, 0);
    for (const auto& g : out.regions) {
        for (std::size_t k = g.k_lo; k <= g.k_hi; ++k) covered[k] = 1;
    }
    out.frames_covered = static_cast<std::size_t>(std::count(covered.begin(), covered.end(), 1));
    bool nontrivial = false;
    for (std::size_t k = 0; k < nt && !nontrivial; ++k) {
        for (double v : lat.ux[k]) {
            if (v != 0.0) {
                nontrivial = true;
                break;
            }
        }
    }
    out.anomaly = nt > 0 && out.frames_covered < nt && (nontrivial || !trivial_allowed);
    return out;
}

MetricSample tail_metric(TailSide side, double x, double E, double lambda) {
    const double u = E * std::exp(side == TailSide::Left ? x : -x);
    const double ux = side == TailSide::Left ? u : -u;
    return metric(coframe(u, ux, 0.0, lambda));
}

MetricSample tail_baseline(double lambda) { return metric(coframe(0.0, 0.0, 0.0, lambda)); }

MetricSample tail_baseline_literal(double lambda) {
    require_lambda(lambda);
    const double s = lambda + 1.0 / lambda;
    return MetricSample{0.25 * s, -0.25 * (1.0 + lambda * lambda) * s, 0.25 * (1.0 + 0.5 / lambda)};
}

TailFit fit_tail(const SolutionFrame& frame, TailSide side, const TailFitOptions& opt) {
    TailFit fit;
    const Grid& g = frame.grid();
    const std::size_t n = g.size();
    const double mmax = frame.m.max_abs();
    if (mmax == 0.0) return fit;
    std::size_t first = n, last = 0;
    for (std::size_t j = 0; j < n; ++j) {
        if (std::abs(frame.m[j]) > opt.support_floor * mmax) {
            first = std::min(first, j);
            last = j;
        }
    }
    if (first == n) return fit;
    const double wall = 0.9 * g.half_width();
    double sx = 0, sy = 0, sxx = 0, sxy = 0, s_log_e = 0;
    int sign = 0;
    std::size_t cnt = 0;
    for (std::size_t j = 0; j < n; ++j) {
        const double x = g.x(j);
        const bool in_zone = side == TailSide::Right ? (x > g.x(last) + opt.margin && x < wall)
                                                     : (x < g.x(first) - opt.margin && x > -wall);
        const double a = std::abs(frame.u[j]);
        if (!in_zone || !(a > opt.lo && a < opt.hi)) continue;
        const double y = std::log(a);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        s_log_e += side == TailSide::Right ? y + x : y - x;
        sign += frame.u[j] > 0 ? 1 : -1;
        ++cnt;
    }
    fit.points = cnt;
    if (cnt < opt.min_points) return fit;
    const double c = static_cast<double>(cnt);
    fit.slope = (c * sxy - sx * sy) / (c * sxx - sx * sx);
    fit.E = (sign >= 0 ? 1.0 : -1.0) * std::exp(s_log_e / c);
    fit.below_floor = false;
    return fit;
}

TailAmplitudes extract_tail_amplitudes(const Trajectory& traj, const TailFitOptions& opt) {
    TailAmplitudes out;
    for (const auto& f : traj.frames) {
        out.t.push_back(f.t);
        out.plus.push_back(fit_tail(f, TailSide::Right, opt));
        out.minus.push_back(fit_tail(f, TailSide::Left, opt));
    }
    return out;
}

void write_geometry_csv(const GeometryLattice& lat, const CurvatureField* K, const std::string& path,
                        std::size_t x_stride) {
    std::ofstream os(path);
    if (!os) throw Fault(FaultKind::Io, "cannot write " + path);
    os << "x,t,g11,g12,g22,wedge,K,mask\n";
    const std::size_t step = std::max<std::size_t>(1, x_stride);
    for (std::size_t k = 0; k < lat.frames(); ++k) {
        for (std::size_t j = 0; j < lat.grid.size(); j += step) {
            const bool ok = K != nullptr && K->ok[k][j];
            os << csv::num(lat.grid.x(j)) << ',' << csv::num(lat.t[k]) << ',' << csv::num(lat.g11[k][j]) << ','
               << csv::num(lat.g12[k][j]) << ',' << csv::num(lat.g22[k][j]) << ',' << csv::num(lat.wedge[k][j]) << ','
               << (ok ? csv::num(K->K[k][j]) : std::string("nan")) << ',' << (ok ? 1 : 0) << '\n';
        }
    }
}

void write_regions_text(const RegionSet& regions, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw Fault(FaultKind::Io, "cannot write " + path);
    os << "regions " << regions.regions.size() << "\n";
    os << "frames " << regions.frames << "\n";
    os << "frames_covered " << regions.frames_covered << "\n";
    os << "anomaly " << (regions.anomaly ? "true" : "false") << "\n";
    for (std::size_t i = 0; i < regions.regions.size(); ++i) {
        const auto& r = regions.regions[i];
        os << "region " << i << " x=[" << csv::num(r.x_lo) << ", " << csv::num(r.x_hi) << "] t=[" << csv::num(r.t_lo)
           << ", " << csv::num(r.t_hi) << "] ux_sign=" << (r.ux_sign > 0 ? "+" : "-") << "\n";
    }
}

} // namespace chpss
