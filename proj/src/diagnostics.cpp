#include "chpss/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "chpss/calculus.hpp"
#include "chpss/fault.hpp"
#include "csv_util.hpp"

namespace chpss {

ConservedChannels conserved_channels(const SolutionFrame& f) {
    Field h1(f.grid()), h2(f.grid());
    for (std::size_t j = 0; j < f.u.size(); ++j) {
        const double u = f.u[j], ux = f.ux[j];
        h1[j] = 0.5 * (u * u + ux * ux);
        h2[j] = 0.5 * (u * u * u + u * ux * ux);
    }
    return ConservedChannels{integrate(f.u), integrate(h1), integrate(h2)};
}

std::vector<DiagnosticsRecord> diagnostics_series(const Trajectory& traj, double lambda, const TailAmplitudes* tails) {
    std::vector<DiagnosticsRecord> rows;
    rows.reserve(traj.frames.size());
    for (std::size_t k = 0; k < traj.frames.size(); ++k) {
        const SolutionFrame& f = traj.frames[k];
        const ConservedChannels h = conserved_channels(f);
        const Extremum y = inf_with_argmin(f.ux);
        double g22max = -1.0, at = 0.0;
        for (std::size_t j = 0; j < f.u.size(); ++j) {
            const double g22 = metric(coframe(f.u[j], f.ux[j], f.m[j], lambda)).g22;
            if (g22 > g22max) {
                g22max = g22;
                at = f.grid().x(j);
            }
        }
        DiagnosticsRecord r{};
        r.t = f.t;
        r.H0 = h.H0;
        r.H1 = h.H1;
        r.H2 = h.H2;
        r.y = y.value;
        r.xi = y.position;
        r.sup_g22 = g22max;
        r.sup_g22_at = at;
        r.sup_abs_f32 = f.ux.max_abs();
        r.tail_max = tail_magnitude(f.u, f.ux);
        if (tails != nullptr && k < tails->t.size()) {
            r.E_plus = tails->plus[k].E;
            r.E_minus = tails->minus[k].E;
        }
        rows.push_back(r);
    }
    return rows;
}

void write_diagnostics_csv(const std::vector<DiagnosticsRecord>& rows, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw Fault(FaultKind::Io, "cannot write " + path);
    os << "t,H0,H1,H2,y,xi,sup_g22,sup_abs_f32,tail_max,E_plus,E_minus\n";
    for (const auto& r : rows) {
        os << csv::num(r.t) << ',' << csv::num(r.H0) << ',' << csv::num(r.H1) << ',' << csv::num(r.H2) << ','
           << csv::num(r.y) << ',' << csv::num(r.xi) << ',' << csv::num(r.sup_g22) << ',' << csv::num(r.sup_abs_f32)
           << ',' << csv::num(r.tail_max) << ',' << csv::num(r.E_plus) << ',' << csv::num(r.E_minus) << '\n';
    }
}

CriterionResult breaking_criterion(const Field& u0) {
    CriterionResult c;
    const Extremum e = refine_minimum(derivative(u0, 1));
    c.min_slope = e.value;
    c.witness = e.position;
    c.h1_norm = sobolev_norm(u0, 1.0);
    c.margin = c.min_slope + c.h1_norm / std::sqrt(2.0);
    c.met = c.margin < 0.0;
    return c;
}

double lifespan_lower_bound(const Field& u0) {
    if (u0.is_zero()) throw Fault(FaultKind::InvalidArgument, "lifespan bound undefined for the zero datum");
    const double slope = refine_minimum(derivative(u0, 1)).value;
    if (slope >= 0.0) return std::numeric_limits<double>::infinity();
    const double norm = sobolev_norm(u0, 1.0);
    return -(2.0 / norm) * std::atan(norm / slope);
}

BlowupReport breaking_monitor(const Trajectory& traj) {
    BlowupReport rep;
    rep.trivial = traj.trivial();
    if (rep.trivial) return rep;
    const Field& u0 = traj.frames.front().u;
    rep.criterion = breaking_criterion(u0);
    rep.T_lower = lifespan_lower_bound(u0);
    rep.t_numeric = traj.t_numeric;

    const auto& h = traj.history;
    if (h.empty()) return rep;
    const double y0 = h.front().y;
    bool descending = false;
    for (std::size_t i = 1; i < h.size(); ++i) {
        if (!descending && y0 < 0.0 && h[i].y < y0) descending = true;
        if (descending && h[i].y > h[i - 1].y + 1e-3 * std::abs(h[i - 1].y)) ++rep.monotone_violations;
    }
    if (!rep.t_numeric) return rep;

    // 1/y against t over the last decade of growth: slope = epsilon / 4
    const double y_end = h.back().y;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (h[i].y < 0.0 && std::abs(h[i].y) >= 0.1 * std::abs(y_end)) idx.push_back(i);
    }
    rep.fit_points = idx.size();
    if (idx.size() < 3) return rep;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i : idx) {
        const double x = h[i].t, y = 1.0 / h[i].y;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double c = static_cast<double>(idx.size());
    const double slope = (c * sxy - sx * sy) / (c * sxx - sx * sx);
    rep.epsilon_hat = 4.0 * slope;
    if (y0 < 0.0 && *rep.epsilon_hat > 0.0) rep.riccati_upper = -4.0 / (*rep.epsilon_hat * y0);
    // local rate y' against -(eps/4) y^2
    for (std::size_t n = 1; n < idx.size(); ++n) {
        const auto& a = h[idx[n - 1]];
        const auto& b = h[idx[n]];
        if (idx[n] != idx[n - 1] + 1 || b.t <= a.t) continue;
        const double rate = (b.y - a.y) / (b.t - a.t);
        const double ym = 0.5 * (a.y + b.y);
        const double bound = -0.25 * *rep.epsilon_hat * ym * ym;
        if (rate > 0.9 * bound) ++rep.riccati_violations;
    }
    return rep;
}

namespace {

std::string opt_num(const std::optional<double>& v) { return v ? csv::num(*v) : std::string("none"); }

} // namespace

void write_blowup_report(const BlowupReport& rep, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw Fault(FaultKind::Io, "cannot write " + path);
    if (rep.trivial) {
        os << "trivial true\n";
        return;
    }
    os << "criterion_met " << (rep.criterion.met ? "true" : "false") << "\n";
    os << "witness_x0 " << csv::num(rep.criterion.witness) << "\n";
    os << "inf_u0_slope " << csv::num(rep.criterion.min_slope) << "\n";
    os << "h1_norm " << csv::num(rep.criterion.h1_norm) << "\n";
    os << "criterion_margin " << csv::num(rep.criterion.margin) << "\n";
    os << "T_lower " << csv::num(rep.T_lower) << "\n";
    os << "t_numeric " << opt_num(rep.t_numeric) << "\n";
    os << "epsilon_hat " << opt_num(rep.epsilon_hat) << "\n";
    os << "riccati_upper " << opt_num(rep.riccati_upper) << "\n";
    os << "fit_points " << rep.fit_points << "\n";
    os << "riccati_violations " << rep.riccati_violations << "\n";
    os << "monotone_violations " << rep.monotone_violations << "\n";
}

namespace {

// Metric at the off-lattice minimizer of ux, where uxx vanishes. On the
// lattice argmin uxx is only O(dx |uxxx|), which diverges near breaking.
MetricSample metric_at_minimizer(const SolutionFrame& f, double lambda, double& xi) {
    const Extremum e = refine_minimum(f.ux);
    xi = e.position;
    if (!f.grid().periodic()) return metric(coframe(f.u[e.index], f.ux[e.index], f.m[e.index], lambda));
    const auto v = SpectralInterpolant(f.u).evaluate(xi);
    return metric(coframe(v[0], v[1], v[0] - v[2], lambda));
}

} // namespace

MetricBlowupReport metric_blowup_monitor(const Trajectory& traj, double lambda, double tolerance) {
    MetricBlowupReport rep;
    if (traj.frames.empty()) return rep;
    const double b = 0.5 * lambda - 0.5 / lambda;
    const double d = 0.5 * lambda * lambda + 0.5;
    const SolutionFrame& first = traj.frames.front();
    const double h1_0 = conserved_channels(first).H1;
    const double m0 = first.m.max_abs();
    const double amp = std::sqrt(2.0 * h1_0);

    // running integrals over every accepted step
    const auto& h = traj.history;
    std::vector<double> t_hist, i_ux, i_y;
    double acc_ux = 0.0, acc_y = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (i > 0) {
            const double dt = h[i].t - h[i - 1].t;
            acc_ux += 0.5 * dt * (h[i].sup_ux + h[i - 1].sup_ux);
            acc_y += 0.5 * dt * (std::abs(h[i].y) + std::abs(h[i - 1].y));
        }
        t_hist.push_back(h[i].t);
        i_ux.push_back(acc_ux);
        i_y.push_back(acc_y);
    }
    auto integral_at = [&](const std::vector<double>& acc, double t) {
        auto it = std::lower_bound(t_hist.begin(), t_hist.end(), t);
        if (it == t_hist.end()) return acc.empty() ? 0.0 : acc.back();
        return acc[static_cast<std::size_t>(it - t_hist.begin())];
    };

    double g11_ref = 0.0, g12_ref = 0.0;
    for (std::size_t k = 0; k < traj.frames.size(); ++k) {
        const SolutionFrame& f = traj.frames[k];
        MetricBlowupFrame row{};
        row.t = f.t;
        row.int_sup_ux = integral_at(i_ux, f.t);
        row.int_abs_y = integral_at(i_y, f.t);
        const double growth = std::exp(2.0 * row.int_sup_ux);
        const double lower_order = amp * (m0 * growth + std::abs(b)) + d;
        const double literal = amp * m0 * growth;
        row.sup_g22 = -1.0;
        row.bound_max_excess = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < f.u.size(); ++j) {
            const double g22 = metric(coframe(f.u[j], f.ux[j], f.m[j], lambda)).g22;
            if (g22 > row.sup_g22) {
                row.sup_g22 = g22;
                row.sup_g22_at = f.grid().x(j);
            }
            const double root = std::sqrt(g22);
            const double ux = std::abs(f.ux[j]);
            const double upper = ux + lower_order;
            row.bound_max_excess = std::max(row.bound_max_excess, root - upper);
            const bool lower_ok = ux <= root * (1.0 + 1e-14);
            if (!lower_ok || root > upper + tolerance * std::max(1.0, upper)) ++row.violations;
            if (root > ux + literal + tolerance * std::max(1.0, ux + literal)) ++row.literal_violations;
        }
        const MetricSample at = metric_at_minimizer(f, lambda, row.xi);
        row.g11_at_xi = at.g11;
        row.g12_at_xi = at.g12;
        row.g22_at_xi = at.g22;
        if (k == 0) {
            g11_ref = std::abs(at.g11) + 1.0;
            g12_ref = std::abs(at.g12) + 1.0;
        }
        rep.g11_ratio = std::max(rep.g11_ratio, std::abs(at.g11) / g11_ref);
        rep.g12_ratio = std::max(rep.g12_ratio, std::abs(at.g12) / g12_ref);
        rep.sup_g22 = std::max(rep.sup_g22, row.sup_g22);
        rep.violations += row.violations;
        rep.literal_violations += row.literal_violations;
        rep.frames.push_back(row);
    }
    rep.g11_g12_bounded = rep.g11_ratio <= 10.0 && rep.g12_ratio <= 10.0;
    rep.anomaly = rep.violations > 0;
    return rep;
}

const char* to_string(McKeanVerdict v) {
    switch (v) {
    case McKeanVerdict::NonnegGlobal: return "nonneg_global";
    case McKeanVerdict::NonposGlobal: return "nonpos_global";
    case McKeanVerdict::BreakingPattern: return "breaking_pattern";
    case McKeanVerdict::Indeterminate: return "indeterminate";
    }
    return "unknown";
}

McKeanClass mckean_classify(const Field& m0) {
    require_finite(m0, "mckean_classify");
    McKeanClass c;
    const double tol = 1e-12 * m0.max_abs();
    const std::size_t n = m0.size();
    std::size_t last_pos = n, first_neg = n;
    bool any_pos = false, any_neg = false;
    for (std::size_t j = 0; j < n; ++j) {
        if (m0[j] > tol) {
            any_pos = true;
            last_pos = j;
        } else if (m0[j] < -tol) {
            if (!any_neg) first_neg = j;
            any_neg = true;
        }
    }
    if (!any_neg) {
        c.verdict = McKeanVerdict::NonnegGlobal;
    } else if (!any_pos) {
        c.verdict = McKeanVerdict::NonposGlobal;
    } else if (last_pos < first_neg) {
        c.verdict = McKeanVerdict::BreakingPattern;
        const Grid& g = m0.grid();
        const double xa = g.x(last_pos), xb = g.x(first_neg);
        const double fa = m0[last_pos], fb = m0[first_neg];
        // zero of the secant when the two samples are adjacent, midpoint of the gap otherwise
        c.crossing = (first_neg == last_pos + 1) ? xa + (xb - xa) * fa / (fa - fb) : 0.5 * (xa + xb);
    } else {
        c.verdict = McKeanVerdict::Indeterminate;
    }
    return c;
}

void write_mckean(const McKeanClass& c, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw Fault(FaultKind::Io, "cannot write " + path);
    os << "verdict " << to_string(c.verdict) << "\n";
    os << "crossing " << (c.crossing ? csv::num(*c.crossing) : std::string("none")) << "\n";
}

} // namespace chpss
