#include "chpss/solver.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <sstream>

#include "chpss/calculus.hpp"
#include "chpss/fault.hpp"

namespace chpss {

SolutionFrame SolutionFrame::from_velocity(Field u, double t, std::size_t step_index, double dt_last) {
    Field ux = derivative(u, 1);
    Field uxx = derivative(u, 2);
    Field m = u - uxx;
    return SolutionFrame{t, std::move(u), std::move(m), std::move(ux), std::move(uxx), step_index, dt_last};
}

void RunConfig::validate() const {
    if (!(lambda != 0.0) || !std::isfinite(lambda)) throw Fault(FaultKind::InvalidArgument, "lambda must be nonzero");
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw Fault(FaultKind::InvalidArgument, "t_end must be positive");
    if (!(cfl > 0.0 && cfl <= 1.0)) throw Fault(FaultKind::InvalidArgument, "cfl must lie in (0, 1]");
    if (!(blowup_threshold > 0.0)) throw Fault(FaultKind::InvalidArgument, "blowup_threshold must be positive");
    if (output_stride == 0) throw Fault(FaultKind::InvalidArgument, "output_stride must be at least 1");
    if (kernel == KernelMethod::SpectralMultiplier && !grid.periodic()) {
        throw Fault(FaultKind::InvalidArgument, "spectral kernel requires a periodic grid");
    }
}

const char* to_string(Termination t) {
    switch (t) {
    case Termination::ReachedEnd: return "reached_t_end";
    case Termination::BlowupDetected: return "blowup_detected";
    case Termination::TailFault: return "tail_fault";
    case Termination::NanFault: return "nan_fault";
    }
    return "unknown";
}

const char* to_string(SpectralFilter f) {
    switch (f) {
    case SpectralFilter::None: return "none";
    case SpectralFilter::HouLi: return "hou_li";
    case SpectralFilter::TwoThirds: return "two_thirds";
    }
    return "unknown";
}

SpectralFilter spectral_filter_from_string(const std::string& text) {
    if (text == "none") return SpectralFilter::None;
    if (text == "hou_li" || text == "hou-li") return SpectralFilter::HouLi;
    if (text == "two_thirds" || text == "two-thirds") return SpectralFilter::TwoThirds;
    throw Fault(FaultKind::InvalidArgument, "unknown spectral filter '" + text + "'");
}

namespace {

std::vector<double> filter_multipliers(std::size_t n, SpectralFilter filter) {
    std::vector<double> w(n / 2 + 1, 1.0);
    const double nyq = static_cast<double>(n / 2);
    for (std::size_t k = 0; k < w.size(); ++k) {
        const double r = static_cast<double>(k) / nyq;
        if (filter == SpectralFilter::HouLi) {
            w[k] = std::exp(-36.0 * std::pow(r, 36));
        } else if (r > 2.0 / 3.0) {
            w[k] = 0.0;
        }
    }
    return w;
}

} // namespace

void apply_filter(Field& u, SpectralFilter filter) {
    const Grid& g = u.grid();
    if (filter == SpectralFilter::None || !g.periodic()) return;
    thread_local std::map<std::pair<std::size_t, SpectralFilter>, std::vector<double>> cache;
    auto key = std::make_pair(g.size(), filter);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, filter_multipliers(g.size(), filter)).first;
    const std::vector<double>& w = it->second;
    std::vector<std::complex<double>> spec(g.spectrum_size());
    g.fft().forward(u.values(), spec);
    for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= w[k];
    g.fft().backward(spec, u.values());
}

bool Trajectory::trivial() const {
    return std::all_of(frames.begin(), frames.end(), [](const SolutionFrame& f) { return f.u.is_zero(); });
}

double tail_magnitude(const Field& u, const Field& ux) {
    const std::size_t n = u.size();
    const std::size_t band = std::max<std::size_t>(1, n / 10);
    double worst = 0.0;
    for (std::size_t j = 0; j < band; ++j) {
        for (std::size_t k : {j, n - 1 - j}) {
            worst = std::max({worst, std::abs(u[k]), std::abs(ux[k])});
        }
    }
    return worst;
}

bool tail_compliant(const Field& u, const Field& ux) { return tail_magnitude(u, ux) <= 1e-8 * u.max_abs(); }

namespace {

Field rhs_with_slope(const Field& u, const Field& ux, KernelMethod kernel) {
    if (!tail_compliant(u, ux)) {
        std::ostringstream os;
        os << "tail magnitude " << tail_magnitude(u, ux) << " exceeds 1e-8 * max|u| = " << 1e-8 * u.max_abs();
        throw Fault(FaultKind::Tail, os.str());
    }
    Field source(u.grid());
    Field out(u.grid());
    for (std::size_t j = 0; j < u.size(); ++j) source[j] = u[j] * u[j] + 0.5 * ux[j] * ux[j];
    Field nonlocal = dx_helmholtz_inverse(source, kernel);
    for (std::size_t j = 0; j < u.size(); ++j) out[j] = -u[j] * ux[j] - nonlocal[j];
    return out;
}

} // namespace

Field rhs(const Field& u, KernelMethod kernel) {
    require_finite(u, "rhs");
    return rhs_with_slope(u, derivative(u, 1), kernel);
}

SolutionFrame step_rk4(const SolutionFrame& frame, double dt, const RunConfig& cfg) {
    if (!(dt > 0.0)) throw Fault(FaultKind::InvalidArgument, "step_rk4: dt must be positive");
    const std::size_t step = frame.step_index + 1;
    try {
        const Field& u = frame.u;
        const Field k1 = rhs_with_slope(u, frame.ux, cfg.kernel);
        const Field k2 = rhs(u + (0.5 * dt) * k1, cfg.kernel);
        const Field k3 = rhs(u + (0.5 * dt) * k2, cfg.kernel);
        const Field k4 = rhs(u + dt * k3, cfg.kernel);
        Field next(u.grid());
        for (std::size_t j = 0; j < u.size(); ++j) {
            next[j] = u[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        require_finite(next, "step_rk4");
        apply_filter(next, cfg.filter);
        return SolutionFrame::from_velocity(std::move(next), frame.t + dt, step, dt);
    } catch (const Fault& e) {
        if (e.kind() == FaultKind::NonFinite) {
            throw Fault(FaultKind::NonFinite, "step " + std::to_string(step) + ": " + e.what());
        }
        throw;
    }
}

double cfl_step(const SolutionFrame& frame, const RunConfig& cfg) {
    double dt = cfg.cfl * frame.grid().dx() / std::max(1.0, frame.u.max_abs());
    const double y = std::abs(inf_with_argmin(frame.ux).value);
    if (y > 10.0) dt *= 10.0 / y;
    return dt;
}

namespace {

// Off-lattice minimum: the lattice value saw-tooths as the minimizer crosses
// grid cells, which would read as spurious growth reversals of y.
StepSample sample_of(const SolutionFrame& f) {
    const Extremum e = refine_minimum(f.ux);
    return StepSample{f.t, e.value, e.position, f.u.max_abs(), f.ux.max_abs()};
}

} // namespace

Trajectory run(const Field& u0, const RunConfig& cfg) {
    cfg.validate();
    if (!(u0.grid() == cfg.grid)) throw Fault(FaultKind::InvalidArgument, "run: datum grid differs from config grid");
    require_finite(u0, "run");
    if (u0.is_zero() && !cfg.allow_trivial) {
        throw Fault(FaultKind::InvalidArgument, "non-trivial initial datum required");
    }

    Trajectory traj;
    traj.lambda = cfg.lambda;
    SolutionFrame current = SolutionFrame::from_velocity(u0);
    if (!tail_compliant(current.u, current.ux)) {
        throw Fault(FaultKind::Tail, "initial datum violates the tail monitor; enlarge the domain");
    }
    traj.frames.push_back(current);
    traj.history.push_back(sample_of(current));
    double last_stored_y = std::abs(traj.history.back().y);

    while (true) {
        const StepSample& s = traj.history.back();
        if (std::abs(s.y) > cfg.blowup_threshold && s.y < 0.0) {
            traj.termination = Termination::BlowupDetected;
            traj.t_numeric = current.t;
            traj.message = "inf ux below -" + std::to_string(cfg.blowup_threshold);
            break;
        }
        if (current.t >= cfg.t_end) {
            traj.termination = Termination::ReachedEnd;
            break;
        }
        if (current.step_index >= cfg.max_steps) {
            throw Fault(FaultKind::Anomaly, "step budget exhausted before t_end");
        }
        const double remaining = cfg.t_end - current.t;
        const double dt_cfl = cfl_step(current, cfg);
        const double steps_left = std::ceil(remaining / dt_cfl * (1.0 - 1e-12));
        const double dt = remaining / std::max(1.0, steps_left);

        std::optional<SolutionFrame> stepped;
        try {
            stepped = step_rk4(current, dt, cfg);
        } catch (const Fault& e) {
            if (e.kind() == FaultKind::Tail) {
                traj.termination = Termination::TailFault;
            } else if (e.kind() == FaultKind::NonFinite) {
                traj.termination = Termination::NanFault;
            } else {
                throw;
            }
            traj.message = e.what();
            break;
        }
        SolutionFrame& next = *stepped;
        if (steps_left <= 1.0) next.t = cfg.t_end;
        if (!tail_compliant(next.u, next.ux)) {
            traj.termination = Termination::TailFault;
            traj.message = "tail magnitude " + std::to_string(tail_magnitude(next.u, next.ux)) + " at t=" +
                           std::to_string(next.t);
            break;
        }
        current = std::move(next);
        traj.history.push_back(sample_of(current));

        const double y_abs = std::abs(traj.history.back().y);
        const bool final_state = current.t >= cfg.t_end || y_abs > cfg.blowup_threshold;
        const bool grown = cfg.growth_refine > 1.0 && y_abs > cfg.growth_refine * std::max(last_stored_y, 1.0);
        if (final_state || grown || current.step_index % cfg.output_stride == 0) {
            traj.frames.push_back(current);
            last_stored_y = y_abs;
        }
    }
    if (traj.frames.back().step_index != current.step_index) traj.frames.push_back(current);
    return traj;
}

} // namespace chpss
