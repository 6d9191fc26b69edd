#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "chpss/grid.hpp"
#include "chpss/helmholtz.hpp"

namespace chpss {

/// Full state at one time. m, ux and uxx are always recomputed from u.
struct SolutionFrame {
    double t = 0.0;
    Field u;
    Field m;
    Field ux;
    Field uxx;
    std::size_t step_index = 0;
    double dt_last = 0.0;

    static SolutionFrame from_velocity(Field u, double t = 0.0, std::size_t step_index = 0, double dt_last = 0.0);
    const Grid& grid() const noexcept { return u.grid(); }
};

/// High-wavenumber control applied to u after every accepted step.
enum class SpectralFilter {
    None,
    HouLi,     // exp(-36 (k/k_max)^36); leaves the resolved band untouched
    TwoThirds, // zero every mode above 2/3 of k_max
};

const char* to_string(SpectralFilter f);
SpectralFilter spectral_filter_from_string(const std::string& text);

/// Applies the filter in place; no-op for None and on decay-truncated grids.
void apply_filter(Field& u, SpectralFilter filter);

struct RunConfig {
    Grid grid;
    double lambda = 1.0;
    double t_end = 1.0;
    double cfl = 0.3;
    double blowup_threshold = 1e4;
    std::size_t output_stride = 1;
    /// Extra frames are stored whenever |inf ux| has grown by this factor since
    /// the last stored frame; 0 disables.
    double growth_refine = 1.25;
    KernelMethod kernel = KernelMethod::SpectralMultiplier;
    SpectralFilter filter = SpectralFilter::HouLi;
    bool allow_trivial = false;
    std::size_t max_steps = 10'000'000;

    explicit RunConfig(Grid g) : grid(std::move(g)) {}
    /// Throws Fault(InvalidArgument) on a malformed config.
    void validate() const;
};

enum class Termination { ReachedEnd, BlowupDetected, TailFault, NanFault };

const char* to_string(Termination t);

/// Scalar record of every accepted step, including the ones not stored as frames.
struct StepSample {
    double t;
    double y;        // inf ux, refined off-lattice
    double xi;       // its position
    double sup_u;    // lattice max |u|
    double sup_ux;   // lattice max |ux|
};

struct Trajectory {
    std::vector<SolutionFrame> frames;
    std::vector<StepSample> history;
    Termination termination = Termination::ReachedEnd;
    std::optional<double> t_numeric;
    std::string message;
    double lambda = 1.0;

    const Grid& grid() const { return frames.front().grid(); }
    bool trivial() const;
};

/// Largest max(|u|, |ux|) over the outer 10% of the lattice on either side.
double tail_magnitude(const Field& u, const Field& ux);
/// Tail monitor: tail_magnitude <= 1e-8 * max|u|.
bool tail_compliant(const Field& u, const Field& ux);

/// -u ux - d/dx Lambda^{-2}(u^2 + ux^2/2). Throws Fault(Tail) when u is not
/// tail-compliant.
Field rhs(const Field& u, KernelMethod kernel = KernelMethod::SpectralMultiplier);

/// One classical RK4 step. Throws Fault(NonFinite) naming the step index.
SolutionFrame step_rk4(const SolutionFrame& frame, double dt, const RunConfig& cfg);

/// Step size before the final-step adjustment.
double cfl_step(const SolutionFrame& frame, const RunConfig& cfg);

/// Evolves u0 to cfg.t_end or until |inf ux| exceeds cfg.blowup_threshold.
/// Tail and NaN faults end the run early and are reported through the
/// termination field; the offending state is never stored.
Trajectory run(const Field& u0, const RunConfig& cfg);

} // namespace chpss
