#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "chpss/solver.hpp"

namespace chpss {

/// Coefficients of w_i = f_i1 dx + f_i2 dt at one point, fixed lambda.
struct CoframeSample {
    double f11, f12, f21, f22, f31, f32;
    double lambda;
};

/// g = w1^2 + w2^2 = g11 dx^2 + 2 g12 dx dt + g22 dt^2.
struct MetricSample {
    double g11, g12, g22;
    double det() const noexcept { return g11 * g22 - g12 * g12; }
};

/// Throws Fault(InvalidArgument) for lambda == 0.
CoframeSample coframe(double u, double ux, double m, double lambda);
/// dx^dt coefficient of w1 ^ w2.
double wedge12(double ux, double m, double lambda);
MetricSample metric(const CoframeSample& cf);

/// Frame-by-frame metric channels on the (x, t) lattice. Row k holds frame k.
struct GeometryLattice {
    double lambda = 1.0;
    Grid grid;
    std::vector<double> t;
    std::vector<std::vector<double>> g11, g12, g22, wedge, ux;

    explicit GeometryLattice(Grid g) : grid(std::move(g)) {}
    std::size_t frames() const noexcept { return t.size(); }
};

/// Metric channels for frames [first, last) of a trajectory; last = 0 means all.
GeometryLattice metric_lattice(const Trajectory& traj, double lambda, std::size_t first = 0, std::size_t last = 0);

struct CurvatureField {
    std::vector<std::vector<double>> K;         // NaN where masked
    std::vector<std::vector<std::uint8_t>> ok;  // 1 where K was evaluated
    std::size_t evaluated = 0;
    std::size_t masked = 0;

    /// Share of evaluated points with |K - target| <= tol.
    double fraction_within(double target, double tol) const;
    /// Median of |K - target| over evaluated points.
    double median_deviation(double target) const;
};

struct CurvatureOptions {
    /// Points with |wedge| < delta * (frame max |wedge|) are masked.
    double delta = 0.1;
};

/// Brioschi curvature of the lattice metric in coordinates (x, t). x
/// derivatives use the grid calculus; t derivatives use 7-point Fornberg
/// stencils on the frame times, so frames without three neighbours on either
/// side are masked.
CurvatureField gaussian_curvature(const GeometryLattice& lat, const CurvatureOptions& opt = {});

/// Structure-equation residuals on the frame lattice.
struct StructureResiduals {
    std::vector<double> t;
    /// r1 = d_x f12 - d_t f11 - f31 f22 ; analytically m_t + 2 ux m + u mx
    /// r2 = d_x f22 - (f11 f32 - f12 f31) ; identically zero
    /// r3 = d_x f32 - d_t f31 - f11 f22 ; equals -r1
    std::vector<std::vector<double>> r1, r2, r3;
    double max_r1 = 0.0;
    double max_r2 = 0.0;
    double max_r1_plus_r3 = 0.0;
};

/// x derivatives by the grid calculus, t derivatives by 3-point stencils on
/// the (possibly nonuniform) frame times. Needs at least 3 frames.
StructureResiduals structure_residuals(const Trajectory& traj, double lambda);

struct GenericRegion {
    std::size_t j_lo, j_hi; // inclusive lattice columns
    std::size_t k_lo, k_hi; // inclusive frame rows
    double x_lo, x_hi, t_lo, t_hi;
    int ux_sign;
};

struct RegionSet {
    std::vector<GenericRegion> regions;
    std::size_t frames = 0;
    std::size_t frames_covered = 0;
    /// Nontrivial run with a frame that no region meets.
    bool anomaly = false;
};

struct RegionOptions {
    double delta = 1e-8;         // relative to the frame max of |wedge|
    std::size_t min_width = 3;   // lattice points
};

/// Disjoint lattice rectangles where |wedge| > delta * frame max and sign(ux)
/// is constant. Rectangles grow forward in time while their column range
/// keeps at least half its initial width.
RegionSet generic_regions(const GeometryLattice& lat, const RegionOptions& opt = {}, bool trivial_allowed = false);

enum class TailSide { Left, Right };

/// Metric of the tail profile u = E e^{x} (left) or E e^{-x} (right), m = 0.
MetricSample tail_metric(TailSide side, double x, double E, double lambda);
/// Substitution value at u = m = 0; singular.
MetricSample tail_baseline(double lambda);
/// Alternative closed-form baseline entries, reported side by side with
/// tail_baseline; they do not follow from the metric.
MetricSample tail_baseline_literal(double lambda);

struct TailFit {
    double E = 0.0;
    double slope = 0.0;
    std::size_t points = 0;
    bool below_floor = true;
};

struct TailAmplitudes {
    std::vector<double> t;
    std::vector<TailFit> plus;  // right tail, u ~ E+ e^{-x}
    std::vector<TailFit> minus; // left tail, u ~ E- e^{x}
};

struct TailFitOptions {
    double support_floor = 1e-9; // |m| above this times max|m| marks the support
    double margin = 1.0;         // gap between support and fit zone
    double lo = 1e-12;
    double hi = 1e-4;
    std::size_t min_points = 8;
};

TailFit fit_tail(const SolutionFrame& frame, TailSide side, const TailFitOptions& opt = {});
TailAmplitudes extract_tail_amplitudes(const Trajectory& traj, const TailFitOptions& opt = {});

/// CSV `x,t,g11,g12,g22,wedge,K,mask`; every `x_stride`-th column.
void write_geometry_csv(const GeometryLattice& lat, const CurvatureField* K, const std::string& path,
                        std::size_t x_stride = 1);
void write_regions_text(const RegionSet& regions, const std::string& path);

} // namespace chpss
