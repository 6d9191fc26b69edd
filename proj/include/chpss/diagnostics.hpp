#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "chpss/geometry.hpp"
#include "chpss/solver.hpp"

namespace chpss {

struct ConservedChannels {
    double H0; // int u
    double H1; // 1/2 int u^2 + ux^2
    double H2; // 1/2 int u^3 + u ux^2
};

ConservedChannels conserved_channels(const SolutionFrame& frame);

struct DiagnosticsRecord {
    double t;
    double H0, H1, H2;
    double y, xi;
    double sup_g22;
    double sup_g22_at;
    double sup_abs_f32; // sup |ux|, the dt coefficient of w2 up to sign
    double tail_max;
    double E_plus, E_minus;
};

std::vector<DiagnosticsRecord> diagnostics_series(const Trajectory& traj, double lambda,
                                                  const TailAmplitudes* tails = nullptr);
void write_diagnostics_csv(const std::vector<DiagnosticsRecord>& rows, const std::string& path);

struct CriterionResult {
    bool met = false;
    double witness = 0.0;   // position of inf u0'
    double min_slope = 0.0; // inf u0'
    double h1_norm = 0.0;   // ||u0||_{H^1}
    double margin = 0.0;    // inf u0' + ||u0||_1 / sqrt(2); negative when met
};

/// Wave-breaking sufficient condition inf u0' < -||u0||_1 / sqrt(2). The
/// minimum is refined off-lattice.
CriterionResult breaking_criterion(const Field& u0);

/// -(2 / ||u0||_1) arctan(||u0||_1 / inf u0'); +infinity when inf u0' >= 0.
/// Throws Fault(InvalidArgument) for u0 = 0.
double lifespan_lower_bound(const Field& u0);

struct BlowupReport {
    CriterionResult criterion;
    double T_lower = 0.0;
    std::optional<double> t_numeric;
    std::optional<double> epsilon_hat;
    /// -4 / (epsilon_hat y(0)) when both are available and y(0) < 0
    std::optional<double> riccati_upper;
    std::size_t fit_points = 0;
    std::size_t riccati_violations = 0;
    std::size_t monotone_violations = 0;
    bool trivial = false;
};

/// Tracks y(t) = inf ux over every accepted step of the run.
BlowupReport breaking_monitor(const Trajectory& traj);
void write_blowup_report(const BlowupReport& rep, const std::string& path);

struct MetricBlowupFrame {
    double t;
    double sup_g22;
    double sup_g22_at;
    double xi; // off-lattice minimizer of ux
    double g11_at_xi, g12_at_xi, g22_at_xi;
    double bound_max_excess; // max over x of sqrt(g22) - upper bound (<= 0 when the sandwich holds)
    double int_sup_ux;       // int_0^t ||ux||_inf
    double int_abs_y;        // int_0^t |inf ux|
    std::size_t violations;
    std::size_t literal_violations;
};

struct MetricBlowupReport {
    std::vector<MetricBlowupFrame> frames;
    double sup_g22 = 0.0;
    std::size_t violations = 0;         // sandwich failures beyond tolerance
    std::size_t literal_violations = 0; // bound without lower-order terms
    bool anomaly = false;
    /// g11 and g12 at x = xi(t) stay within 10 (|g(xi(0))| + 1)
    bool g11_g12_bounded = true;
    double g11_ratio = 0.0;
    double g12_ratio = 0.0;
};

/// Per frame: sup_x g22 and the pointwise sandwich
///   |ux| <= sqrt(g22) <= |ux| + sqrt(2 H1(0)) (||m0|| e^{2 int ||ux||} + |b|) + d
/// with b = (lambda - 1/lambda)/2, d = (1 + lambda^2)/2.
MetricBlowupReport metric_blowup_monitor(const Trajectory& traj, double lambda, double tolerance = 1e-6);

enum class McKeanVerdict { NonnegGlobal, NonposGlobal, BreakingPattern, Indeterminate };
const char* to_string(McKeanVerdict v);

struct McKeanClass {
    McKeanVerdict verdict = McKeanVerdict::Indeterminate;
    std::optional<double> crossing;
};

McKeanClass mckean_classify(const Field& m0);
void write_mckean(const McKeanClass& c, const std::string& path);

} // namespace chpss
