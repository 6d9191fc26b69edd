#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chpss/solver.hpp"

namespace chpss {

enum class DatumKind { GaussianU, GaussianM, BumpCompact, Zero };

/// gaussian_u(a, n): u0 = a e^{-n x^2}
/// gaussian_m(a, n): m0 = a e^{-n x^2}, u0 recovered through the kernel
/// bump_compact(a, w): u0 = a exp(1 - 1/(1 - (x/w)^2)) on |x| < w, else 0
struct DatumSpec {
    DatumKind kind = DatumKind::Zero;
    double a = 1.0;
    double n = 1.0;
    double w = 1.0;
    std::string text;
};

DatumSpec parse_datum(const std::string& text);
Field make_datum(const DatumSpec& spec, const Grid& grid, KernelMethod kernel);

struct Scenario {
    std::string name;
    DatumSpec datum;
    RunConfig run;
    std::vector<std::string> diagnostics;
    std::string output_dir;
    double curvature_t_min = 0.0;
    double curvature_delta = 0.1;
    double region_delta = 1e-8;
    std::size_t geometry_x_stride = 1;
    std::size_t seeds = 41;
    double seed_span = 3.0;
    bool write_frames = true;
    /// Every key with its effective value, for the manifest and config echo.
    std::map<std::string, std::string> echo;

    Scenario() : run(Grid(30.0, 2048)) {}
    bool wants(const std::string& diag) const;
};

/// Flat `key = value` lines, `#` starts a comment. Throws Fault(Config) with
/// line numbers; unknown keys are collected and reported together.
Scenario parse_config(const std::string& text);
Scenario load_config(const std::string& path);

/// Process exit statuses.
enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitTail = 3, kExitNan = 4, kExitAnomaly = 5 };

struct RunManifest {
    std::string name;
    std::string termination;
    std::optional<double> t_numeric;
    double T_lower = 0.0;
    std::string mckean;
    bool criterion_met = false;
    std::vector<std::string> anomalies;
    std::vector<std::string> files;
    double wall_seconds = 0.0;
    int exit_code = kExitOk;
};

/// Runs the scenario and writes every requested output into
/// scenario.output_dir; manifest.json is written last.
RunManifest execute(const Scenario& scenario);

/// Recomputes geometry or diagnostics outputs from a finished run directory.
int regenerate_geometry(const std::string& run_dir);
int regenerate_diagnostics(const std::string& run_dir);

/// Comparison table over manifests. Each argument is a run directory or a
/// manifest.json path. Returns the text table; writes CSV when csv_path is set.
std::string report(const std::vector<std::string>& runs, const std::string& csv_path = "");

/// Expands `{key}` placeholders of a template for each listed value and
/// executes the scenarios with up to `jobs` concurrent workers. Returns the
/// run directories in parameter order.
std::vector<std::string> sweep(const std::string& template_text, const std::string& key,
                               const std::vector<std::string>& values, unsigned jobs, std::vector<int>* codes = nullptr);

const char* software_version();

} // namespace chpss
