#include "chpss/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include "chpss/calculus.hpp"
#include "chpss/characteristics.hpp"
#include "chpss/diagnostics.hpp"
#include "chpss/fault.hpp"
#include "chpss/geometry.hpp"
#include "csv_util.hpp"
#include "json.hpp"

#ifndef CHPSS_VERSION
#define CHPSS_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace chpss {

const char* software_version() { return CHPSS_VERSION; }

namespace {

const std::vector<std::string> kAllDiagnostics = {"conserved", "breaking", "metric",          "geometry", "regions",
                                                  "tails",     "mckean",   "characteristics", "residuals"};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double parse_double(const std::string& v, const std::string& what) {
    char* end = nullptr;
    const double d = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(d)) {
        throw Fault(FaultKind::Config, what + ": expected a number, got '" + v + "'");
    }
    return d;
}

std::size_t parse_count(const std::string& v, const std::string& what) {
    const double d = parse_double(v, what);
    if (d < 0 || d != std::floor(d) || d > 1e15) {
        throw Fault(FaultKind::Config, what + ": expected a nonnegative integer, got '" + v + "'");
    }
    return static_cast<std::size_t>(d);
}

bool parse_bool(const std::string& v, const std::string& what) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw Fault(FaultKind::Config, what + ": expected true or false, got '" + v + "'");
}

// Shortest decimal form that parses back to the same double.
std::string fmt(double v) {
    char buf[32];
    for (int prec = 6; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

} // namespace

DatumSpec parse_datum(const std::string& text) {
    const auto parts = split(text, ' ');
    if (parts.empty()) throw Fault(FaultKind::Config, "empty datum");
    DatumSpec d;
    d.text = trim(text);
    std::set<std::string> allowed;
    if (parts[0] == "gaussian_u") {
        d.kind = DatumKind::GaussianU;
        allowed = {"a", "n"};
    } else if (parts[0] == "gaussian_m") {
        d.kind = DatumKind::GaussianM;
        allowed = {"a", "n"};
    } else if (parts[0] == "bump_compact") {
        d.kind = DatumKind::BumpCompact;
        allowed = {"a", "w"};
    } else if (parts[0] == "zero") {
        d.kind = DatumKind::Zero;
    } else {
        throw Fault(FaultKind::Config, "unknown datum family '" + parts[0] + "'");
    }
    std::set<std::string> seen;
    for (std::size_t i = 1; i < parts.size(); ++i) {
        const auto eq = parts[i].find('=');
        if (eq == std::string::npos) throw Fault(FaultKind::Config, "datum parameter '" + parts[i] + "' lacks '='");
        const std::string k = parts[i].substr(0, eq);
        if (!allowed.count(k)) throw Fault(FaultKind::Config, "datum " + parts[0] + " has no parameter '" + k + "'");
        const double v = parse_double(parts[i].substr(eq + 1), "datum parameter " + k);
        if (k == "a") d.a = v;
        if (k == "n") d.n = v;
        if (k == "w") d.w = v;
        seen.insert(k);
    }
    for (const auto& k : allowed) {
        if (!seen.count(k)) throw Fault(FaultKind::Config, "datum " + parts[0] + " requires parameter '" + k + "'");
    }
    if ((d.kind == DatumKind::GaussianU || d.kind == DatumKind::GaussianM) && !(d.n > 0)) {
        throw Fault(FaultKind::Config, "datum parameter n must be positive");
    }
    if (d.kind == DatumKind::BumpCompact && !(d.w > 0)) throw Fault(FaultKind::Config, "datum parameter w must be positive");
    return d;
}

Field make_datum(const DatumSpec& spec, const Grid& grid, KernelMethod kernel) {
    switch (spec.kind) {
    case DatumKind::GaussianU:
        return Field::sample(grid, [&](double x) { return spec.a * std::exp(-spec.n * x * x); });
    case DatumKind::GaussianM:
        return velocity_from_momentum(Field::sample(grid, [&](double x) { return spec.a * std::exp(-spec.n * x * x); }),
                                      kernel);
    case DatumKind::BumpCompact:
        return Field::sample(grid, [&](double x) {
            const double r = x / spec.w;
            return std::abs(r) < 1.0 ? spec.a * std::exp(1.0 - 1.0 / (1.0 - r * r)) : 0.0;
        });
    case DatumKind::Zero:
        return Field(grid);
    }
    return Field(grid);
}

bool Scenario::wants(const std::string& diag) const {
    return std::find(diagnostics.begin(), diagnostics.end(), diag) != diagnostics.end();
}

Scenario parse_config(const std::string& text) {
    static const std::set<std::string> known = {
        "name",          "datum",          "t_end",           "L",
        "N",             "lambda",         "cfl",             "blowup_threshold",
        "output_stride", "kernel",         "boundary",        "filter",
        "allow_trivial", "diagnostics",    "output_dir",      "curvature_t_min",
        "curvature_delta", "region_delta", "geometry_x_stride", "seeds",
        "seed_span",     "write_frames"};
    std::map<std::string, std::pair<std::string, int>> kv;
    std::vector<std::string> unknown;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Fault(FaultKind::Config, "line " + std::to_string(line_no) + ": expected key=value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw Fault(FaultKind::Config, "line " + std::to_string(line_no) + ": empty key");
        if (!known.count(key)) {
            unknown.push_back("'" + key + "' (line " + std::to_string(line_no) + ")");
            continue;
        }
        if (kv.count(key)) {
            throw Fault(FaultKind::Config, "line " + std::to_string(line_no) + ": duplicate key '" + key +
                                               "' (first set on line " + std::to_string(kv[key].second) + ")");
        }
        kv[key] = {value, line_no};
    }
    if (!unknown.empty()) {
        std::string msg = "unknown keys:";
        for (const auto& u : unknown) msg += " " + u;
        throw Fault(FaultKind::Config, msg);
    }
    std::vector<std::string> missing;
    for (const char* req : {"name", "datum", "t_end"}) {
        if (!kv.count(req)) missing.emplace_back(req);
    }
    if (!missing.empty()) {
        std::string msg = "missing required keys:";
        for (const auto& m : missing) msg += " " + m;
        throw Fault(FaultKind::Config, msg);
    }

    auto get = [&](const std::string& key, const std::string& def) {
        auto it = kv.find(key);
        return it == kv.end() ? def : it->second.first;
    };
    auto at = [&](const std::string& key) {
        auto it = kv.find(key);
        return it == kv.end() ? std::string("default ") + key : "line " + std::to_string(it->second.second);
    };
    // Rethrows any fault raised while interpreting `key` with its line number.
    auto with_line = [&](const std::string& key, auto&& fn) {
        try {
            return fn(get(key, ""));
        } catch (const Fault& e) {
            throw Fault(FaultKind::Config, at(key) + ": " + e.what());
        }
    };

    Scenario sc;
    sc.name = get("name", "");
    if (sc.name.empty() || sc.name.find_first_of("/\\") != std::string::npos) {
        throw Fault(FaultKind::Config, at("name") + ": name must be a nonempty file-name-safe string");
    }
    sc.datum = with_line("datum", [](const std::string& v) { return parse_datum(v); });

    auto num = [&](const std::string& key, const std::string& def) {
        return with_line(key, [&](const std::string&) { return parse_double(get(key, def), key); });
    };
    auto count = [&](const std::string& key, const std::string& def) {
        return with_line(key, [&](const std::string&) { return parse_count(get(key, def), key); });
    };
    auto flag = [&](const std::string& key, const std::string& def) {
        return with_line(key, [&](const std::string&) { return parse_bool(get(key, def), key); });
    };

    const double L = num("L", "30");
    const std::size_t N = count("N", "2048");
    const BoundaryMode mode = with_line("boundary", [&](const std::string&) {
        return boundary_mode_from_string(get("boundary", "periodic"));
    });
    Grid grid = with_line("N", [&](const std::string&) { return Grid(L, N, mode); });
    RunConfig cfg(grid);
    cfg.lambda = num("lambda", "1");
    if (cfg.lambda == 0.0) throw Fault(FaultKind::Config, at("lambda") + ": lambda must be nonzero");
    cfg.t_end = num("t_end", "");
    if (!(cfg.t_end > 0)) throw Fault(FaultKind::Config, at("t_end") + ": t_end must be positive");
    cfg.cfl = num("cfl", "0.3");
    cfg.blowup_threshold = num("blowup_threshold", "1e4");
    cfg.output_stride = count("output_stride", "1");
    cfg.kernel = with_line("kernel", [&](const std::string&) {
        return kernel_method_from_string(get("kernel", mode == BoundaryMode::Periodic ? "spectral" : "two_pass"));
    });
    cfg.filter = with_line("filter", [&](const std::string&) {
        return spectral_filter_from_string(get("filter", "hou_li"));
    });
    cfg.allow_trivial = flag("allow_trivial", "false");
    try {
        cfg.validate();
    } catch (const Fault& e) {
        throw Fault(FaultKind::Config, e.what());
    }
    sc.run = cfg;

    const std::string diag = get("diagnostics", "all");
    if (diag == "all") {
        sc.diagnostics = kAllDiagnostics;
    } else if (diag != "none") {
        for (const auto& d : split(diag, ',')) {
            if (std::find(kAllDiagnostics.begin(), kAllDiagnostics.end(), d) == kAllDiagnostics.end()) {
                throw Fault(FaultKind::Config, at("diagnostics") + ": unknown diagnostic '" + d + "'");
            }
            sc.diagnostics.push_back(d);
        }
    }
    sc.output_dir = get("output_dir", "runs/" + sc.name);
    sc.curvature_t_min = num("curvature_t_min", "0");
    sc.curvature_delta = num("curvature_delta", "0.1");
    sc.region_delta = num("region_delta", "1e-8");
    sc.geometry_x_stride = std::max<std::size_t>(1, count("geometry_x_stride", "1"));
    sc.seeds = count("seeds", "41");
    sc.seed_span = num("seed_span", "3");
    sc.write_frames = flag("write_frames", "true");

    std::string diag_echo;
    for (const auto& d : sc.diagnostics) diag_echo += (diag_echo.empty() ? "" : ",") + d;
    sc.echo = {{"name", sc.name},
               {"datum", sc.datum.text},
               {"t_end", fmt(cfg.t_end)},
               {"L", fmt(L)},
               {"N", std::to_string(N)},
               {"lambda", fmt(cfg.lambda)},
               {"cfl", fmt(cfg.cfl)},
               {"blowup_threshold", fmt(cfg.blowup_threshold)},
               {"output_stride", std::to_string(cfg.output_stride)},
               {"kernel", to_string(cfg.kernel)},
               {"boundary", mode == BoundaryMode::Periodic ? "periodic" : "decay-truncated"},
               {"filter", to_string(cfg.filter)},
               {"allow_trivial", cfg.allow_trivial ? "true" : "false"},
               {"diagnostics", diag_echo.empty() ? "none" : diag_echo},
               {"output_dir", sc.output_dir},
               {"curvature_t_min", fmt(sc.curvature_t_min)},
               {"curvature_delta", fmt(sc.curvature_delta)},
               {"region_delta", fmt(sc.region_delta)},
               {"geometry_x_stride", std::to_string(sc.geometry_x_stride)},
               {"seeds", std::to_string(sc.seeds)},
               {"seed_span", fmt(sc.seed_span)},
               {"write_frames", sc.write_frames ? "true" : "false"}};
    return sc;
}

Scenario load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Fault(FaultKind::Io, "cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

namespace {

/// Output bookkeeping for one run directory.
class RunDir {
public:
    explicit RunDir(std::string dir) : dir_(std::move(dir)) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw Fault(FaultKind::Io, "cannot create " + dir_ + ": " + ec.message());
    }
    std::string path(const std::string& name) {
        if (std::find(files_.begin(), files_.end(), name) == files_.end()) files_.push_back(name);
        return (fs::path(dir_) / name).string();
    }
    const std::vector<std::string>& files() const { return files_; }
    const std::string& dir() const { return dir_; }

private:
    std::string dir_;
    std::vector<std::string> files_;
};

std::string frame_name(std::size_t k) {
    std::ostringstream os;
    os << "frame_" << std::setw(5) << std::setfill('0') << k << ".csv";
    return os.str();
}

void write_frames(const Trajectory& traj, RunDir& dir) {
    std::ofstream index(dir.path("frames_index.csv"));
    index << "k,t,step_index,dt_last,file\n";
    for (std::size_t k = 0; k < traj.frames.size(); ++k) {
        const auto& f = traj.frames[k];
        const std::string name = frame_name(k);
        std::ofstream os(dir.path(name));
        if (!os) throw Fault(FaultKind::Io, "cannot write " + name);
        os << "x,u,m,ux\n";
        for (std::size_t j = 0; j < f.u.size(); ++j) {
            os << csv::num(f.grid().x(j)) << ',' << csv::num(f.u[j]) << ',' << csv::num(f.m[j]) << ','
               << csv::num(f.ux[j]) << '\n';
        }
        index << k << ',' << csv::num(f.t) << ',' << f.step_index << ',' << csv::num(f.dt_last) << ',' << name << '\n';
    }
}

void write_config_echo(const Scenario& sc, RunDir& dir) {
    std::ofstream os(dir.path("config.txt"));
    for (const auto& [k, v] : sc.echo) os << k << " = " << v << '\n';
}

json number_or_null(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json finite_or_text(double v) {
    if (std::isfinite(v)) return v;
    return v > 0 ? "inf" : "-inf";
}

/// Geometry outputs; returns the manifest section.
json geometry_outputs(const Scenario& sc, const Trajectory& traj, RunDir& dir, std::vector<std::string>& anomalies) {
    json out;
    const bool want_geo = sc.wants("geometry");
    const bool want_regions = sc.wants("regions");
    if (!want_geo && !want_regions) return out;
    if (traj.frames.size() < 2) return out;
    const double lambda = sc.run.lambda;

    if (want_geo) {
        std::size_t first = 0;
        while (first < traj.frames.size() && traj.frames[first].t < sc.curvature_t_min - 1e-12) ++first;
        first = first >= 3 ? first - 3 : 0;
        if (first + 1 < traj.frames.size()) {
            const GeometryLattice lat = metric_lattice(traj, lambda, first);
            CurvatureOptions opt;
            opt.delta = sc.curvature_delta;
            const CurvatureField K = gaussian_curvature(lat, opt);
            write_geometry_csv(lat, &K, dir.path("geometry.csv"), sc.geometry_x_stride);
            out["curvature"] = {{"lambda", lambda},
                                {"t_min", sc.curvature_t_min},
                                {"delta", sc.curvature_delta},
                                {"evaluated", K.evaluated},
                                {"masked", K.masked},
                                {"fraction_within_1e-3", K.fraction_within(-1.0, 1e-3)},
                                {"median_abs_K_plus_1", K.evaluated ? json(K.median_deviation(-1.0)) : json(nullptr)}};
        }
    }
    if (want_regions) {
        const GeometryLattice lat = metric_lattice(traj, lambda);
        RegionOptions opt;
        opt.delta = sc.region_delta;
        const RegionSet R = generic_regions(lat, opt, sc.run.allow_trivial && traj.trivial());
        write_regions_text(R, dir.path("regions.txt"));
        const bool anomaly = R.anomaly && !traj.trivial();
        out["regions"] = {{"count", R.regions.size()},
                          {"frames", R.frames},
                          {"frames_covered", R.frames_covered},
                          {"anomaly", anomaly}};
        if (anomaly) anomalies.push_back("generic regions miss a frame of a nontrivial run");
    }
    return out;
}

/// Diagnostics outputs; returns the manifest section.
json diagnostic_outputs(const Scenario& sc, const Trajectory& traj, RunDir& dir, std::vector<std::string>& anomalies,
                        RunManifest& man) {
    json out;
    const double lambda = sc.run.lambda;
    std::optional<TailAmplitudes> tails;
    if (sc.wants("tails")) {
        tails = extract_tail_amplitudes(traj);
        std::ofstream os(dir.path("tails.csv"));
        os << "t,E_plus,slope_plus,points_plus,below_floor_plus,E_minus,slope_minus,points_minus,below_floor_minus\n";
        for (std::size_t k = 0; k < tails->t.size(); ++k) {
            const auto& p = tails->plus[k];
            const auto& m = tails->minus[k];
            os << csv::num(tails->t[k]) << ',' << csv::num(p.E) << ',' << csv::num(p.slope) << ',' << p.points << ','
               << (p.below_floor ? 1 : 0) << ',' << csv::num(m.E) << ',' << csv::num(m.slope) << ',' << m.points
               << ',' << (m.below_floor ? 1 : 0) << '\n';
        }
        double worst = 0.0;
        std::size_t fitted = 0;
        for (std::size_t k = 0; k < tails->t.size(); ++k) {
            if (!tails->plus[k].below_floor) worst = std::max(worst, std::abs(tails->plus[k].slope + 1.0)), ++fitted;
            if (!tails->minus[k].below_floor) worst = std::max(worst, std::abs(tails->minus[k].slope - 1.0)), ++fitted;
        }
        out["tails"] = {{"fitted", fitted}, {"max_slope_error", worst}};
    }

    if (sc.wants("conserved")) {
        const auto rows = diagnostics_series(traj, lambda, tails ? &*tails : nullptr);
        write_diagnostics_csv(rows, dir.path("diagnostics.csv"));
        const auto& a = rows.front();
        const auto& b = rows.back();
        out["conservation"] = {{"H0_drift", b.H0 - a.H0},
                               {"H1_relative_drift", a.H1 != 0.0 ? json((b.H1 - a.H1) / a.H1) : json(0.0)},
                               {"H2_drift", b.H2 - a.H2}};
    }

    if (sc.wants("breaking") && !traj.trivial()) {
        const BlowupReport rep = breaking_monitor(traj);
        write_blowup_report(rep, dir.path("blowup.txt"));
        man.T_lower = rep.T_lower;
        man.criterion_met = rep.criterion.met;
        out["breaking"] = {{"criterion_met", rep.criterion.met},
                           {"criterion_margin", rep.criterion.margin},
                           {"witness", rep.criterion.witness},
                           {"T_lower", finite_or_text(rep.T_lower)},
                           {"epsilon_hat", number_or_null(rep.epsilon_hat)},
                           {"riccati_upper", number_or_null(rep.riccati_upper)},
                           {"riccati_violations", rep.riccati_violations},
                           {"monotone_violations", rep.monotone_violations}};
    }

    if (sc.wants("metric")) {
        const MetricBlowupReport rep = metric_blowup_monitor(traj, lambda);
        std::ofstream os(dir.path("metric_blowup.csv"));
        os << "t,sup_g22,sup_g22_at,xi,g11_at_xi,g12_at_xi,g22_at_xi,bound_max_excess,int_sup_ux,int_abs_y,violations\n";
        for (const auto& r : rep.frames) {
            os << csv::num(r.t) << ',' << csv::num(r.sup_g22) << ',' << csv::num(r.sup_g22_at) << ',' << csv::num(r.xi)
               << ',' << csv::num(r.g11_at_xi) << ',' << csv::num(r.g12_at_xi) << ',' << csv::num(r.g22_at_xi) << ','
               << csv::num(r.bound_max_excess) << ',' << csv::num(r.int_sup_ux) << ',' << csv::num(r.int_abs_y) << ','
               << r.violations << '\n';
        }
        out["metric"] = {{"sup_g22", rep.sup_g22},
                         {"sandwich_violations", rep.violations},
                         {"literal_bound_violations", rep.literal_violations},
                         {"g11_ratio", rep.g11_ratio},
                         {"g12_ratio", rep.g12_ratio},
                         {"g11_g12_bounded", rep.g11_g12_bounded}};
        if (rep.anomaly) anomalies.push_back("metric sandwich violated at " + std::to_string(rep.violations) + " points");
    }

    if (sc.wants("mckean")) {
        const McKeanClass c = mckean_classify(traj.frames.front().m);
        write_mckean(c, dir.path("mckean.txt"));
        man.mckean = to_string(c.verdict);
        out["mckean"] = {{"verdict", to_string(c.verdict)}, {"crossing", number_or_null(c.crossing)}};
    }

    if (sc.wants("characteristics") && sc.seeds >= 2 && !traj.trivial()) {
        std::vector<double> seeds(sc.seeds);
        for (std::size_t i = 0; i < sc.seeds; ++i) {
            seeds[i] = -sc.seed_span + 2.0 * sc.seed_span * static_cast<double>(i) / static_cast<double>(sc.seeds - 1);
        }
        try {
            const CharacteristicFan fan = evolve_characteristics(traj, seeds);
            const TransportReport tr = transport_identity_residual(traj, fan);
            std::ofstream os(dir.path("characteristics.csv"));
            os << "seed,t,q,qx,transport_residual\n";
            for (std::size_t i = 0; i < seeds.size(); ++i) {
                for (std::size_t k = 0; k < fan.times.size(); ++k) {
                    os << csv::num(seeds[i]) << ',' << csv::num(fan.times[k]) << ',' << csv::num(fan.paths[k][i]) << ','
                       << csv::num(fan.qx[k][i]) << ',' << csv::num(tr.residual[i][k]) << '\n';
                }
            }
            out["characteristics"] = {{"min_gap", fan.min_gap()},
                                      {"monotone", fan.monotone()},
                                      {"transport_max_relative", tr.max_relative},
                                      {"sign_preserved", tr.sign_preserved}};
            if (!fan.monotone()) anomalies.push_back("characteristics lost monotonicity");
            if (!tr.sign_preserved) anomalies.push_back("momentum sign changed along a characteristic");
        } catch (const Fault& e) {
            out["characteristics"] = {{"error", e.what()}};
            anomalies.push_back(std::string("characteristics: ") + e.what());
        }
    }

    if (sc.wants("residuals") && traj.frames.size() >= 3) {
        const StructureResiduals r = structure_residuals(traj, lambda);
        std::ofstream os(dir.path("residuals.txt"));
        os << "max_abs_r1 " << csv::num(r.max_r1) << "\nmax_abs_r2 " << csv::num(r.max_r2) << "\nmax_abs_r1_plus_r3 "
           << csv::num(r.max_r1_plus_r3) << "\n";
        out["residuals"] = {{"max_abs_r1", r.max_r1}, {"max_abs_r2", r.max_r2}, {"max_abs_r1_plus_r3", r.max_r1_plus_r3}};
    }
    return out;
}

int exit_code_for(Termination t, bool anomalous) {
    if (t == Termination::TailFault) return kExitTail;
    if (t == Termination::NanFault) return kExitNan;
    return anomalous ? kExitAnomaly : kExitOk;
}

void write_manifest(const Scenario& sc, const Trajectory& traj, const json& sections, RunManifest& man, RunDir& dir,
                    double started) {
    const std::string path = dir.path("manifest.json");
    man.files = dir.files();
    json j;
    j["name"] = sc.name;
    j["software_version"] = software_version();
    j["config"] = sc.echo;
    j["termination"] = to_string(traj.termination);
    j["message"] = traj.message;
    j["t_numeric"] = number_or_null(traj.t_numeric);
    j["T_lower"] = sc.wants("breaking") && !traj.trivial() ? finite_or_text(man.T_lower) : json(nullptr);
    j["frames"] = traj.frames.size();
    j["steps"] = traj.frames.back().step_index;
    j["final_time"] = traj.frames.back().t;
    j["verdicts"] = {{"mckean", man.mckean.empty() ? json(nullptr) : json(man.mckean)},
                     {"criterion_met", man.criterion_met}};
    for (auto it = sections.begin(); it != sections.end(); ++it) j[it.key()] = it.value();
    j["anomalies"] = man.anomalies;
    j["exit_code"] = man.exit_code;
    j["files"] = man.files;
    man.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count() - started;
    j["wall_seconds"] = man.wall_seconds;
    std::ofstream os(path);
    if (!os) throw Fault(FaultKind::Io, "cannot write " + path);
    os << j.dump(2) << '\n';
}

double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

/// Rebuilds the stored part of a trajectory from a run directory.
struct LoadedRun {
    Scenario scenario;
    Trajectory traj;
    json manifest;
};

LoadedRun load_run(const std::string& run_dir) {
    LoadedRun lr;
    const fs::path dir(run_dir);
    lr.scenario = load_config((dir / "config.txt").string());
    lr.scenario.output_dir = run_dir;
    std::ifstream mf(dir / "manifest.json");
    if (!mf) throw Fault(FaultKind::Io, "missing manifest.json in " + run_dir);
    lr.manifest = json::parse(mf);
    const csv::Table index = csv::read((dir / "frames_index.csv").string());
    const auto times = index.column("t");
    const auto steps = index.column("step_index");
    const auto dts = index.column("dt_last");
    const auto files = index.text_column("file");
    const Grid& grid = lr.scenario.run.grid;
    for (std::size_t k = 0; k < files.size(); ++k) {
        const csv::Table frame = csv::read((dir / files[k]).string());
        std::vector<double> u = frame.column("u");
        if (u.size() != grid.size()) throw Fault(FaultKind::Io, files[k] + ": wrong number of rows");
        lr.traj.frames.push_back(SolutionFrame::from_velocity(Field(grid, std::move(u)), times[k],
                                                              static_cast<std::size_t>(steps[k]), dts[k]));
        const auto& f = lr.traj.frames.back();
        const Extremum e = inf_with_argmin(f.ux);
        lr.traj.history.push_back(StepSample{f.t, e.value, e.position, f.u.max_abs(), f.ux.max_abs()});
    }
    if (lr.traj.frames.empty()) throw Fault(FaultKind::Io, "no frames in " + run_dir);
    lr.traj.lambda = lr.scenario.run.lambda;
    const std::string term = lr.manifest.value("termination", "reached_t_end");
    for (auto t : {Termination::ReachedEnd, Termination::BlowupDetected, Termination::TailFault, Termination::NanFault}) {
        if (term == to_string(t)) lr.traj.termination = t;
    }
    if (lr.manifest.contains("t_numeric") && lr.manifest["t_numeric"].is_number()) {
        lr.traj.t_numeric = lr.manifest["t_numeric"].get<double>();
    }
    return lr;
}

/// Rewrites manifest.json after a regeneration pass, merging new sections.
void update_manifest(const std::string& run_dir, json manifest, const json& sections, const std::vector<std::string>& files,
                     const std::vector<std::string>& anomalies) {
    for (auto it = sections.begin(); it != sections.end(); ++it) manifest[it.key()] = it.value();
    std::vector<std::string> all = manifest.value("files", std::vector<std::string>{});
    for (const auto& f : files) {
        if (std::find(all.begin(), all.end(), f) == all.end()) all.push_back(f);
    }
    manifest["files"] = all;
    if (!anomalies.empty()) manifest["anomalies"] = anomalies;
    std::ofstream os(fs::path(run_dir) / "manifest.json");
    os << manifest.dump(2) << '\n';
}

} // namespace

RunManifest execute(const Scenario& sc) {
    const double started = now_seconds();
    RunManifest man;
    man.name = sc.name;
    const Field u0 = make_datum(sc.datum, sc.run.grid, sc.run.kernel);
    if (u0.is_zero() && !sc.run.allow_trivial) throw Fault(FaultKind::Config, "non-trivial initial datum required");

    RunDir dir(sc.output_dir);
    write_config_echo(sc, dir);
    const Trajectory traj = run(u0, sc.run);
    man.termination = to_string(traj.termination);
    man.t_numeric = traj.t_numeric;
    if (sc.write_frames) write_frames(traj, dir);

    json sections;
    const json diag = diagnostic_outputs(sc, traj, dir, man.anomalies, man);
    const json geo = geometry_outputs(sc, traj, dir, man.anomalies);
    for (auto it = diag.begin(); it != diag.end(); ++it) sections[it.key()] = it.value();
    for (auto it = geo.begin(); it != geo.end(); ++it) sections[it.key()] = it.value();
    man.exit_code = exit_code_for(traj.termination, !man.anomalies.empty());
    write_manifest(sc, traj, sections, man, dir, started);
    return man;
}

int regenerate_geometry(const std::string& run_dir) {
    LoadedRun lr = load_run(run_dir);
    lr.scenario.diagnostics = {"geometry", "regions"};
    RunDir dir(run_dir);
    std::vector<std::string> anomalies = lr.manifest.value("anomalies", std::vector<std::string>{});
    const json sections = geometry_outputs(lr.scenario, lr.traj, dir, anomalies);
    update_manifest(run_dir, lr.manifest, sections, dir.files(), anomalies);
    return exit_code_for(lr.traj.termination, !anomalies.empty());
}

int regenerate_diagnostics(const std::string& run_dir) {
    LoadedRun lr = load_run(run_dir);
    lr.scenario.diagnostics = {"conserved", "breaking", "metric", "tails", "mckean", "characteristics", "residuals"};
    RunDir dir(run_dir);
    std::vector<std::string> anomalies = lr.manifest.value("anomalies", std::vector<std::string>{});
    RunManifest man;
    const json sections = diagnostic_outputs(lr.scenario, lr.traj, dir, anomalies, man);
    update_manifest(run_dir, lr.manifest, sections, dir.files(), anomalies);
    return exit_code_for(lr.traj.termination, !anomalies.empty());
}

std::string report(const std::vector<std::string>& runs, const std::string& csv_path) {
    if (runs.empty()) throw Fault(FaultKind::InvalidArgument, "report needs at least one run");
    const std::vector<std::string> header = {"name",       "termination", "t_numeric",        "T_lower",
                                             "H1_rel_drift", "H0_drift",  "curvature_within", "curvature_median",
                                             "mckean",     "criterion"};
    std::vector<std::vector<std::string>> rows;
    auto cell = [](const json& j, std::initializer_list<const char*> path) -> std::string {
        const json* cur = &j;
        for (const char* p : path) {
            if (!cur->is_object() || !cur->contains(p)) return "";
            cur = &(*cur)[p];
        }
        if (cur->is_null()) return "";
        if (cur->is_number()) return csv::num(cur->get<double>());
        if (cur->is_boolean()) return cur->get<bool>() ? "true" : "false";
        if (cur->is_string()) return cur->get<std::string>();
        return cur->dump();
    };
    for (const auto& r : runs) {
        fs::path p(r);
        if (fs::is_directory(p)) p /= "manifest.json";
        std::ifstream in(p);
        if (!in) throw Fault(FaultKind::Io, "missing manifest " + p.string());
        json j;
        try {
            j = json::parse(in);
        } catch (const json::exception& e) {
            throw Fault(FaultKind::Io, "unreadable manifest " + p.string() + ": " + e.what());
        }
        rows.push_back({cell(j, {"name"}), cell(j, {"termination"}), cell(j, {"t_numeric"}), cell(j, {"T_lower"}),
                        cell(j, {"conservation", "H1_relative_drift"}), cell(j, {"conservation", "H0_drift"}),
                        cell(j, {"curvature", "fraction_within_1e-3"}), cell(j, {"curvature", "median_abs_K_plus_1"}),
                        cell(j, {"verdicts", "mckean"}), cell(j, {"verdicts", "criterion_met"})});
    }
    if (!csv_path.empty()) {
        std::ofstream os(csv_path);
        if (!os) throw Fault(FaultKind::Io, "cannot write " + csv_path);
        for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
        os << '\n';
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
            os << '\n';
        }
    }
    for (auto& row : rows) {
        for (auto& c : row) {
            char* end = nullptr;
            const double v = std::strtod(c.c_str(), &end);
            if (!c.empty() && end == c.c_str() + c.size()) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.6g", v);
                c = buf;
            }
        }
    }
    std::vector<std::size_t> width(header.size());
    for (std::size_t i = 0; i < header.size(); ++i) {
        width[i] = header[i].size();
        for (const auto& row : rows) width[i] = std::max(width[i], row[i].size());
    }
    std::ostringstream os;
    auto line = [&](const std::vector<std::string>& row) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            os << std::left << std::setw(static_cast<int>(width[i])) << row[i] << (i + 1 < row.size() ? "  " : "");
        }
        os << '\n';
    };
    line(header);
    for (const auto& row : rows) line(row);
    return os.str();
}

std::vector<std::string> sweep(const std::string& template_text, const std::string& key,
                               const std::vector<std::string>& values, unsigned jobs, std::vector<int>* codes) {
    if (values.empty()) throw Fault(FaultKind::Config, "sweep needs at least one parameter value");
    const std::string token = "{" + key + "}";
    std::vector<Scenario> scenarios;
    for (const auto& v : values) {
        std::string text = template_text;
        bool replaced = false;
        for (auto pos = text.find(token); pos != std::string::npos; pos = text.find(token, pos + v.size())) {
            text.replace(pos, token.size(), v);
            replaced = true;
        }
        if (!replaced) throw Fault(FaultKind::Config, "template has no placeholder " + token);
        Scenario sc = parse_config(text);
        if (sc.name.find(v) == std::string::npos) {
            const bool default_dir = sc.output_dir == "runs/" + sc.name;
            sc.name += "_" + key + v;
            sc.echo["name"] = sc.name;
            if (default_dir) sc.output_dir = sc.echo["output_dir"] = "runs/" + sc.name;
        }
        scenarios.push_back(std::move(sc));
    }
    std::set<std::string> dirs;
    for (const auto& sc : scenarios) {
        if (!dirs.insert(sc.output_dir).second) {
            throw Fault(FaultKind::Config, "sweep scenarios share the output directory " + sc.output_dir);
        }
    }
    std::vector<int> status(scenarios.size(), kExitOk);
    std::vector<std::string> errors(scenarios.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < scenarios.size(); i = next++) {
            try {
                status[i] = execute(scenarios[i]).exit_code;
            } catch (const Fault& e) {
                errors[i] = e.what();
                status[i] = e.kind() == FaultKind::Config || e.kind() == FaultKind::InvalidArgument ? kExitConfig
                            : e.kind() == FaultKind::Tail                                            ? kExitTail
                            : e.kind() == FaultKind::NonFinite                                       ? kExitNan
                                                                                                     : kExitAnomaly;
            }
        }
    };
    const unsigned n_workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(scenarios.size())));
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        if (!errors[i].empty()) std::cerr << scenarios[i].name << ": " << errors[i] << '\n';
    }
    if (codes) *codes = status;
    std::vector<std::string> out;
    for (const auto& sc : scenarios) out.push_back(sc.output_dir);
    return out;
}

} // namespace chpss
