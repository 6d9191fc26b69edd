#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "chpss/cli.hpp"
#include "chpss/fault.hpp"

namespace {

int exit_code_for(const chpss::Fault& f) {
    using chpss::FaultKind;
    switch (f.kind()) {
    case FaultKind::Config:
    case FaultKind::InvalidArgument:
    case FaultKind::Io:
        return chpss::kExitConfig;
    case FaultKind::Tail:
        return chpss::kExitTail;
    case FaultKind::NonFinite:
        return chpss::kExitNan;
    default:
        return chpss::kExitAnomaly;
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw chpss::Fault(chpss::FaultKind::Io, "cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Camassa-Holm pseudospherical-surface experiments"};
    app.set_version_flag("--version", chpss::software_version());
    app.require_subcommand(1);

    std::string config;
    std::string output_override;
    auto* simulate = app.add_subcommand("simulate", "run a scenario and write all requested outputs");
    simulate->add_option("config", config, "scenario file")->required()->check(CLI::ExistingFile);
    simulate->add_option("-o,--output", output_override, "output directory (overrides the config)");

    std::string run_dir;
    auto* geometry = app.add_subcommand("geometry", "recompute geometry outputs of a finished run");
    geometry->add_option("run_dir", run_dir, "run directory")->required()->check(CLI::ExistingDirectory);
    auto* diagnose = app.add_subcommand("diagnose", "recompute diagnostics of a finished run");
    diagnose->add_option("run_dir", run_dir, "run directory")->required()->check(CLI::ExistingDirectory);

    std::vector<std::string> runs;
    std::string csv_path;
    auto* rep = app.add_subcommand("report", "comparison table over run manifests");
    rep->add_option("runs", runs, "run directories or manifest files")->required();
    rep->add_option("--csv", csv_path, "also write the table as CSV");

    std::string template_path;
    std::string param;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    auto* sw = app.add_subcommand("sweep", "run a templated scenario over parameter values");
    sw->add_option("template", template_path, "scenario template with {key} placeholders")
        ->required()
        ->check(CLI::ExistingFile);
    sw->add_option("--param", param, "key=v1,v2,... substituted for {key}")->required();
    sw->add_option("--jobs", jobs, "concurrent runs")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*simulate) {
            chpss::Scenario sc = chpss::load_config(config);
            if (!output_override.empty()) sc.output_dir = sc.echo["output_dir"] = output_override;
            const chpss::RunManifest man = chpss::execute(sc);
            std::cout << man.name << ": " << man.termination;
            if (man.t_numeric) std::cout << " at t=" << *man.t_numeric;
            std::cout << " (" << man.wall_seconds << " s) -> " << sc.output_dir << "\n";
            for (const auto& a : man.anomalies) std::cerr << "anomaly: " << a << "\n";
            return man.exit_code;
        }
        if (*geometry) return chpss::regenerate_geometry(run_dir);
        if (*diagnose) return chpss::regenerate_diagnostics(run_dir);
        if (*rep) {
            std::cout << chpss::report(runs, csv_path);
            return chpss::kExitOk;
        }
        if (*sw) {
            const auto eq = param.find('=');
            if (eq == std::string::npos || eq == 0) {
                throw chpss::Fault(chpss::FaultKind::Config, "--param expects key=v1,v2,...");
            }
            std::vector<std::string> values;
            std::stringstream ss(param.substr(eq + 1));
            for (std::string v; std::getline(ss, v, ',');) {
                if (!v.empty()) values.push_back(v);
            }
            std::vector<int> codes;
            const auto dirs = chpss::sweep(read_file(template_path), param.substr(0, eq), values, jobs, &codes);
            int worst = chpss::kExitOk;
            for (std::size_t i = 0; i < dirs.size(); ++i) {
                std::cout << dirs[i] << " exit " << codes[i] << "\n";
                worst = std::max(worst, codes[i]);
            }
            return worst;
        }
    } catch (const chpss::Fault& f) {
        std::cerr << "error (" << chpss::to_string(f.kind()) << "): " << f.what() << "\n";
        return exit_code_for(f);
    }
    return chpss::kExitOk;
}
