#include <filesystem>
#include <fstream>
#include <string>

#include "chpss/cli.hpp"
#include "chpss/fault.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace chpss;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("chpss_cli_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string fault_text(const std::string& cfg) {
    try {
        parse_config(cfg);
    } catch (const Fault& e) {
        CHECK(e.kind() == FaultKind::Config);
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("minimal config takes the documented defaults") {
    const Scenario sc = parse_config("name = demo\ndatum = gaussian_m a=1 n=1\nt_end = 2\n");
    CHECK(sc.name == "demo");
    CHECK(sc.run.grid.half_width() == 30.0);
    CHECK(sc.run.grid.size() == 2048);
    CHECK(sc.run.lambda == 1.0);
    CHECK(sc.run.cfl == 0.3);
    CHECK(sc.run.t_end == 2.0);
    CHECK(sc.output_dir == "runs/demo");
    CHECK(sc.wants("geometry"));
    CHECK(sc.echo.at("cfl") == "0.3");
    CHECK(sc.datum.kind == DatumKind::GaussianM);
}

TEST_CASE("config faults") {
    CHECK(fault_text("name=x\ndatum=gaussian_u a=1 n=1\nt_end=1\nlambda=0\n").find("lambda must be nonzero") !=
          std::string::npos);
    CHECK(fault_text("name=x\ndatum=gaussian_u a=1 n=1\nt_end=1\nlambda=0\n").find("line 4") != std::string::npos);
    const std::string unknown = fault_text("name=x\nfoo=1\ndatum=zero\nbar=2\nt_end=1\n");
    CHECK(unknown.find("'foo' (line 2)") != std::string::npos);
    CHECK(unknown.find("'bar' (line 4)") != std::string::npos);
    const std::string missing = fault_text("# only a name\nname=x\n");
    CHECK(missing.find("datum") != std::string::npos);
    CHECK(missing.find("t_end") != std::string::npos);
    CHECK(fault_text("name=x\ndatum=zero\nt_end=1\nN=abc\n").find("line 4") != std::string::npos);
    CHECK(fault_text("name=x\ndatum=zero\nt_end=1\nt_end=2\n").find("duplicate") != std::string::npos);
    CHECK(fault_text("name=x\ndatum=gaussian_u a=1\nt_end=1\n").find("line 2") != std::string::npos);
    CHECK(fault_text("name=x\ndatum=zero\nt_end=1\nno equals sign\n").find("line 4") != std::string::npos);
}

TEST_CASE("datum families") {
    Grid g(30, 1024);
    const Field u = make_datum(parse_datum("gaussian_u a=2 n=3"), g, KernelMethod::SpectralMultiplier);
    CHECK(u.max_abs() == doctest::Approx(2.0));
    const Field b = make_datum(parse_datum("bump_compact a=1 w=4"), g, KernelMethod::SpectralMultiplier);
    CHECK(b.max_abs() == doctest::Approx(1.0));
    for (std::size_t j = 0; j < g.size(); ++j) {
        if (std::abs(g.x(j)) >= 4.0) CHECK(b[j] == 0.0);
    }
    const Field m = make_datum(parse_datum("gaussian_m a=1 n=1"), g, KernelMethod::SpectralMultiplier);
    CHECK(m.max_abs() > 0.0);
    CHECK(make_datum(parse_datum("zero"), g, KernelMethod::SpectralMultiplier).is_zero());
    CHECK_THROWS_AS(parse_datum("sech a=1"), Fault);
    CHECK_THROWS_AS(parse_datum("gaussian_u a=1 n=-1"), Fault);
}

TEST_CASE("trivial datum needs the flag") {
    const fs::path dir = scratch_dir("trivial");
    const std::string base = "name=z\ndatum=zero\nt_end=0.2\nN=256\noutput_dir=" + dir.string() + "\n";
    try {
        execute(parse_config(base));
        FAIL("expected a fault");
    } catch (const Fault& e) {
        CHECK(std::string(e.what()).find("non-trivial initial datum required") != std::string::npos);
    }
    const RunManifest man = execute(parse_config(base + "allow_trivial=true\n"));
    CHECK(man.exit_code == kExitOk);
    CHECK(man.termination == "reached_t_end");
    fs::remove_all(dir);
}

TEST_CASE("execute writes every output and the manifest last") {
    const fs::path dir = scratch_dir("run");
    const Scenario sc = parse_config("name=small\ndatum=gaussian_m a=1 n=1\nt_end=0.6\nN=1024\noutput_stride=5\noutput_dir=" +
                                     dir.string() + "\n");
    const RunManifest man = execute(sc);
    CHECK(man.exit_code == kExitOk);
    CHECK(man.mckean == "nonneg_global");
    CHECK_FALSE(man.criterion_met);
    REQUIRE(!man.files.empty());
    CHECK(man.files.back() == "manifest.json");
    for (const auto& f : man.files) CHECK(fs::exists(dir / f));
    std::size_t on_disk = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++on_disk;
    CHECK(on_disk == man.files.size());

    std::ifstream in(dir / "manifest.json");
    const auto j = nlohmann::json::parse(in);
    CHECK(j["termination"] == "reached_t_end");
    CHECK(j["software_version"] == software_version());
    CHECK(j["verdicts"]["mckean"] == "nonneg_global");
    CHECK(j["config"]["N"] == "1024");
    CHECK(j["t_numeric"].is_null());
    CHECK(j["wall_seconds"].get<double>() >= 0.0);

    // the echoed config reproduces the scenario
    const Scenario again = load_config((dir / "config.txt").string());
    CHECK(again.echo == sc.echo);

    CHECK(regenerate_geometry(dir.string()) == kExitOk);
    CHECK(regenerate_diagnostics(dir.string()) == kExitOk);
    const std::string table = report({dir.string()}, (dir / "report.csv").string());
    CHECK(table.find("small") != std::string::npos);
    CHECK(fs::exists(dir / "report.csv"));
    fs::remove_all(dir);
}

TEST_CASE("sweep expands the template") {
    const fs::path dir = scratch_dir("sweep");
    const std::string tmpl = "name=sw{n}\ndatum=gaussian_u a=1 n={n}\nt_end=0.2\nN=1024\ndiagnostics=conserved,mckean\n"
                             "output_dir=" + dir.string() + "/sw{n}\n";
    std::vector<int> codes;
    const auto dirs = sweep(tmpl, "n", {"1", "2"}, 2, &codes);
    REQUIRE(dirs.size() == 2);
    CHECK(codes == std::vector<int>{kExitOk, kExitOk});
    for (const auto& d : dirs) CHECK(fs::exists(fs::path(d) / "manifest.json"));
    CHECK_THROWS_AS(sweep(tmpl, "w", {"1"}, 1), Fault);
    fs::remove_all(dir);
}
