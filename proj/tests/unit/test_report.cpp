#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "doctest.h"
#include "stopflow/config.hpp"
#include "stopflow/errors.hpp"
#include "stopflow/manifest.hpp"
#include "stopflow/report.hpp"

using namespace stopflow;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("17 significant digits round-trip") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 10000; ++i) {
        const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
        CHECK(std::strtod(fmt17(v).c_str(), nullptr) == v);
    }
    CHECK(fmt17(0.1) == "0.10000000000000001");
    CHECK(fmt17(2.0) == "2");
    CHECK(std::strtod(fmt17(std::numeric_limits<double>::denorm_min()).c_str(), nullptr) ==
          std::numeric_limits<double>::denorm_min());
}

TEST_CASE("CSV write and read") {
    TempDir dir("stopflow_test_csv");
    {
        CsvWriter w(dir.path / "sub" / "t.csv", {"a", "b"});
        w.row({1.0, 0.1});
        w.row(std::vector<double>{-2.5, 1e-300});
        CHECK_THROWS_AS(w.row({1.0}), IoError);
        w.close();
    }
    CHECK(slurp(dir.path / "sub" / "t.csv") == "a,b\n1,0.10000000000000001\n-2.5,1e-300\n");
    const CsvTable t = read_csv(dir.path / "sub" / "t.csv");
    CHECK(t.header == std::vector<std::string>{"a", "b"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0][1] == 0.1);
    CHECK(t.rows[1][1] == 1e-300);

    std::ofstream(dir.path / "bad.csv") << "a\nnot-a-number\n";
    CHECK_THROWS_AS(read_csv(dir.path / "bad.csv"), IoError);
    CHECK_THROWS_AS(read_csv(dir.path / "absent.csv"), IoError);
}

TEST_CASE("SVG plot is well-formed") {
    TempDir dir("stopflow_test_svg");
    write_svg_plot(dir.path / "p.svg", "title <&>", "x", "y",
                   {{"one", {0, 1, 2}, {1, 2, 3}, false}, {"two", {0, 2}, {3, 1}, true}});
    const std::string s = slurp(dir.path / "p.svg");
    CHECK(s.rfind("<svg", 0) == 0);
    CHECK(s.find("</svg>") != std::string::npos);
    CHECK(s.find("polyline") != std::string::npos);
    CHECK(s.find("title &lt;&amp;&gt;") != std::string::npos);
    CHECK(s.find("stroke-dasharray") != std::string::npos);
    write_svg_plot(dir.path / "log.svg", "t", "x", "y", {{"s", {1, 2, 3}, {1e-8, 1e-4, 1}, false}},
                   true);
    CHECK(fs::file_size(dir.path / "log.svg") > 0);
}

TEST_CASE("config text parsing") {
    const auto m = parse_config_text("# model\nmu=0.2\n sigma = 0.2 \nrho=0.5\nkappa=5\nlambda=1\ntheta=0.5\n");
    CHECK(m.size() == 6);
    CHECK(m.at("kappa") == 5.0);
    CHECK_THROWS_WITH_AS(parse_config_text("sigmaa=0.2\n", "f.cfg"),
                         doctest::Contains("unknown key 'sigmaa'"), ValidationError);
    CHECK_THROWS_WITH_AS(parse_config_text("mu=0.2\nmu=0.3\n"), doctest::Contains("twice"),
                         ValidationError);
    CHECK_THROWS_AS(parse_config_text("mu=abc\n"), ValidationError);
    CHECK_THROWS_AS(parse_config_text("mu 0.2\n"), ValidationError);
}

TEST_CASE("parameter resolution") {
    TempDir dir("stopflow_test_cfg");
    const fs::path full = dir.path / "model.cfg";
    std::ofstream(full) << "mu=0.2\nsigma=0.2\nrho=0.5\nkappa=5\nlambda=1\ntheta=0.5\n";
    const ModelParams p = resolve_params(full, {});
    CHECK(p.rho == 0.5);
    CHECK(p.kappa == 5.0);

    const ModelParams q = resolve_params(full, {{"rho", 0.6}});
    CHECK(q.rho == 0.6);

    const fs::path partial = dir.path / "partial.cfg";
    std::ofstream(partial) << "mu=0.2\nsigma=0.2\nkappa=5\nlambda=1\ntheta=0.5\n";
    CHECK_THROWS_WITH_AS(resolve_params(partial, {}), doctest::Contains("rho"), ValidationError);
    CHECK(resolve_params(partial, {{"rho", 0.5}}).rho == 0.5);

    CHECK_THROWS_AS(resolve_params(dir.path / "nope.cfg", {}), IoError);
    CHECK_THROWS_AS(resolve_params(std::nullopt, {{"rho", 0.01}}), ValidationError);
    CHECK(resolve_params(std::nullopt, {}).theta == 0.5);
}

TEST_CASE("manifest round trip") {
    TempDir dir("stopflow_test_manifest");
    RunManifest m;
    m.command = "spi";
    m.version = kVersion;
    m.params.rho = 0.1 + 0.2;
    m.seed = 0xffffffffffffull;
    m.threads = 3;
    m.options = {{"outer-iters", "10"}, {"crn", "on"}};
    m.artifacts = {"l1_trace.csv", "g_iter_0.csv"};
    m.duration_s = 1.25;
    write_manifest(dir.path / "manifest.json", m);
    const RunManifest back = read_manifest(dir.path / "manifest.json");
    CHECK(back.command == m.command);
    CHECK(back.version == m.version);
    CHECK(back.params.rho == m.params.rho);
    CHECK(back.seed == m.seed);
    CHECK(back.threads == 3);
    CHECK(back.options == m.options);
    CHECK(back.artifacts == m.artifacts);

    std::ofstream(dir.path / "broken.json") << "{\"command\": 3}";
    CHECK_THROWS_AS(read_manifest(dir.path / "broken.json"), IoError);
    CHECK_THROWS_AS(read_manifest(dir.path / "missing.json"), IoError);
}
