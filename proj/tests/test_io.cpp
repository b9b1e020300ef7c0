#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "frg/errors.hpp"
#include "frg/io.hpp"

using namespace frg;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("/tmp/frg_io_test_" + name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("doubles format with shortest round-trip precision") {
    CHECK(std::stod(format_double(0.1)) == 0.1);
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
    CHECK(std::stod(format_double(1e-300)) == 1e-300);
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(-2.5) == "-2.5");
}

TEST_CASE("CSV output is byte-identical across repeated writes") {
    TempFile a("a.csv"), b("b.csv");
    const std::vector<std::string> header = {"x", "y"};
    const std::vector<std::vector<double>> rows = {{1.0, 0.1}, {2.0, 1.0 / 3.0}, {3.0, -1e-12}};
    write_csv(a.path, header, rows);
    write_csv(b.path, header, rows);
    const std::string text = slurp(a.path);
    CHECK(text == slurp(b.path));
    CHECK(text.substr(0, 4) == "x,y\n");
    CHECK(text.find("0.33333333333333331") != std::string::npos);
}

TEST_CASE("TOML configs parse sections, comments, and typed values") {
    const Config cfg = Config::from_toml_text(R"(
# top-level comment
title = "flow"
n = 42
tol = 1e-8   # trailing comment
verbose = true

[ode]
rtol = 1e-6
steps = 100
)");
    CHECK(cfg.get_string("title", "") == "flow");
    CHECK(cfg.get_int("n", 0) == 42);
    CHECK(cfg.get_double("tol", 0.0) == 1e-8);
    CHECK(cfg.get_bool("verbose", false));
    CHECK(cfg.get_double("ode.rtol", 0.0) == 1e-6);
    CHECK(cfg.get_int("ode.steps", 0) == 100);
    CHECK(cfg.has("ode.rtol"));
    CHECK(!cfg.has("missing"));
    CHECK(cfg.get_int("missing", 7) == 7);
}

TEST_CASE("JSON configs flatten nested objects with dotted keys") {
    const Config cfg = Config::from_json_text(R"({
        "seed": 3,
        "flow": {"kappa_uv": 10.0, "variant": "wetterich", "log": false}
    })");
    CHECK(cfg.get_int("seed", 0) == 3);
    CHECK(cfg.get_double("flow.kappa_uv", 0.0) == 10.0);
    CHECK(cfg.get_string("flow.variant", "") == "wetterich");
    CHECK(!cfg.get_bool("flow.log", true));
}

TEST_CASE("malformed configuration text is rejected") {
    CHECK_THROWS_AS(Config::from_toml_text("key_without_value\n"), ValidationError);
    CHECK_THROWS_AS(Config::from_json_text("{\"unterminated\": "), ValidationError);
    CHECK_THROWS_AS(Config::from_file("/nonexistent/path/config.toml"), ValidationError);
    CHECK_THROWS_AS(Config::from_file("/tmp/frg_io_test_unknown.yaml"), ValidationError);
}

TEST_CASE("configuration files round-trip by extension") {
    TempFile toml("cfg.toml");
    {
        std::ofstream out(toml.path);
        out << "alpha = 1.5\n[run]\nname = \"x\"\n";
    }
    const Config cfg = Config::from_file(toml.path);
    CHECK(cfg.get_double("alpha", 0.0) == 1.5);
    CHECK(cfg.get_string("run.name", "") == "x");
}

TEST_CASE("set overrides an existing value") {
    Config cfg = Config::from_toml_text("n = 1\n");
    cfg.set("n", "5");
    CHECK(cfg.get_int("n", 0) == 5);
    cfg.set("fresh", "2.5");
    CHECK(cfg.get_double("fresh", 0.0) == 2.5);
}

TEST_CASE("SVG plots are written deterministically") {
    TempFile a("p1.svg"), b("p2.svg");
    const std::vector<PlotSeries> series = {{"err", {1.0, 2.0, 3.0}, {0.1, 0.01, 0.001}}};
    write_svg_plot(a.path, "convergence", series, false, true);
    write_svg_plot(b.path, "convergence", series, false, true);
    const std::string text = slurp(a.path);
    CHECK(text == slurp(b.path));
    CHECK(text.find("<svg") != std::string::npos);
    CHECK(text.find("convergence") != std::string::npos);
}
