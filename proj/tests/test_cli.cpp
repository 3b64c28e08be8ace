#include "horseshoe/scenario.hpp"

#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

using namespace horseshoe;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

// Runs the CLI with the given arguments, capturing stdout and stderr together.
Run cli(const std::string& args) {
    std::string cmd = std::string("\"") + HORSESHOE_CLI + "\" " + args + " 2>&1";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p);
    char buf[4096];
    while (std::size_t n = fread(buf, 1, sizeof buf, p)) r.out.append(buf, n);
    int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

fs::path scratch() {
    auto d = fs::temp_directory_path() / ("horseshoe_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
}

std::string write(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
    return p.string();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json tiny() {
    return json::parse(R"({
  "name": "tiny",
  "system": {"kind": "DuffingForced", "parameters": {"delta": 0.25, "gamma": 1.183, "omega": 1.0}},
  "poincare": {"kind": "Stroboscopic"},
  "integrator": {"step": 0.01},
  "blocks": [
    {"id": 1, "corners": [[-1.2, 0.3], [-1.1, 0.3], [-1.1, 0.4], [-1.2, 0.4]]},
    {"id": 2, "corners": [[-0.9, 0.1], [-0.8, 0.1], [-0.8, 0.2], [-0.9, 0.2]]}
  ],
  "sampling": {"connections": 3, "points_per_connection": 12, "grid": 4}
})");
}

}  // namespace

TEST_CASE("entropy of inline matrices") {
    auto g = cli("entropy --matrix \"[[1,1],[1,0]]\"");
    CHECK(g.code == 0);
    CHECK(g.out.find("chaotic: yes") != std::string::npos);
    CHECK(g.out.find("entropy lower bound: 0.4812118251") != std::string::npos);

    auto m = cli("entropy --matrix \"[[0,1],[1,0]]\"");
    CHECK(m.code == 0);
    CHECK(m.out.find("minimal: yes") != std::string::npos);
    CHECK(m.out.find("chaotic: no") != std::string::npos);

    auto c = cli("entropy --matrix \"[[1,1,1,0],[1,1,0,1],[1,1,1,1],[1,1,1,1]]\" --proposition");
    CHECK(c.code == 0);
    CHECK(c.out.find("entropy lower bound: 1.227947177") != std::string::npos);
    CHECK(c.out.find("proposition bound: 0.8958797346") != std::string::npos);

    auto r = cli("entropy --matrix \"[[1,0],[1,1]]\" --proposition");
    CHECK(r.out.find("irreducible: no") != std::string::npos);
    CHECK(r.out.find("not applicable") != std::string::npos);
}

TEST_CASE("entropy from a file and malformed input") {
    auto d = scratch();
    auto f = write(d / "m.json", "[[1,1],[1,1]]");
    auto ok = cli("entropy " + f);
    CHECK(ok.code == 0);
    CHECK(ok.out.find("entropy lower bound: 0.6931471806") != std::string::npos);

    auto bad = cli("entropy --matrix \"[[1,2],[1,0]]\"");
    CHECK(bad.code == 1);
    CHECK(bad.out.find("error:") != std::string::npos);
    CHECK(cli("entropy --matrix \"[[1,1],[1]]\"").code == 1);
    CHECK(cli("entropy").code == 1);
    CHECK(cli("entropy " + (d / "missing.json").string()).code == 1);
}

TEST_CASE("verify writes the library report") {
    auto d = scratch();
    auto f = write(d / "tiny.json", tiny().dump(2));
    auto out = (d / "report.json").string();
    auto r = cli("verify " + f + " --json " + out);
    CHECK((r.code == 0 || r.code == 2));
    CHECK(r.out.find("scenario: tiny") != std::string::npos);
    CHECK(r.out.find("crossing matrix: ") != std::string::npos);
    CHECK(r.out.find("semi-horseshoe: ") != std::string::npos);
    auto rep = json::parse(slurp(out));
    auto s = scenario_from_json(tiny());
    auto lib = run_scenario(s);
    CHECK(r.code == (lib.any_undetermined() ? 2 : 0));
    rep.erase("timings");
    rep.erase("provenance");
    CHECK(rep == report_json(s, lib));
}

TEST_CASE("verify exit codes") {
    auto d = scratch();
    // every sample escapes, so every verdict is undetermined
    auto j = tiny();
    j["integrator"]["escape_radius"] = 0.5;
    auto r = cli("verify " + write(d / "esc.json", j.dump(2)));
    CHECK(r.code == 2);
    CHECK(r.out.find("Undetermined") != std::string::npos);

    auto bad = tiny();
    bad["blocks"][0]["corners"][1] = "corner";
    std::string text = bad.dump(2);
    auto e = cli("verify " + write(d / "bad.json", text));
    CHECK(e.code == 1);
    int line = json_pointer_line(text, "/blocks/0/corners/1");
    CHECK(e.out.find(":" + std::to_string(line) + ": ") != std::string::npos);

    auto overlap = tiny();
    overlap["blocks"][1] = overlap["blocks"][0];
    overlap["blocks"][1]["id"] = 2;
    auto o = cli("verify " + write(d / "overlap.json", overlap.dump(2)));
    CHECK(o.code == 1);
    CHECK(o.out.find("overlap") != std::string::npos);

    CHECK(cli("verify " + (d / "nothing.json").string()).code == 1);
    CHECK(cli("").code != 0);
}

TEST_CASE("sample exports") {
    auto d = scratch();
    auto f = write(d / "tiny.json", tiny().dump(2));
    auto out = d / "out";

    CHECK(cli("sample " + f + " --what blocks --out " + out.string()).code == 0);
    CHECK(slurp(out / "blocks.csv").rfind("block,corner,x,y\n", 0) == 0);
    CHECK(slurp(out / "blocks.svg").find("<polygon") != std::string::npos);

    CHECK(cli("sample " + f + " --what images --fibers 3 --points 10 --out " + out.string()).code == 0);
    auto icsv = slurp(out / "images.csv");
    CHECK(std::count(icsv.begin(), icsv.end(), '\n') == 1 + 2 * 3 * 10);
    CHECK(slurp(out / "images.svg").find("fiber-image") != std::string::npos);

    CHECK(cli("sample " + f + " --what attractor --iterations 20 --out " + out.string()).code == 0);
    auto acsv = slurp(out / "attractor.csv");
    CHECK(std::count(acsv.begin(), acsv.end(), '\n') == 21);

    CHECK(cli("sample " + f + " --what nonsense --out " + out.string()).code == 1);

    auto empty = tiny();
    empty["blocks"] = json::array();
    auto e = write(d / "empty.json", empty.dump(2));
    CHECK(cli("sample " + e + " --what blocks --out " + (d / "empty").string()).code == 0);
    auto svg = slurp(d / "empty" / "blocks.svg");
    CHECK(svg.find("<g class=\"block-layer\">\n</g>") != std::string::npos);
    CHECK(svg.find("<polygon") == std::string::npos);
}

TEST_CASE("Chen attractor export keeps to the section") {
    auto d = scratch();
    auto out = d / "chen";
    auto r = cli(std::string("sample ") + HORSESHOE_SCENARIO_DIR + "/chen.json --what attractor --iterations 200 --out " +
                 out.string());
    REQUIRE(r.code == 0);
    std::istringstream in(slurp(out / "attractor.csv"));
    std::string line;
    std::getline(in, line);
    int n = 0;
    while (std::getline(in, line)) {
        double x = 0, y = 0;
        char status[32] = {};
        REQUIRE(std::sscanf(line.c_str(), "%*d,%lf,%lf,%31s", &x, &y, status) == 3);
        CHECK(std::string(status) == "ok");
        CHECK(x * y < 63.0);
        ++n;
    }
    CHECK(n == 200);
}

TEST_CASE("cleanup") { fs::remove_all(scratch()); }
