// horseshoe: command-line front end for scenario verification, entropy bounds and exports.
#include "horseshoe/scenario.hpp"
#include "horseshoe/server.hpp"
#include "horseshoe/symbolic.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#ifndef HORSESHOE_SCENARIO_DIR
#define HORSESHOE_SCENARIO_DIR "scenarios"
#endif

using namespace horseshoe;

namespace {

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p);
    if (!out) throw Error("cannot write " + p.string());
    out << text;
}

void print_verdict(const SubshiftVerdict& v) {
    std::cout << std::setprecision(10);
    std::cout << "irreducible: " << (v.irreducible ? "yes" : "no") << (v.degenerate ? " (order 1)" : "") << '\n';
    if (v.minimal) std::cout << "minimal: " << (*v.minimal ? "yes" : "no") << '\n';
    if (v.chaotic) std::cout << "chaotic: " << (*v.chaotic ? "yes" : "no") << '\n';
    std::cout << "spectral radius: " << v.spectral_radius << '\n';
    std::cout << "entropy lower bound: " << v.entropy_lower_bound << '\n';
}

int cmd_verify(const std::string& file, const std::string& json_out) {
    Scenario s = load_scenario(file);
    RunResult r = run_scenario(s);
    const auto& rep = r.report;
    std::cout << "scenario: " << s.name << '\n';
    std::cout << "crossing matrix: " << rep.crossing_matrix.str() << '\n';
    for (auto& row : rep.verdicts)
        for (auto& v : row) {
            std::cout << "  B" << v.i << " -> B" << v.j << ": " << status_name(v.status);
            if (v.status == CrossingStatus::Disjoint) std::cout << " (distance " << *v.min_distance << ")";
            if (v.status == CrossingStatus::Undetermined) std::cout << " (" << v.reason << ")";
            std::cout << '\n';
        }
    std::cout << "semi-horseshoe: " << (rep.semi ? "yes" : "no") << '\n';
    print_verdict(rep.subshift);
    if (!json_out.empty()) write_file(json_out, to_json(s, r).dump(2) + "\n");
    return r.any_undetermined() ? 2 : 0;
}

int cmd_entropy(const std::string& file, const std::string& inline_matrix, bool proposition) {
    Matrix01 a;
    if (!inline_matrix.empty()) {
        a = parse_matrix(inline_matrix);
    } else if (!file.empty()) {
        std::ifstream in(file);
        if (!in) throw SchemaError("cannot open matrix file '" + file + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        a = parse_matrix(ss.str());
    } else {
        throw SchemaError("give a matrix file or --matrix");
    }
    auto v = classify(a);
    std::cout << "matrix: " << a.str() << '\n';
    print_verdict(v);
    if (proposition) {
        if (!v.irreducible) {
            std::cout << "proposition bound: not applicable (reducible)\n";
        } else if (auto p = proposition_bound(a)) {
            std::cout << "proposition bound: " << *p << '\n';
        } else {
            std::cout << "proposition bound: not applicable (no all-ones row)\n";
        }
    }
    return 0;
}

int cmd_sample(const std::string& file, const std::string& what, const std::string& out_dir, int fibers, int points,
               int iterations) {
    Scenario s = load_scenario(file);
    std::filesystem::create_directories(out_dir);
    std::filesystem::path dir(out_dir);
    if (what == "blocks") {
        write_file(dir / "blocks.csv", blocks_csv(s));
        write_file(dir / "blocks.svg", render_svg(s, nullptr, nullptr, nullptr));
    } else if (what == "images") {
        s.validate();
        auto imgs = sample_fiber_images(s, fibers, points);
        write_file(dir / "images.csv", images_csv(imgs));
        write_file(dir / "images.svg", render_svg(s, &imgs, nullptr, nullptr));
    } else if (what == "attractor") {
        s.validate(false);
        AttractorConfig ac;
        if (s.attractor) ac = *s.attractor;
        else if (!s.blocks.empty()) ac.seed = s.blocks.front().chart(0.5, 0.5);
        if (iterations > 0) ac.iterations = iterations;
        auto pts = sample_attractor(s, ac);
        write_file(dir / "attractor.csv", attractor_csv(pts));
        write_file(dir / "attractor.svg", render_svg(s, nullptr, &pts, nullptr));
    } else {
        throw SchemaError("--what must be blocks, images or attractor");
    }
    std::cout << "wrote " << what << " to " << out_dir << '\n';
    return 0;
}

int cmd_serve(const std::string& host, int port, const std::string& dir) {
    auto registry = load_registry(dir);
    ApiServer server(std::move(registry));
    std::cout << "serving on http://" << host << ':' << port << '\n' << std::flush;
    if (!server.listen(host, port)) {
        std::cerr << "error: cannot listen on " << host << ':' << port << '\n';
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Topological horseshoe detection and entropy bounds"};
    app.require_subcommand(1);

    std::string file, json_out, matrix, what, out_dir, host = "127.0.0.1", dir = HORSESHOE_SCENARIO_DIR;
    bool proposition = false;
    int port = 8080, fibers = 9, points = 400, iterations = 0;

    auto* verify = app.add_subcommand("verify", "Verify the crossing structure of a scenario");
    verify->add_option("file", file, "Scenario JSON")->required();
    verify->add_option("--json", json_out, "Write the report JSON here");

    auto* entropy = app.add_subcommand("entropy", "Classify a 0/1 matrix and bound the entropy");
    entropy->add_option("file", file, "Matrix JSON file");
    entropy->add_option("--matrix", matrix, "Inline matrix, e.g. \"[[1,1],[1,0]]\"");
    entropy->add_flag("--proposition", proposition, "Also print the all-ones-row bound");

    auto* sample = app.add_subcommand("sample", "Export blocks, mapped fibers or section iterates");
    sample->add_option("file", file, "Scenario JSON")->required();
    sample->add_option("--what", what, "blocks | images | attractor")->required();
    sample->add_option("--out", out_dir, "Output directory")->required();
    sample->add_option("--fibers", fibers, "Fibers per block for images");
    sample->add_option("--points", points, "Points per fiber for images");
    sample->add_option("--iterations", iterations, "Number of section iterates for attractor");

    auto* serve = app.add_subcommand("serve", "Serve the JSON API");
    serve->add_option("--port", port, "Port");
    serve->add_option("--host", host, "Interface to bind");
    serve->add_option("--scenarios", dir, "Directory of shipped scenarios");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*verify) return cmd_verify(file, json_out);
        if (*entropy) return cmd_entropy(file, matrix, proposition);
        if (*sample) return cmd_sample(file, what, out_dir, fibers, points, iterations);
        if (*serve) return cmd_serve(host, port, dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
