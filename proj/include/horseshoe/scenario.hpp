#pragma once

#include "horseshoe/blocks.hpp"
#include "horseshoe/flows.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace horseshoe {

inline constexpr const char* tool_version = "0.1.0";

struct Viewport {
    double xmin = -1, xmax = 1, ymin = -1, ymax = 1;
};

struct AttractorConfig {
    Vec2 seed;
    int transient = 100;
    int iterations = 10000;
};

struct Scenario {
    std::string name;
    std::string notes;
    SystemSpec system;
    PoincareSpec poincare;
    IntegratorConfig integrator;
    std::vector<Block> blocks;
    SamplingConfig sampling;
    std::optional<Viewport> viewport;
    std::optional<AttractorConfig> attractor;

    // Throws InvariantError / InvalidBlocks.
    void validate(bool require_blocks = true) const;
    std::shared_ptr<const PoincareMap> make_map() const;
};

// Parses scenario text. Schema problems raise SchemaError whose message starts with
// "line N:" pointing at the offending value.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);
// Accepts a parsed object; require_blocks = false allows system-only fragments.
Scenario scenario_from_json(const nlohmann::json& j, bool require_blocks = true);
nlohmann::json to_json(const Scenario& s);

struct RunResult {
    CrossingReport report;
    std::map<std::string, double> timings;
    std::string config_hash;
    std::string version = tool_version;
    bool any_undetermined() const;
};

RunResult run_scenario(const Scenario& s);
// Report JSON without timings or provenance; identical for identical scenarios.
nlohmann::json report_json(const Scenario& s, const RunResult& r);
nlohmann::json to_json(const Scenario& s, const RunResult& r);

// 64-bit FNV-1a over the canonical JSON form of the scenario, as hex.
std::string config_hash(const Scenario& s);

// Exports
struct FiberImage {
    int block = 0;
    int fiber = 0;
    double v = 0.0;
    std::vector<double> u;
    std::vector<MapResult> images;
};
std::vector<FiberImage> sample_fiber_images(const Scenario& s, int fibers_per_block, int points_per_fiber);
std::vector<MapResult> sample_attractor(const Scenario& s, const AttractorConfig& cfg);

std::string blocks_csv(const Scenario& s);
std::string images_csv(const std::vector<FiberImage>& imgs);
std::string attractor_csv(const std::vector<MapResult>& pts);
std::string render_svg(const Scenario& s, const std::vector<FiberImage>* images,
                       const std::vector<MapResult>* attractor, const CrossingReport* report);

// Line number (1-based) of the value at a JSON pointer in the given text, or 0.
int json_pointer_line(const std::string& text, const std::string& pointer);

}  // namespace horseshoe
