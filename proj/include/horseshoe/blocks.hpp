#pragma once

#include "horseshoe/flows.hpp"
#include "horseshoe/symbolic.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace horseshoe {

// Convex quadrilateral with chart phi(u, v) from the unit square:
// phi(0, v) runs along c0 -> c3 (designated edge B1), phi(1, v) along c1 -> c2 (B2).
struct Block {
    int id = 0;
    std::array<Vec2, 4> corners;

    Vec2 chart(double u, double v) const;
    // Chart extended to any (u, v); no range check.
    Vec2 chart_unchecked(double u, double v) const;
    // Throws InvalidBlocks on a non-convex, degenerate or clockwise quad.
    void validate() const;
    double signed_area() const;
};

Vec2 chart_point(const Block& b, double u, double v);

struct ChartCoords {
    double u = 0.0;
    double v = 0.0;
};

// Chart coordinates of p if p lies in b.
std::optional<ChartCoords> locate(const Block& b, Vec2 p);
// Newton inversion of the bilinear chart without the inside test (may return any real (u, v)).
std::optional<ChartCoords> invert_chart(const Block& b, Vec2 p);

double segment_distance(Vec2 p, Vec2 a, Vec2 b);
// Distance from p to the closed quad (0 inside).
double distance_to_block(const Block& b, Vec2 p);
bool contains(const Block& b, Vec2 p);
// Minimum distance between two closed quads (0 if they meet).
double block_distance(const Block& a, const Block& b);

struct SamplingConfig {
    int connections = 41;             // n_v
    int points_per_connection = 400;  // n_u
    int grid = 60;                    // n_g
    double margin = 1e-3;             // epsilon
    double chart_tolerance = 0.02;    // delta_u
    int refine = 30;                  // bisection steps at the ends of a run
    void validate() const;
    SamplingConfig doubled() const;
};

enum class CrossingStatus { Crosses, Disjoint, Undetermined };
std::string status_name(CrossingStatus s);

struct FiberRecord {
    int fiber = 0;
    bool passed = false;
    int run_begin = -1;  // sample indices of the chosen run
    int run_end = -1;
    double u_min = 0.0;
    double u_max = 0.0;
    double clearance = 0.0;
    int refined_points = 0;
};

struct CrossingVerdict {
    int i = 0;
    int j = 0;
    CrossingStatus status = CrossingStatus::Undetermined;
    // Crosses
    std::vector<FiberRecord> fibers;
    double min_clearance = 0.0;
    // Disjoint / Undetermined
    std::optional<double> min_distance;
    int failing_fiber = -1;
    std::string reason;
    // set when strip_separation_check was run
    std::optional<bool> strip_separated;
};

struct CrossingReport {
    std::vector<int> block_ids;
    std::vector<std::vector<CrossingVerdict>> verdicts;
    Matrix01 crossing_matrix;
    bool semi = false;
    SubshiftVerdict subshift;
};

// Images of a block's samples under a map, computed once and shared across targets.
struct BlockImages {
    const Block* block = nullptr;
    std::vector<double> fiber_v;           // n_v values
    std::vector<double> fiber_u;           // n_u values
    std::vector<MapResult> fibers;         // n_v * n_u, fiber-major
    std::vector<MapResult> extra;          // grid and remaining boundary samples
    int first_error_fiber() const;
};

BlockImages map_block(const PlanarMap& map, const Block& b, const SamplingConfig& cfg);

CrossingVerdict verify_crossing(const PlanarMap& map, const Block& bi, const Block& bj, const SamplingConfig& cfg);
CrossingVerdict verify_crossing(const PlanarMap& map, const BlockImages& imgs, const Block& bj,
                                const SamplingConfig& cfg);

CrossingVerdict verify_disjoint(const PlanarMap& map, const Block& bi, const Block& bj, const SamplingConfig& cfg);
CrossingVerdict verify_disjoint(const BlockImages& imgs, const Block& bj, const SamplingConfig& cfg);

// Throws InvalidBlocks.
void validate_blocks(const std::vector<Block>& blocks);

CrossingReport assemble_report(const PlanarMap& map, const std::vector<Block>& blocks, const SamplingConfig& cfg);

// Stronger sufficient test: all images of bi inside the u-extended strip of bj, with the images
// of B1 and B2 of bi on opposite sides beyond bj.
bool strip_separation_check(const PlanarMap& map, const Block& bi, const Block& bj, double kappa,
                            const SamplingConfig& cfg, std::string* diagnostics = nullptr);

nlohmann::json to_json(const CrossingVerdict& v);
nlohmann::json to_json(const CrossingReport& r);

}  // namespace horseshoe
