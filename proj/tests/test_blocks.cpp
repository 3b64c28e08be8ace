#include "horseshoe/blocks.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace horseshoe;

namespace {

Block quad(int id, Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    Block k;
    k.id = id;
    k.corners = {a, b, c, d};
    return k;
}

Block unit_square(int id = 1) { return quad(id, {0, 0}, {1, 0}, {1, 1}, {0, 1}); }

Block shifted(const Block& b, double dx, double dy, int id) {
    Block o = b;
    o.id = id;
    for (auto& c : o.corners) c = {c.x + dx, c.y + dy};
    return o;
}

PlanarMap identity() {
    return [](Vec2 p) { return MapResult{MapStatus::Ok, p, {}}; };
}

PlanarMap translate(double dx, double dy) {
    return [=](Vec2 p) { return MapResult{MapStatus::Ok, {p.x + dx, p.y + dy}, {}}; };
}

// Linear horseshoe branch: stretch by 3 in x about x0, squeeze by 1/4 in y, then shift.
PlanarMap stretch(double x0, double dx, double dy) {
    return [=](Vec2 p) { return MapResult{MapStatus::Ok, {3 * (p.x - x0) + x0 + dx, 0.25 * p.y + dy}, {}}; };
}

SamplingConfig small() {
    SamplingConfig c;
    c.connections = 9;
    c.points_per_connection = 60;
    c.grid = 12;
    return c;
}

}  // namespace

TEST_CASE("chart corners and centre") {
    auto b = unit_square();
    CHECK(b.chart(0.5, 0.5) == Vec2{0.5, 0.5});
    auto k = quad(3, {0, 0}, {2, 0.2}, {2.5, 1.5}, {-0.3, 1});
    CHECK(chart_point(k, 0, 0) == k.corners[0]);
    CHECK(chart_point(k, 1, 0) == k.corners[1]);
    CHECK(chart_point(k, 1, 1) == k.corners[2]);
    CHECK(chart_point(k, 0, 1) == k.corners[3]);
    CHECK_THROWS_AS(k.chart(1.1, 0.5), OutOfRange);
    CHECK_THROWS_AS(k.chart(0.5, -0.1), OutOfRange);
    CHECK_NOTHROW(k.chart_unchecked(1.5, -1));
}

TEST_CASE("chart inversion round trip") {
    auto k = quad(1, {0, 0}, {2, 0.2}, {2.5, 1.5}, {-0.3, 1});
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(0, 1);
    for (int n = 0; n < 100; ++n) {
        double a = u(rng), c = u(rng);
        auto uv = locate(k, k.chart(a, c));
        REQUIRE(uv);
        CHECK(std::fabs(uv->u - a) <= 1e-10);
        CHECK(std::fabs(uv->v - c) <= 1e-10);
    }
}

TEST_CASE("locate") {
    auto k = quad(1, {0, 0}, {2, 0.2}, {2.5, 1.5}, {-0.3, 1});
    Vec2 g{0, 0};
    for (auto& c : k.corners) g = {g.x + c.x / 4, g.y + c.y / 4};
    auto uv = locate(k, g);
    REQUIRE(uv);
    CHECK(uv->u > 0);
    CHECK(uv->u < 1);
    CHECK(uv->v > 0);
    CHECK(uv->v < 1);
    CHECK_FALSE(locate(k, {-2.0, 0.5}));
    auto edge = locate(k, k.chart(0, 0.37));
    REQUIRE(edge);
    CHECK(edge->u <= 1e-9);
    CHECK(contains(k, g));
    CHECK_FALSE(contains(k, {5, 5}));
}

TEST_CASE("distances") {
    CHECK(segment_distance({0, 1}, {-1, 0}, {1, 0}) == doctest::Approx(1));
    CHECK(segment_distance({3, 4}, {0, 0}, {0, 0}) == doctest::Approx(5));
    auto b = unit_square();
    CHECK(distance_to_block(b, {0.5, 0.5}) == 0);
    CHECK(distance_to_block(b, {2, 0.5}) == doctest::Approx(1));
    CHECK(block_distance(b, shifted(b, 3, 0, 2)) == doctest::Approx(2));
    CHECK(block_distance(b, shifted(b, 0.5, 0.5, 2)) == 0);
}

TEST_CASE("block validation") {
    CHECK_NOTHROW(unit_square().validate());
    CHECK(unit_square().signed_area() == doctest::Approx(1));
    // clockwise
    CHECK_THROWS_AS(quad(1, {0, 0}, {0, 1}, {1, 1}, {1, 0}).validate(), InvalidBlocks);
    // non-convex
    CHECK_THROWS_AS(quad(1, {0, 0}, {2, 0}, {0.5, 0.5}, {0, 2}).validate(), InvalidBlocks);
    // three collinear corners
    CHECK_THROWS_AS(quad(1, {0, 0}, {1, 0}, {2, 0}, {0, 1}).validate(), InvalidBlocks);
    // self-intersecting
    CHECK_THROWS_AS(quad(1, {0, 0}, {1, 1}, {1, 0}, {0, 1}).validate(), InvalidBlocks);

    auto a = unit_square(1);
    CHECK_NOTHROW(validate_blocks({a, shifted(a, 2, 0, 2)}));
    CHECK_THROWS_AS(validate_blocks({a, shifted(a, 0.5, 0, 2)}), InvalidBlocks);
    CHECK_THROWS_AS(validate_blocks({a, shifted(a, 1, 0, 2)}), InvalidBlocks);
    CHECK_THROWS_AS(validate_blocks({a, shifted(a, 2, 0, 1)}), InvalidBlocks);
}

TEST_CASE("sampling config") {
    SamplingConfig c;
    CHECK_NOTHROW(c.validate());
    auto d = c.doubled();
    CHECK(d.connections == 82);
    CHECK(d.points_per_connection == 800);
    CHECK(d.grid == 120);
    CHECK(d.margin == c.margin);
    c.connections = 1;
    CHECK_THROWS(c.validate());
    c = {};
    c.margin = 0;
    CHECK_THROWS(c.validate());
    c = {};
    c.chart_tolerance = 0.2;
    CHECK_THROWS(c.validate());
}

TEST_CASE("identity on a block is a crossing and not disjoint") {
    auto b = unit_square();
    auto cfg = small();
    auto v = verify_crossing(identity(), b, b, cfg);
    CHECK(v.status == CrossingStatus::Crosses);
    CHECK(v.fibers.size() == 9);
    auto d = verify_disjoint(identity(), b, b, cfg);
    CHECK(d.status != CrossingStatus::Disjoint);
    REQUIRE(d.min_distance);
    CHECK(*d.min_distance == 0);
    CHECK_FALSE(strip_separation_check(identity(), b, b, 1.0, cfg));
}

TEST_CASE("translation far away is disjoint at the constructed distance") {
    auto b = unit_square(1);
    auto c = shifted(b, 3, 0, 2);
    auto cfg = small();
    auto map = translate(10, 0);
    CHECK(verify_crossing(map, b, c, cfg).status != CrossingStatus::Crosses);
    auto d = verify_disjoint(map, b, c, cfg);
    CHECK(d.status == CrossingStatus::Disjoint);
    REQUIRE(d.min_distance);
    CHECK(*d.min_distance == doctest::Approx(6));
}

TEST_CASE("verdict is undetermined when the image meets the target without crossing") {
    auto b = unit_square();
    auto cfg = small();
    // half-way shift: images reach the target but only cover u in [0.5, 1]
    auto v = verify_crossing(translate(0.5, 0), b, b, cfg);
    CHECK(v.status == CrossingStatus::Undetermined);
    CHECK(v.failing_fiber == 0);
    CHECK_FALSE(v.reason.empty());
    CHECK(verify_disjoint(translate(0.5, 0), b, b, cfg).status == CrossingStatus::Undetermined);
}

TEST_CASE("integration errors never give a crossing") {
    auto b = unit_square();
    PlanarMap bad = [](Vec2 p) {
        if (p.x > 0.5 && p.y > 0.5) return MapResult{MapStatus::Escaped, {}, "escaped"};
        return MapResult{MapStatus::Ok, p, {}};
    };
    auto v = verify_crossing(bad, b, b, small());
    CHECK(v.status == CrossingStatus::Undetermined);
    CHECK(v.reason.find("integration error") != std::string::npos);
    CHECK(verify_disjoint(bad, b, b, small()).status == CrossingStatus::Undetermined);
}

TEST_CASE("linear horseshoe: strip separation and full two-shift") {
    // two thin blocks side by side; the map stretches each across both
    auto b1 = quad(1, {0, 0}, {1, 0}, {1, 1}, {0, 1});
    auto b2 = quad(2, {2, 0}, {3, 0}, {3, 1}, {2, 1});
    PlanarMap f = [](Vec2 p) {
        // x in [0,1] -> [-0.5, 3.5]; x in [2,3] -> [3.5, -0.5], folded
        double x = p.x <= 1.5 ? -0.5 + 4 * p.x : 3.5 - 4 * (p.x - 2);
        return MapResult{MapStatus::Ok, {x, 0.2 + 0.5 * p.y}, {}};
    };
    auto cfg = small();
    auto rep = assemble_report(f, {b1, b2}, cfg);
    CHECK(rep.crossing_matrix == Matrix01{{1, 1}, {1, 1}});
    CHECK(rep.subshift.entropy_lower_bound == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK_FALSE(rep.semi);

    auto g = stretch(0.5, 0, 0.3);
    auto strip = quad(5, {-0.2, 0}, {1.2, 0}, {1.2, 1}, {-0.2, 1});
    auto target = quad(6, {0.3, 0}, {0.7, 0}, {0.7, 1}, {0.3, 1});
    CHECK(strip_separation_check(g, strip, target, 5.0, cfg));
    CHECK(verify_crossing(g, strip, target, cfg).status == CrossingStatus::Crosses);
    std::string diag;
    CHECK_FALSE(strip_separation_check(g, strip, target, 1.0, cfg, &diag));
    CHECK_THROWS_AS(strip_separation_check(g, strip, target, 0.5, cfg), OutOfRange);
    CHECK_FALSE(diag.empty());
}

TEST_CASE("semi-horseshoe report") {
    // b1 crosses both, b2 crosses b1 only and its image misses itself
    auto b1 = quad(1, {0, 0}, {1, 0}, {1, 1}, {0, 1});
    auto b2 = quad(2, {2, 0}, {3, 0}, {3, 1}, {2, 1});
    PlanarMap f = [](Vec2 p) {
        if (p.x <= 1.5) return MapResult{MapStatus::Ok, {-0.5 + 4 * p.x, 0.2 + 0.5 * p.y}, {}};
        return MapResult{MapStatus::Ok, {-0.5 + 2 * (p.x - 2), 0.2 + 0.5 * p.y}, {}};
    };
    auto rep = assemble_report(f, {b1, b2}, small());
    CHECK(rep.crossing_matrix == Matrix01{{1, 1}, {1, 0}});
    CHECK(rep.verdicts[1][1].status == CrossingStatus::Disjoint);
    CHECK(rep.semi);
    CHECK(rep.subshift.entropy_lower_bound == doctest::Approx(std::log((1 + std::sqrt(5.0)) / 2)));
    for (auto& row : rep.verdicts)
        for (auto& v : row) CHECK((rep.crossing_matrix(v.i - 1, v.j - 1) == 1) == (v.status == CrossingStatus::Crosses));

    // relabeling the blocks conjugates the matrix
    auto swapped = assemble_report(f, {b2, b1}, small());
    CHECK(swapped.crossing_matrix == Matrix01{{0, 1}, {1, 1}});
    CHECK(swapped.block_ids == std::vector<int>{2, 1});

    auto j = to_json(rep);
    CHECK(j["crossing_matrix"] == nlohmann::json::parse("[[1,1],[1,0]]"));
    CHECK(j["semi"] == true);
    CHECK(j["subshift"].contains("entropy_lower_bound"));
    CHECK(j["verdicts"][1][1]["status"] == "Disjoint");
}

TEST_CASE("report needs two valid blocks") {
    CHECK_THROWS_AS(assemble_report(identity(), {unit_square()}, small()), InvalidBlocks);
    auto a = unit_square(1);
    CHECK_THROWS_AS(assemble_report(identity(), {a, shifted(a, 0.2, 0.2, 2)}, small()), InvalidBlocks);
}

TEST_CASE("sampling is deterministic and images are shared across targets") {
    auto b = unit_square();
    auto map = stretch(0.5, 0, 0.3);
    auto imgs = map_block(map, b, small());
    CHECK(imgs.fibers.size() == 9 * 60);
    CHECK(imgs.first_error_fiber() == -1);
    auto target = quad(6, {0.3, 0}, {0.7, 0}, {0.7, 1}, {0.3, 1});
    auto a = verify_crossing(map, imgs, target, small());
    auto c = verify_crossing(map, b, target, small());
    CHECK(to_json(a).dump() == to_json(c).dump());
}
