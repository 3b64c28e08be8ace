#include "horseshoe/blocks.hpp"
#include "horseshoe/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace horseshoe {

namespace {

inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline Vec2 sub(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

double scale_of(const Block& b) {
    double s = 0.0;
    for (int k = 0; k < 4; ++k) {
        Vec2 d = sub(b.corners[(k + 1) % 4], b.corners[k]);
        s = std::max(s, std::hypot(d.x, d.y));
    }
    return s;
}

bool inside_closed(const Block& b, Vec2 p, double slack) {
    for (int k = 0; k < 4; ++k) {
        Vec2 a = b.corners[k], c = b.corners[(k + 1) % 4];
        Vec2 e = sub(c, a);
        double len = std::hypot(e.x, e.y);
        if (cross(e, sub(p, a)) < -slack * len) return false;
    }
    return true;
}

int orient(Vec2 a, Vec2 b, Vec2 c) {
    double v = cross(sub(b, a), sub(c, a));
    return (v > 0) - (v < 0);
}

bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
           p.y <= std::max(a.y, b.y);
}

bool segments_intersect(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
    int o1 = orient(p1, p2, q1), o2 = orient(p1, p2, q2), o3 = orient(q1, q2, p1), o4 = orient(q1, q2, p2);
    if (o1 != o2 && o3 != o4) return true;
    return (o1 == 0 && on_segment(p1, p2, q1)) || (o2 == 0 && on_segment(p1, p2, q2)) ||
           (o3 == 0 && on_segment(q1, q2, p1)) || (o4 == 0 && on_segment(q1, q2, p2));
}

double side_clearance(const Block& b, Vec2 p) {
    return std::min(segment_distance(p, b.corners[0], b.corners[1]), segment_distance(p, b.corners[3], b.corners[2]));
}

// Jacobian determinant of the bilinear chart; affine in u and v.
double chart_jacobian(const Block& b, double u, double v) {
    const auto& c = b.corners;
    Vec2 du{(1 - v) * (c[1].x - c[0].x) + v * (c[2].x - c[3].x), (1 - v) * (c[1].y - c[0].y) + v * (c[2].y - c[3].y)};
    Vec2 dv{(1 - u) * (c[3].x - c[0].x) + u * (c[2].x - c[1].x), (1 - u) * (c[3].y - c[0].y) + u * (c[2].y - c[1].y)};
    return cross(du, dv);
}

}  // namespace

Vec2 Block::chart_unchecked(double u, double v) const {
    const auto& c = corners;
    double w0 = (1 - u) * (1 - v), w1 = u * (1 - v), w2 = u * v, w3 = (1 - u) * v;
    return {w0 * c[0].x + w1 * c[1].x + w2 * c[2].x + w3 * c[3].x, w0 * c[0].y + w1 * c[1].y + w2 * c[2].y + w3 * c[3].y};
}

Vec2 Block::chart(double u, double v) const {
    if (!(u >= 0 && u <= 1 && v >= 0 && v <= 1)) throw OutOfRange("chart coordinates must lie in [0,1]^2");
    return chart_unchecked(u, v);
}

Vec2 chart_point(const Block& b, double u, double v) { return b.chart(u, v); }

double Block::signed_area() const {
    double a = 0.0;
    for (int k = 0; k < 4; ++k) a += cross(corners[k], corners[(k + 1) % 4]);
    return 0.5 * a;
}

void Block::validate() const {
    for (auto& c : corners)
        if (!std::isfinite(c.x) || !std::isfinite(c.y)) throw InvalidBlocks("block " + std::to_string(id) + ": non-finite corner");
    double s = scale_of(*this);
    if (!(s > 0)) throw InvalidBlocks("block " + std::to_string(id) + ": degenerate");
    for (int k = 0; k < 4; ++k) {
        Vec2 a = corners[k], b = corners[(k + 1) % 4], c = corners[(k + 2) % 4];
        if (!(cross(sub(b, a), sub(c, b)) > 1e-12 * s * s))
            throw InvalidBlocks("block " + std::to_string(id) +
                                ": corners must form a strictly convex counter-clockwise quadrilateral");
    }
    if (!(signed_area() > 0)) throw InvalidBlocks("block " + std::to_string(id) + ": non-positive area");
}

std::optional<ChartCoords> invert_chart(const Block& b, Vec2 p) {
    double u = 0.5, v = 0.5;
    const auto& c = b.corners;
    double s = scale_of(b);
    for (int it = 0; it < 60; ++it) {
        Vec2 q = b.chart_unchecked(u, v);
        Vec2 f = sub(q, p);
        Vec2 du{(1 - v) * (c[1].x - c[0].x) + v * (c[2].x - c[3].x), (1 - v) * (c[1].y - c[0].y) + v * (c[2].y - c[3].y)};
        Vec2 dv{(1 - u) * (c[3].x - c[0].x) + u * (c[2].x - c[1].x), (1 - u) * (c[3].y - c[0].y) + u * (c[2].y - c[1].y)};
        double det = cross(du, dv);
        if (det == 0 || !std::isfinite(det)) return std::nullopt;
        double su = (dv.y * f.x - dv.x * f.y) / det;
        double sv = (-du.y * f.x + du.x * f.y) / det;
        u -= su;
        v -= sv;
        if (!std::isfinite(u) || !std::isfinite(v)) return std::nullopt;
        if (std::fabs(su) + std::fabs(sv) <= 1e-12 && std::hypot(f.x, f.y) <= 1e-12 * std::max(1.0, s)) break;
        if (std::fabs(su) + std::fabs(sv) <= 1e-15) break;
    }
    Vec2 f = sub(b.chart_unchecked(u, v), p);
    if (std::hypot(f.x, f.y) > 1e-9 * std::max(1.0, s)) return std::nullopt;
    return ChartCoords{u, v};
}

std::optional<ChartCoords> locate(const Block& b, Vec2 p) {
    double s = scale_of(b);
    if (!inside_closed(b, p, 1e-12 * s)) return std::nullopt;
    auto uv = invert_chart(b, p);
    if (!uv) return std::nullopt;
    uv->u = std::clamp(uv->u, 0.0, 1.0);
    uv->v = std::clamp(uv->v, 0.0, 1.0);
    return uv;
}

double segment_distance(Vec2 p, Vec2 a, Vec2 b) {
    Vec2 d = sub(b, a);
    double dd = dot(d, d);
    double t = dd > 0 ? std::clamp(dot(sub(p, a), d) / dd, 0.0, 1.0) : 0.0;
    return std::hypot(p.x - (a.x + t * d.x), p.y - (a.y + t * d.y));
}

bool contains(const Block& b, Vec2 p) { return inside_closed(b, p, 0.0); }

double distance_to_block(const Block& b, Vec2 p) {
    if (contains(b, p)) return 0.0;
    double d = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 4; ++k) d = std::min(d, segment_distance(p, b.corners[k], b.corners[(k + 1) % 4]));
    return d;
}

double block_distance(const Block& a, const Block& b) {
    for (int k = 0; k < 4; ++k) {
        if (contains(a, b.corners[k]) || contains(b, a.corners[k])) return 0.0;
        for (int l = 0; l < 4; ++l)
            if (segments_intersect(a.corners[k], a.corners[(k + 1) % 4], b.corners[l], b.corners[(l + 1) % 4]))
                return 0.0;
    }
    double d = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 4; ++k) {
        d = std::min(d, distance_to_block(b, a.corners[k]));
        d = std::min(d, distance_to_block(a, b.corners[k]));
    }
    return d;
}

void SamplingConfig::validate() const {
    if (connections < 2 || points_per_connection < 2 || grid < 2)
        throw InvariantError("sampling counts must be >= 2");
    if (!(margin > 0)) throw InvariantError("sampling margin must be positive");
    if (!(chart_tolerance > 0 && chart_tolerance <= 0.1)) throw InvariantError("chart_tolerance must lie in (0, 0.1]");
    if (refine < 0) throw InvariantError("refine must be >= 0");
}

SamplingConfig SamplingConfig::doubled() const {
    SamplingConfig c = *this;
    c.connections *= 2;
    c.points_per_connection *= 2;
    c.grid *= 2;
    c.refine *= 2;
    return c;
}

std::string status_name(CrossingStatus s) {
    switch (s) {
        case CrossingStatus::Crosses: return "Crosses";
        case CrossingStatus::Disjoint: return "Disjoint";
        case CrossingStatus::Undetermined: return "Undetermined";
    }
    return "?";
}

int BlockImages::first_error_fiber() const {
    int nu = static_cast<int>(fiber_u.size());
    for (std::size_t k = 0; k < fibers.size(); ++k)
        if (!fibers[k].ok()) return static_cast<int>(k) / nu;
    return -1;
}

BlockImages map_block(const PlanarMap& map, const Block& b, const SamplingConfig& cfg) {
    cfg.validate();
    BlockImages out;
    out.block = &b;
    int nv = cfg.connections, nu = cfg.points_per_connection, ng = cfg.grid;
    // interior fibers: a fiber on a side edge of bi has zero clearance from bj = bi under the identity
    for (int k = 0; k < nv; ++k) out.fiber_v.push_back((k + 0.5) / nv);
    for (int l = 0; l < nu; ++l) out.fiber_u.push_back(static_cast<double>(l) / (nu - 1));
    std::vector<Vec2> pts;
    pts.reserve(static_cast<std::size_t>(nv) * nu + ng * ng + 4 * nu);
    for (double v : out.fiber_v)
        for (double u : out.fiber_u) pts.push_back(b.chart(u, v));
    for (int a = 0; a < ng; ++a)
        for (int c = 0; c < ng; ++c) pts.push_back(b.chart(static_cast<double>(a) / (ng - 1), static_cast<double>(c) / (ng - 1)));
    // side edges, then the designated edges last
    for (double t : out.fiber_u) pts.push_back(b.chart(t, 0.0));
    for (double t : out.fiber_u) pts.push_back(b.chart(t, 1.0));
    for (double t : out.fiber_u) pts.push_back(b.chart(0.0, t));
    for (double t : out.fiber_u) pts.push_back(b.chart(1.0, t));
    auto res = map_point_cloud(map, pts);
    std::size_t nf = static_cast<std::size_t>(nv) * nu;
    out.fibers.assign(res.begin(), res.begin() + static_cast<long>(nf));
    out.extra.assign(res.begin() + static_cast<long>(nf), res.end());
    return out;
}

namespace {

struct RunState {
    double u_min = std::numeric_limits<double>::infinity();
    double u_max = -std::numeric_limits<double>::infinity();
    double clearance = std::numeric_limits<double>::infinity();
    int refined = 0;
    void add(double u, double c) {
        u_min = std::min(u_min, u);
        u_max = std::max(u_max, u);
        clearance = std::min(clearance, c);
    }
};

}  // namespace

CrossingVerdict verify_crossing(const PlanarMap& map, const BlockImages& imgs, const Block& bj,
                                const SamplingConfig& cfg) {
    cfg.validate();
    CrossingVerdict out;
    out.i = imgs.block->id;
    out.j = bj.id;
    const Block& bi = *imgs.block;
    int nu = static_cast<int>(imgs.fiber_u.size());
    int nv = static_cast<int>(imgs.fiber_v.size());
    double delta = cfg.chart_tolerance, eps = cfg.margin;
    out.min_clearance = std::numeric_limits<double>::infinity();

    std::vector<std::optional<ChartCoords>> loc(nu);
    std::vector<double> clear(nu);
    for (int k = 0; k < nv; ++k) {
        const MapResult* row = &imgs.fibers[static_cast<std::size_t>(k) * nu];
        for (int l = 0; l < nu; ++l) {
            if (!row[l].ok()) {
                out.status = CrossingStatus::Undetermined;
                out.failing_fiber = k;
                out.reason = "integration error on fiber " + std::to_string(k) + ": " + row[l].message;
                return out;
            }
            loc[l] = locate(bj, row[l].point);
            clear[l] = loc[l] ? side_clearance(bj, row[l].point) : 0.0;
        }
        double v = imgs.fiber_v[k];
        FiberRecord rec;
        rec.fiber = k;
        std::string fail_reason = "no sampled run inside the target";
        for (int a = 0; a < nu;) {
            if (!loc[a]) {
                ++a;
                continue;
            }
            int b = a;
            while (b + 1 < nu && loc[b + 1]) ++b;
            RunState run;
            for (int l = a; l <= b; ++l) run.add(loc[l]->u, clear[l]);
            bool reach = run.u_min <= delta && run.u_max >= 1 - delta;
            if (run.clearance >= eps && !reach) {
                // refine where the run meets the outside samples
                for (int side = 0; side < 2; ++side) {
                    int in = side == 0 ? a : b, outi = side == 0 ? a - 1 : b + 1;
                    if (outi < 0 || outi >= nu) continue;
                    double s_in = imgs.fiber_u[in], s_out = imgs.fiber_u[outi];
                    for (int it = 0; it < cfg.refine && std::fabs(s_in - s_out) > 1e-15; ++it) {
                        double mid = 0.5 * (s_in + s_out);
                        MapResult r = map(bi.chart(mid, v));
                        if (!r.ok()) {
                            out.status = CrossingStatus::Undetermined;
                            out.failing_fiber = k;
                            out.reason = "integration error on fiber " + std::to_string(k) + ": " + r.message;
                            return out;
                        }
                        auto uv = locate(bj, r.point);
                        if (uv) {
                            run.add(uv->u, side_clearance(bj, r.point));
                            ++run.refined;
                            s_in = mid;
                        } else {
                            s_out = mid;
                        }
                    }
                }
                reach = run.u_min <= delta && run.u_max >= 1 - delta;
            }
            bool pass = reach && run.clearance >= eps;
            if (pass || rec.run_begin < 0 || run.u_max - run.u_min > rec.u_max - rec.u_min) {
                rec.run_begin = a;
                rec.run_end = b;
                rec.u_min = run.u_min;
                rec.u_max = run.u_max;
                rec.clearance = run.clearance;
                rec.refined_points = run.refined;
            }
            if (pass) {
                rec.passed = true;
                break;
            }
            std::ostringstream os;
            os << "best run reaches u in [" << rec.u_min << ", " << rec.u_max << "] with side clearance "
               << rec.clearance;
            fail_reason = os.str();
            a = b + 1;
        }
        out.fibers.push_back(rec);
        if (!rec.passed) {
            out.status = CrossingStatus::Undetermined;
            out.failing_fiber = k;
            out.reason = "fiber " + std::to_string(k) + ": " + fail_reason;
            return out;
        }
        out.min_clearance = std::min(out.min_clearance, rec.clearance);
    }
    out.status = CrossingStatus::Crosses;
    return out;
}

CrossingVerdict verify_crossing(const PlanarMap& map, const Block& bi, const Block& bj, const SamplingConfig& cfg) {
    auto imgs = map_block(map, bi, cfg);
    return verify_crossing(map, imgs, bj, cfg);
}

CrossingVerdict verify_disjoint(const BlockImages& imgs, const Block& bj, const SamplingConfig& cfg) {
    cfg.validate();
    CrossingVerdict out;
    out.i = imgs.block->id;
    out.j = bj.id;
    double d = std::numeric_limits<double>::infinity();
    for (const auto* set : {&imgs.fibers, &imgs.extra}) {
        for (const auto& r : *set) {
            if (!r.ok()) {
                out.status = CrossingStatus::Undetermined;
                out.reason = "integration error: " + r.message;
                return out;
            }
            d = std::min(d, distance_to_block(bj, r.point));
        }
    }
    out.min_distance = d;
    if (d >= cfg.margin) {
        out.status = CrossingStatus::Disjoint;
    } else {
        out.status = CrossingStatus::Undetermined;
        std::ostringstream os;
        os << "images come within " << d << " of the target";
        out.reason = os.str();
    }
    return out;
}

CrossingVerdict verify_disjoint(const PlanarMap& map, const Block& bi, const Block& bj, const SamplingConfig& cfg) {
    return verify_disjoint(map_block(map, bi, cfg), bj, cfg);
}

void validate_blocks(const std::vector<Block>& blocks) {
    for (auto& b : blocks) b.validate();
    for (std::size_t a = 0; a < blocks.size(); ++a)
        for (std::size_t c = a + 1; c < blocks.size(); ++c) {
            if (blocks[a].id == blocks[c].id) throw InvalidBlocks("duplicate block id " + std::to_string(blocks[a].id));
            if (!(block_distance(blocks[a], blocks[c]) > 0))
                throw InvalidBlocks("blocks " + std::to_string(blocks[a].id) + " and " + std::to_string(blocks[c].id) +
                                    " overlap or touch");
        }
}

CrossingReport assemble_report(const PlanarMap& map, const std::vector<Block>& blocks, const SamplingConfig& cfg) {
    if (blocks.size() < 2) throw InvalidBlocks("at least two blocks are required");
    validate_blocks(blocks);
    cfg.validate();
    int m = static_cast<int>(blocks.size());
    std::vector<BlockImages> imgs;
    for (auto& b : blocks) imgs.push_back(map_block(map, b, cfg));

    CrossingReport rep;
    rep.crossing_matrix = Matrix01(m);
    rep.verdicts.assign(m, std::vector<CrossingVerdict>(m));
    for (auto& b : blocks) rep.block_ids.push_back(b.id);
    bool any_disjoint = false;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            CrossingVerdict c = verify_crossing(map, imgs[i], blocks[j], cfg);
            if (c.status != CrossingStatus::Crosses) {
                CrossingVerdict d = verify_disjoint(imgs[i], blocks[j], cfg);
                if (d.status == CrossingStatus::Disjoint) {
                    c = d;
                } else {
                    c.min_distance = d.min_distance;
                    if (c.reason.empty()) c.reason = d.reason;
                }
            }
            if (c.status == CrossingStatus::Crosses) rep.crossing_matrix.set(i, j, 1);
            if (c.status == CrossingStatus::Disjoint) any_disjoint = true;
            rep.verdicts[i][j] = std::move(c);
        }
    rep.subshift = classify(rep.crossing_matrix);
    rep.semi = any_disjoint && rep.subshift.chaotic.value_or(false);
    return rep;
}

bool strip_separation_check(const PlanarMap& map, const Block& bi, const Block& bj, double kappa,
                            const SamplingConfig& cfg, std::string* diagnostics) {
    auto note = [&](const std::string& s) {
        if (diagnostics) *diagnostics = s;
        return false;
    };
    if (!(kappa >= 1)) throw OutOfRange("kappa must be >= 1");
    for (double u : {-kappa, 1 + kappa})
        for (double v : {0.0, 1.0})
            if (!(chart_jacobian(bj, u, v) > 0)) return note("extended chart of the target folds");
    auto imgs = map_block(map, bi, cfg);
    Block strip_core = bj;
    auto in_strip = [&](Vec2 p) -> std::optional<ChartCoords> {
        auto uv = invert_chart(bj, p);
        if (!uv || uv->v < 0 || uv->v > 1 || uv->u < -kappa || uv->u > 1 + kappa) return std::nullopt;
        return uv;
    };
    for (const auto* set : {&imgs.fibers, &imgs.extra})
        for (const auto& r : *set) {
            if (!r.ok()) return note("integration error: " + r.message);
            if (!in_strip(r.point)) return note("an image leaves the extended strip");
        }
    // designated-edge samples sit at the end of extra: first n_u for B1 then n_u for B2
    int nu = cfg.points_per_connection;
    std::size_t base = imgs.extra.size() - 2 * static_cast<std::size_t>(nu);
    int side[2] = {0, 0};  // -1: u < 0 component, +1: u > 1 component
    for (int e = 0; e < 2; ++e) {
        for (int l = 0; l < nu; ++l) {
            Vec2 p = imgs.extra[base + e * nu + l].point;
            auto uv = in_strip(p);
            int s = uv->u < 0 ? -1 : uv->u > 1 ? 1 : 0;
            if (s == 0 || distance_to_block(strip_core, p) < cfg.margin)
                return note("an image of a designated edge meets the middle of the strip");
            if (side[e] == 0) side[e] = s;
            if (side[e] != s) return note("an image of a designated edge spans both ends of the strip");
        }
    }
    if (side[0] == side[1]) return note("both designated edges map to the same end of the strip");
    if (diagnostics) diagnostics->clear();
    return true;
}

nlohmann::json to_json(const CrossingVerdict& v) {
    nlohmann::json j;
    j["pair"] = {v.i, v.j};
    j["status"] = status_name(v.status);
    nlohmann::json ev = nlohmann::json::object();
    if (v.status == CrossingStatus::Crosses) {
        ev["min_clearance"] = v.min_clearance;
        nlohmann::json fibers = nlohmann::json::array();
        for (auto& f : v.fibers)
            fibers.push_back({{"fiber", f.fiber},
                              {"run", {f.run_begin, f.run_end}},
                              {"u_min", f.u_min},
                              {"u_max", f.u_max},
                              {"clearance", f.clearance},
                              {"refined_points", f.refined_points}});
        ev["connections"] = fibers;
    } else {
        if (v.min_distance) ev["min_distance"] = *v.min_distance;
        if (v.status == CrossingStatus::Undetermined) {
            ev["failing_connection"] = v.failing_fiber;
            ev["reason"] = v.reason;
        }
    }
    if (v.strip_separated) ev["strip_separated"] = *v.strip_separated;
    j["evidence"] = ev;
    return j;
}

nlohmann::json to_json(const CrossingReport& r) {
    nlohmann::json j;
    j["blocks"] = r.block_ids;
    j["crossing_matrix"] = to_json(r.crossing_matrix);
    nlohmann::json vs = nlohmann::json::array();
    for (auto& row : r.verdicts) {
        nlohmann::json jr = nlohmann::json::array();
        for (auto& v : row) jr.push_back(to_json(v));
        vs.push_back(jr);
    }
    j["verdicts"] = vs;
    j["semi"] = r.semi;
    j["subshift"] = to_json(r.subshift);
    return j;
}

}  // namespace horseshoe
