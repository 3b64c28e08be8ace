#include "horseshoe/scenario.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

namespace horseshoe {

namespace {

using nlohmann::json;

using PathError = SchemaPathError;

const json& need(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object()) throw PathError(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) throw PathError(path, "missing key '" + key + "'");
    return *it;
}

double number(const json& j, const std::string& path) {
    if (!j.is_number()) throw PathError(path, "expected a number");
    return j.get<double>();
}

int integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) throw PathError(path, "expected an integer");
    return j.get<int>();
}

std::string string(const json& j, const std::string& path) {
    if (!j.is_string()) throw PathError(path, "expected a string");
    return j.get<std::string>();
}

Vec2 point(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2) throw PathError(path, "expected a point [x, y]");
    return {number(j[0], path + "/0"), number(j[1], path + "/1")};
}

const char* term_names[] = {"x", "y", "xy"};
const char* op_names[] = {"<", "<=", ">", ">="};

Constraint constraint_from(const json& j, const std::string& path) {
    Constraint c;
    std::string lhs = string(need(j, "lhs", path), path + "/lhs");
    std::string op = string(need(j, "op", path), path + "/op");
    int t = -1, o = -1;
    for (int k = 0; k < 3; ++k)
        if (lhs == term_names[k]) t = k;
    for (int k = 0; k < 4; ++k)
        if (op == op_names[k]) o = k;
    if (t < 0) throw PathError(path + "/lhs", "lhs must be one of x, y, xy");
    if (o < 0) throw PathError(path + "/op", "op must be one of <, <=, >, >=");
    c.lhs = static_cast<Constraint::Term>(t);
    c.op = static_cast<Constraint::Op>(o);
    c.rhs = number(need(j, "rhs", path), path + "/rhs");
    return c;
}

std::string pointer_escape(const std::string& key) {
    std::string out;
    for (char ch : key) {
        if (ch == '~') out += "~0";
        else if (ch == '/') out += "~1";
        else out += ch;
    }
    return out;
}

// Walks JSON text recording the line at which each value starts.
class LineIndexer {
public:
    explicit LineIndexer(const std::string& t) : s_(t) {}
    std::map<std::string, int> run() {
        ws();
        value("");
        return lines_;
    }

private:
    void ws() {
        while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) {
            if (s_[i_] == '\n') ++line_;
            ++i_;
        }
    }
    std::string str() {
        std::string out;
        ++i_;
        while (i_ < s_.size() && s_[i_] != '"') {
            if (s_[i_] == '\\' && i_ + 1 < s_.size()) ++i_;
            out += s_[i_++];
        }
        ++i_;
        return out;
    }
    void value(const std::string& path) {
        lines_.emplace(path, line_);
        if (i_ >= s_.size()) return;
        char c = s_[i_];
        if (c == '{') {
            ++i_;
            ws();
            while (i_ < s_.size() && s_[i_] != '}') {
                std::string key = str();
                ws();
                ++i_;  // ':'
                ws();
                value(path + "/" + pointer_escape(key));
                ws();
                if (i_ < s_.size() && s_[i_] == ',') ++i_;
                ws();
            }
            ++i_;
        } else if (c == '[') {
            ++i_;
            ws();
            int k = 0;
            while (i_ < s_.size() && s_[i_] != ']') {
                value(path + "/" + std::to_string(k++));
                ws();
                if (i_ < s_.size() && s_[i_] == ',') ++i_;
                ws();
            }
            ++i_;
        } else if (c == '"') {
            str();
        } else {
            while (i_ < s_.size() && !std::strchr(",]} \t\r\n", s_[i_])) ++i_;
        }
    }
    const std::string& s_;
    std::size_t i_ = 0;
    int line_ = 1;
    std::map<std::string, int> lines_;
};

std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

}  // namespace

int json_pointer_line(const std::string& text, const std::string& pointer) {
    auto lines = LineIndexer(text).run();
    // fall back to the closest enclosing value
    std::string p = pointer;
    for (;;) {
        auto it = lines.find(p);
        if (it != lines.end()) return it->second;
        if (p.empty()) return 0;
        p = p.substr(0, p.rfind('/'));
    }
}

void Scenario::validate(bool require_blocks) const {
    system.validate();
    poincare.validate();
    integrator.validate();
    sampling.validate();
    if (poincare.kind == PoincareSpec::Kind::Stroboscopic && system.dimension() != 2)
        throw InvariantError("stroboscopic maps need a planar system");
    if (poincare.kind == PoincareSpec::Kind::SectionReturn && system.dimension() != 3)
        throw InvariantError("section-return maps need a three-dimensional system");
    if (require_blocks) {
        if (blocks.size() < 2) throw InvalidBlocks("a scenario needs at least two blocks");
        validate_blocks(blocks);
    }
}

std::shared_ptr<const PoincareMap> Scenario::make_map() const {
    return std::make_shared<const PoincareMap>(system, poincare, integrator);
}

Scenario scenario_from_json(const json& j, bool require_blocks) {
    Scenario s;
    if (!j.is_object()) throw PathError("", "scenario must be a JSON object");
    if (j.contains("name")) s.name = string(j["name"], "/name");
    else if (require_blocks) throw PathError("", "missing key 'name'");
    if (j.contains("notes")) s.notes = string(j["notes"], "/notes");

    const json& sys = need(j, "system", "");
    s.system.kind = [&] {
        try {
            return kind_from_name(string(need(sys, "kind", "/system"), "/system/kind"));
        } catch (const PathError&) {
            throw;
        } catch (const SchemaError& e) {
            throw PathError("/system/kind", e.what());
        }
    }();
    if (s.system.kind == SystemKind::Custom) throw PathError("/system/kind", "Custom systems cannot be loaded from JSON");
    if (sys.contains("parameters")) {
        const json& ps = sys["parameters"];
        if (!ps.is_object()) throw PathError("/system/parameters", "expected an object");
        auto want = default_parameters(s.system.kind);
        for (auto& [k, v] : ps.items()) {
            std::string path = "/system/parameters/" + pointer_escape(k);
            if (!want.count(k)) throw PathError(path, "unexpected parameter '" + k + "'");
            s.system.parameters[k] = number(v, path);
        }
        for (auto& [k, v] : want)
            if (!s.system.parameters.count(k)) throw PathError("/system/parameters", "missing parameter '" + k + "'");
    } else {
        s.system.parameters = default_parameters(s.system.kind);
    }

    const json& pc = need(j, "poincare", "");
    std::string pk = string(need(pc, "kind", "/poincare"), "/poincare/kind");
    if (pk == "Stroboscopic") {
        s.poincare.kind = PoincareSpec::Kind::Stroboscopic;
        if (pc.contains("period")) {
            s.poincare.period = number(pc["period"], "/poincare/period");
        } else {
            double w = s.system.parameters.count("omega") ? s.system.parameters.at("omega") : 1.0;
            s.poincare.period = 2 * std::numbers::pi / w;
        }
        if (pc.contains("phase")) s.poincare.phase = number(pc["phase"], "/poincare/phase");
    } else if (pk == "SectionReturn") {
        s.poincare.kind = PoincareSpec::Kind::SectionReturn;
        s.poincare.plane_z = number(need(pc, "plane_z", "/poincare"), "/poincare/plane_z");
        std::string dir = pc.contains("direction") ? string(pc["direction"], "/poincare/direction") : "decreasing";
        if (dir == "decreasing") s.poincare.direction = PoincareSpec::Direction::Decreasing;
        else if (dir == "increasing") s.poincare.direction = PoincareSpec::Direction::Increasing;
        else throw PathError("/poincare/direction", "direction must be 'decreasing' or 'increasing'");
        if (pc.contains("constraints")) {
            const json& cs = pc["constraints"];
            if (!cs.is_array()) throw PathError("/poincare/constraints", "expected an array");
            for (std::size_t k = 0; k < cs.size(); ++k)
                s.poincare.constraints.push_back(constraint_from(cs[k], "/poincare/constraints/" + std::to_string(k)));
        }
        if (pc.contains("guard")) s.poincare.guard = number(pc["guard"], "/poincare/guard");
    } else {
        throw PathError("/poincare/kind", "kind must be 'Stroboscopic' or 'SectionReturn'");
    }

    s.integrator = default_integrator(s.system);
    if (j.contains("integrator")) {
        const json& ic = j["integrator"];
        if (!ic.is_object()) throw PathError("/integrator", "expected an object");
        if (ic.contains("step")) s.integrator.step = number(ic["step"], "/integrator/step");
        if (ic.contains("max_time")) s.integrator.max_time = number(ic["max_time"], "/integrator/max_time");
        if (ic.contains("escape_radius")) s.integrator.escape_radius = number(ic["escape_radius"], "/integrator/escape_radius");
    }

    if (j.contains("blocks")) {
        const json& bs = j["blocks"];
        if (!bs.is_array()) throw PathError("/blocks", "expected an array");
        for (std::size_t k = 0; k < bs.size(); ++k) {
            std::string path = "/blocks/" + std::to_string(k);
            Block b;
            b.id = integer(need(bs[k], "id", path), path + "/id");
            const json& cs = need(bs[k], "corners", path);
            if (!cs.is_array() || cs.size() != 4) throw PathError(path + "/corners", "expected four corners");
            for (int c = 0; c < 4; ++c) b.corners[c] = point(cs[c], path + "/corners/" + std::to_string(c));
            s.blocks.push_back(b);
        }
    } else if (require_blocks) {
        throw PathError("", "missing key 'blocks'");
    }

    if (j.contains("sampling")) {
        const json& sc = j["sampling"];
        if (!sc.is_object()) throw PathError("/sampling", "expected an object");
        auto& c = s.sampling;
        if (sc.contains("connections")) c.connections = integer(sc["connections"], "/sampling/connections");
        if (sc.contains("points_per_connection"))
            c.points_per_connection = integer(sc["points_per_connection"], "/sampling/points_per_connection");
        if (sc.contains("grid")) c.grid = integer(sc["grid"], "/sampling/grid");
        if (sc.contains("margin")) c.margin = number(sc["margin"], "/sampling/margin");
        if (sc.contains("chart_tolerance")) c.chart_tolerance = number(sc["chart_tolerance"], "/sampling/chart_tolerance");
        if (sc.contains("refine")) c.refine = integer(sc["refine"], "/sampling/refine");
    }
    if (j.contains("viewport")) {
        const json& v = j["viewport"];
        Viewport vp;
        vp.xmin = number(need(v, "xmin", "/viewport"), "/viewport/xmin");
        vp.xmax = number(need(v, "xmax", "/viewport"), "/viewport/xmax");
        vp.ymin = number(need(v, "ymin", "/viewport"), "/viewport/ymin");
        vp.ymax = number(need(v, "ymax", "/viewport"), "/viewport/ymax");
        s.viewport = vp;
    }
    if (j.contains("attractor")) {
        const json& a = j["attractor"];
        AttractorConfig ac;
        ac.seed = point(need(a, "seed", "/attractor"), "/attractor/seed");
        if (a.contains("transient")) ac.transient = integer(a["transient"], "/attractor/transient");
        if (a.contains("iterations")) ac.iterations = integer(a["iterations"], "/attractor/iterations");
        s.attractor = ac;
    }
    return s;
}

Scenario parse_scenario(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        for (std::size_t k = 0; k < std::min(e.byte, text.size()); ++k)
            if (text[k] == '\n') ++line;
        throw SchemaError("line " + std::to_string(line) + ": " + e.what());
    }
    try {
        return scenario_from_json(j);
    } catch (const PathError& e) {
        int line = json_pointer_line(text, e.pointer);
        throw SchemaError("line " + std::to_string(line) + ": " + e.what() +
                          (e.pointer.empty() ? "" : " (at " + e.pointer + ")"));
    }
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open scenario file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_scenario(ss.str());
    } catch (const SchemaError& e) {
        throw SchemaError(path + ":" + std::string(e.what()).substr(5));
    }
}

json to_json(const Scenario& s) {
    json j;
    j["name"] = s.name;
    if (!s.notes.empty()) j["notes"] = s.notes;
    j["system"] = {{"kind", kind_name(s.system.kind)}, {"parameters", s.system.parameters}};
    if (s.poincare.kind == PoincareSpec::Kind::Stroboscopic) {
        j["poincare"] = {{"kind", "Stroboscopic"}, {"period", s.poincare.period}, {"phase", s.poincare.phase}};
    } else {
        json cs = json::array();
        for (auto& c : s.poincare.constraints)
            cs.push_back({{"lhs", term_names[static_cast<int>(c.lhs)]}, {"op", op_names[static_cast<int>(c.op)]}, {"rhs", c.rhs}});
        j["poincare"] = {{"kind", "SectionReturn"},
                         {"plane_z", s.poincare.plane_z},
                         {"direction", s.poincare.direction == PoincareSpec::Direction::Decreasing ? "decreasing" : "increasing"},
                         {"constraints", cs},
                         {"guard", s.poincare.guard}};
    }
    j["integrator"] = {{"step", s.integrator.step}, {"max_time", s.integrator.max_time}, {"escape_radius", s.integrator.escape_radius}};
    json bs = json::array();
    for (auto& b : s.blocks) {
        json cs = json::array();
        for (auto& c : b.corners) cs.push_back({c.x, c.y});
        bs.push_back({{"id", b.id}, {"corners", cs}});
    }
    j["blocks"] = bs;
    const auto& c = s.sampling;
    j["sampling"] = {{"connections", c.connections}, {"points_per_connection", c.points_per_connection}, {"grid", c.grid},
                     {"margin", c.margin},           {"chart_tolerance", c.chart_tolerance},            {"refine", c.refine}};
    if (s.viewport)
        j["viewport"] = {{"xmin", s.viewport->xmin}, {"xmax", s.viewport->xmax}, {"ymin", s.viewport->ymin}, {"ymax", s.viewport->ymax}};
    if (s.attractor)
        j["attractor"] = {{"seed", {s.attractor->seed.x, s.attractor->seed.y}},
                          {"transient", s.attractor->transient},
                          {"iterations", s.attractor->iterations}};
    return j;
}

std::string config_hash(const Scenario& s) {
    std::string text = to_json(s).dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return hex64(h);
}

bool RunResult::any_undetermined() const {
    for (auto& row : report.verdicts)
        for (auto& v : row)
            if (v.status == CrossingStatus::Undetermined) return true;
    return false;
}

RunResult run_scenario(const Scenario& s) {
    using clock = std::chrono::steady_clock;
    s.validate();
    RunResult r;
    auto t0 = clock::now();
    auto map = s.make_map();
    r.report = assemble_report(as_planar(map), s.blocks, s.sampling);
    r.timings["verify_seconds"] = std::chrono::duration<double>(clock::now() - t0).count();
    r.config_hash = config_hash(s);
    return r;
}

json report_json(const Scenario& s, const RunResult& r) {
    json j = to_json(r.report);
    j["scenario"] = s.name;
    return j;
}

json to_json(const Scenario& s, const RunResult& r) {
    json j = report_json(s, r);
    j["timings"] = r.timings;
    j["provenance"] = {{"config_hash", r.config_hash}, {"tool_version", r.version}};
    return j;
}

std::vector<FiberImage> sample_fiber_images(const Scenario& s, int fibers_per_block, int points_per_fiber) {
    if (fibers_per_block < 2 || points_per_fiber < 2) throw OutOfRange("need at least two fibers and two points");
    auto map = as_planar(s.make_map());
    std::vector<FiberImage> out;
    std::vector<Vec2> pts;
    for (auto& b : s.blocks)
        for (int k = 0; k < fibers_per_block; ++k) {
            FiberImage f;
            f.block = b.id;
            f.fiber = k;
            f.v = static_cast<double>(k) / (fibers_per_block - 1);
            for (int l = 0; l < points_per_fiber; ++l) {
                f.u.push_back(static_cast<double>(l) / (points_per_fiber - 1));
                pts.push_back(b.chart(f.u.back(), f.v));
            }
            out.push_back(std::move(f));
        }
    auto res = map_point_cloud(map, pts);
    std::size_t n = 0;
    for (auto& f : out)
        for (std::size_t l = 0; l < f.u.size(); ++l) f.images.push_back(res[n++]);
    return out;
}

std::vector<MapResult> sample_attractor(const Scenario& s, const AttractorConfig& cfg) {
    auto map = s.make_map();
    std::vector<MapResult> out;
    MapResult cur;
    cur.point = cfg.seed;
    for (int k = 0; k < cfg.transient && cur.ok(); ++k) cur = map->apply(cur.point);
    for (int k = 0; k < cfg.iterations; ++k) {
        if (!cur.ok()) {
            out.push_back(cur);
            break;
        }
        cur = map->apply(cur.point);
        out.push_back(cur);
    }
    return out;
}

std::string blocks_csv(const Scenario& s) {
    std::ostringstream os;
    os.precision(17);
    os << "block,corner,x,y\n";
    for (auto& b : s.blocks)
        for (int c = 0; c < 4; ++c) os << b.id << ',' << c << ',' << b.corners[c].x << ',' << b.corners[c].y << '\n';
    return os.str();
}

std::string images_csv(const std::vector<FiberImage>& imgs) {
    std::ostringstream os;
    os.precision(17);
    os << "block,fiber,index,u,v,x,y,status\n";
    for (auto& f : imgs)
        for (std::size_t l = 0; l < f.u.size(); ++l) {
            const auto& r = f.images[l];
            os << f.block << ',' << f.fiber << ',' << l << ',' << f.u[l] << ',' << f.v << ',';
            if (r.ok()) os << r.point.x << ',' << r.point.y;
            else os << ',';
            os << ',' << status_name(r.status) << '\n';
        }
    return os.str();
}

std::string attractor_csv(const std::vector<MapResult>& pts) {
    std::ostringstream os;
    os.precision(17);
    os << "n,x,y,status\n";
    for (std::size_t k = 0; k < pts.size(); ++k) {
        os << k + 1 << ',';
        if (pts[k].ok()) os << pts[k].point.x << ',' << pts[k].point.y;
        else os << ',';
        os << ',' << status_name(pts[k].status) << '\n';
    }
    return os.str();
}

std::string render_svg(const Scenario& s, const std::vector<FiberImage>* images, const std::vector<MapResult>* attractor,
                       const CrossingReport* report) {
    Viewport vp;
    if (s.viewport) {
        vp = *s.viewport;
    } else if (!s.blocks.empty()) {
        vp = {1e300, -1e300, 1e300, -1e300};
        for (auto& b : s.blocks)
            for (auto& c : b.corners) {
                vp.xmin = std::min(vp.xmin, c.x);
                vp.xmax = std::max(vp.xmax, c.x);
                vp.ymin = std::min(vp.ymin, c.y);
                vp.ymax = std::max(vp.ymax, c.y);
            }
        double pad = 0.25 * std::max(vp.xmax - vp.xmin, vp.ymax - vp.ymin);
        vp = {vp.xmin - pad, vp.xmax + pad, vp.ymin - pad, vp.ymax + pad};
    }
    const double W = 800, H = 800;
    auto X = [&](double x) { return (x - vp.xmin) / (vp.xmax - vp.xmin) * W; };
    auto Y = [&](double y) { return H - (y - vp.ymin) / (vp.ymax - vp.ymin) * H; };
    std::ostringstream os;
    os.precision(6);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
       << ' ' << H << "\">\n";
    os << "<style>.block{fill:none;stroke:#222;stroke-width:1.5}.edge-b1{stroke:#d62728;stroke-width:3}"
          ".edge-b2{stroke:#1f77b4;stroke-width:3}.fiber-image{fill:none;stroke:#2ca02c;stroke-width:0.7}"
          ".attractor{fill:#555}</style>\n";
    os << "<g class=\"attractor-layer\">\n";
    if (attractor)
        for (auto& r : *attractor)
            if (r.ok()) os << "<circle class=\"attractor\" cx=\"" << X(r.point.x) << "\" cy=\"" << Y(r.point.y) << "\" r=\"0.8\"/>\n";
    os << "</g>\n<g class=\"image-layer\">\n";
    if (images)
        for (auto& f : *images) {
            // break polylines at failed points
            bool open = false;
            for (auto& r : f.images) {
                if (!r.ok()) {
                    if (open) os << "\"/>\n";
                    open = false;
                    continue;
                }
                if (!open) os << "<polyline class=\"fiber-image\" data-block=\"" << f.block << "\" points=\"";
                os << X(r.point.x) << ',' << Y(r.point.y) << ' ';
                open = true;
            }
            if (open) os << "\"/>\n";
        }
    os << "</g>\n<g class=\"block-layer\">\n";
    for (auto& b : s.blocks) {
        const auto& c = b.corners;
        os << "<polygon class=\"block\" data-block=\"" << b.id << "\" points=\"";
        for (auto& p : c) os << X(p.x) << ',' << Y(p.y) << ' ';
        os << "\"/>\n";
        os << "<line class=\"edge-b1\" x1=\"" << X(c[0].x) << "\" y1=\"" << Y(c[0].y) << "\" x2=\"" << X(c[3].x)
           << "\" y2=\"" << Y(c[3].y) << "\"/>\n";
        os << "<line class=\"edge-b2\" x1=\"" << X(c[1].x) << "\" y1=\"" << Y(c[1].y) << "\" x2=\"" << X(c[2].x)
           << "\" y2=\"" << Y(c[2].y) << "\"/>\n";
        Vec2 m = b.chart(0.5, 0.5);
        os << "<text x=\"" << X(m.x) << "\" y=\"" << Y(m.y) << "\" font-size=\"14\">B" << b.id << "</text>\n";
    }
    os << "</g>\n";
    if (report) {
        os << "<text x=\"10\" y=\"20\" font-size=\"14\">A = " << report->crossing_matrix.str() << ", h &gt;= "
           << report->subshift.entropy_lower_bound << (report->semi ? " (semi)" : "") << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace horseshoe
