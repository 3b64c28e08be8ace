#include "horseshoe/server.hpp"

#include <httplib.h>

#include <algorithm>
#include <filesystem>
#include <numbers>

namespace horseshoe {

using nlohmann::json;

std::vector<ShippedScenario> load_registry(const std::string& dir) {
    std::vector<ShippedScenario> out;
    if (dir.empty() || !std::filesystem::is_directory(dir)) return out;
    std::vector<std::filesystem::path> files;
    for (auto& e : std::filesystem::directory_iterator(dir))
        if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (auto& f : files) out.push_back({f.filename().string(), load_scenario(f.string())});
    return out;
}

namespace {

ApiResponse error(int status, const std::string& kind, const std::string& msg) {
    return {status, {{"error", kind}, {"message", msg}}};
}

// Runs fn, mapping schema problems to 400 and invariant violations to 422. Pointer-located
// schema errors inside the "scenario" member are anchored to a line of the request body.
template <class Fn>
ApiResponse guarded(const std::string& body, const std::string& prefix, Fn&& fn) {
    try {
        return fn();
    } catch (const SchemaPathError& e) {
        std::string ptr = prefix + e.pointer;
        int line = json_pointer_line(body, ptr);
        auto r = error(400, "schema", "line " + std::to_string(line) + ": " + e.what() + " (at " + ptr + ")");
        r.body["pointer"] = ptr;
        r.body["line"] = line;
        return r;
    } catch (const json::exception& e) {
        return error(400, "schema", e.what());
    } catch (const SchemaError& e) {
        return error(400, "schema", e.what());
    } catch (const InvalidBlocks& e) {
        return error(422, "invariant", e.what());
    } catch (const InvariantError& e) {
        return error(422, "invariant", e.what());
    } catch (const Error& e) {
        return error(422, "invariant", e.what());
    }
}

json parse_body(const std::string& body) {
    try {
        return json::parse(body);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("malformed JSON body: ") + e.what());
    }
}

}  // namespace

ApiResponse Api::systems() const {
    json out = json::array();
    {
        auto spec = SystemSpec::duffing(0.25, 1.183, 1.0);
        auto ic = default_integrator(spec);
        out.push_back({{"kind", "DuffingForced"},
                       {"dimension", 2},
                       {"parameters", default_parameters(SystemKind::DuffingForced)},
                       {"poincare", {{"kind", "Stroboscopic"}, {"period", 2 * std::numbers::pi}, {"phase", 0.0}}},
                       {"integrator", {{"step", ic.step}, {"max_time", ic.max_time}, {"escape_radius", ic.escape_radius}}}});
    }
    {
        auto ic = default_integrator(SystemSpec::chen());
        Scenario s;
        s.system = SystemSpec::chen();
        s.poincare = PoincareSpec::chen_section();
        json sec = to_json(s)["poincare"];
        out.push_back({{"kind", "Chen"},
                       {"dimension", 3},
                       {"parameters", default_parameters(SystemKind::Chen)},
                       {"poincare", sec},
                       {"integrator", {{"step", ic.step}, {"max_time", ic.max_time}, {"escape_radius", ic.escape_radius}}}});
    }
    return {200, {{"systems", out}}};
}

ApiResponse Api::scenarios() const {
    json out = json::array();
    for (auto& r : registry_) out.push_back({{"file", r.file}, {"name", r.scenario.name}, {"scenario", to_json(r.scenario)}});
    return {200, {{"scenarios", out}}};
}

ApiResponse Api::map_points(const std::string& body) const {
    std::string prefix;
    return guarded(body, prefix, [&]() -> ApiResponse {
        json j = parse_body(body);
        if (!j.is_object()) throw SchemaError("request must be a JSON object");
        if (j.contains("scenario")) prefix = "/scenario";
        const json& frag = j.contains("scenario") ? j["scenario"] : j;
        Scenario s = scenario_from_json(frag, false);
        s.validate(false);
        if (!j.contains("points") || !j["points"].is_array()) throw SchemaError("missing array 'points'");
        std::vector<Vec2> pts;
        for (auto& p : j["points"]) {
            if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
                throw SchemaError("points must be [x, y] pairs");
            pts.push_back({p[0].get<double>(), p[1].get<double>()});
        }
        auto res = map_point_cloud(as_planar(s.make_map()), pts);
        json images = json::array();
        for (auto& r : res) {
            if (r.ok()) images.push_back({{"status", "ok"}, {"point", {r.point.x, r.point.y}}});
            else images.push_back({{"status", status_name(r.status)}, {"message", r.message}});
        }
        return {200, {{"images", images}}};
    });
}

ApiResponse Api::verify(const std::string& body) const {
    std::string prefix;
    return guarded(body, prefix, [&]() -> ApiResponse {
        json j = parse_body(body);
        if (!j.is_object()) throw SchemaError("request must be a JSON object");
        if (j.contains("scenario")) prefix = "/scenario";
        const json& sj = j.contains("scenario") ? j["scenario"] : j;
        Scenario s = scenario_from_json(sj, true);
        RunResult r = run_scenario(s);
        return {200, to_json(s, r)};
    });
}

ApiServer::ApiServer(std::vector<ShippedScenario> registry)
    : api_(std::move(registry)), server_(std::make_unique<httplib::Server>()) {
    auto reply = [](httplib::Response& res, const ApiResponse& r) {
        res.status = r.status;
        res.set_content(r.body.dump(2), "application/json");
    };
    server_->Get("/systems", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, api_.systems()); });
    server_->Get("/scenarios", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, api_.scenarios()); });
    server_->Post("/map-points", [this, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, api_.map_points(req.body));
    });
    server_->Post("/verify", [this, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, api_.verify(req.body));
    });
}

ApiServer::~ApiServer() { stop(); }

bool ApiServer::listen(const std::string& host, int port) { return server_->listen(host, port); }

int ApiServer::bind_any(const std::string& host) { return server_->bind_to_any_port(host); }

bool ApiServer::listen_after_bind() { return server_->listen_after_bind(); }

void ApiServer::stop() {
    if (server_) server_->stop();
}

bool ApiServer::running() const { return server_->is_running(); }

}  // namespace horseshoe
