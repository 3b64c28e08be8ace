#pragma once

#include "horseshoe/scenario.hpp"

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace httplib {
class Server;
}

namespace horseshoe {

struct ShippedScenario {
    std::string file;
    Scenario scenario;
};

// Loads every *.json scenario in a directory, sorted by file name.
std::vector<ShippedScenario> load_registry(const std::string& dir);

struct ApiResponse {
    int status = 200;
    nlohmann::json body;
};

// Stateless request handlers behind the HTTP API.
class Api {
public:
    explicit Api(std::vector<ShippedScenario> registry) : registry_(std::move(registry)) {}
    ApiResponse systems() const;
    ApiResponse scenarios() const;
    ApiResponse map_points(const std::string& body) const;
    ApiResponse verify(const std::string& body) const;

private:
    std::vector<ShippedScenario> registry_;
};

class ApiServer {
public:
    explicit ApiServer(std::vector<ShippedScenario> registry);
    ~ApiServer();
    // Blocks until stop().
    bool listen(const std::string& host, int port);
    // Binds to a free port, returns it; call listen_after_bind() to serve.
    int bind_any(const std::string& host);
    bool listen_after_bind();
    void stop();
    bool running() const;

private:
    Api api_;
    std::unique_ptr<httplib::Server> server_;
};

}  // namespace horseshoe
