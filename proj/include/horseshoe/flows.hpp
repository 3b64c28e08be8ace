#pragma once

#include "horseshoe/errors.hpp"

#include <array>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace horseshoe {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Vec2&) const = default;
};

struct Escaped : Error {
    Escaped(double t, double norm)
        : Error("orbit escaped (|state| = " + std::to_string(norm) + " at t = " + std::to_string(t) + ")"),
          time(t) {}
    double time;
};
struct NoReturn : Error {
    using Error::Error;
};
struct OffSection : Error {
    using Error::Error;
};

enum class SystemKind { DuffingForced, Chen, Custom };

struct SystemSpec {
    SystemKind kind = SystemKind::DuffingForced;
    std::map<std::string, double> parameters;
    // Custom systems only: state dimension and right-hand side f(t, state, out).
    int custom_dimension = 0;
    std::function<void(double, const double*, double*)> custom_rhs;

    static SystemSpec duffing(double delta, double gamma, double omega = 1.0);
    static SystemSpec chen();
    static SystemSpec custom(int dimension, std::function<void(double, const double*, double*)> rhs);

    int dimension() const;
    double param(const std::string& key) const;
    // Throws InvariantError / SchemaError.
    void validate() const;
};

// Parameter keys each kind declares, with default values.
std::map<std::string, double> default_parameters(SystemKind kind);
std::string kind_name(SystemKind kind);
SystemKind kind_from_name(const std::string& name);

struct IntegratorConfig {
    double step = 1e-4;
    double max_time = 1e3;
    double escape_radius = 1e3;
    void validate() const;
};

// Default integrator for a system kind: step 2*pi/10000 for Duffing, 1e-4 for Chen.
IntegratorConfig default_integrator(const SystemSpec& spec);

// Inequality over section coordinates: lhs op rhs, lhs one of x, y, xy.
struct Constraint {
    enum class Term { X, Y, XY };
    enum class Op { Less, LessEq, Greater, GreaterEq };
    Term lhs = Term::X;
    Op op = Op::Less;
    double rhs = 0.0;
    bool holds(double x, double y) const;
    std::string str() const;
};

struct PoincareSpec {
    enum class Kind { Stroboscopic, SectionReturn };
    enum class Direction { Decreasing, Increasing };
    Kind kind = Kind::Stroboscopic;
    // Stroboscopic: integrate from t = phase to phase + period.
    double period = 0.0;
    double phase = 0.0;
    // SectionReturn: plane z = plane_z, crossings in the given direction.
    double plane_z = 0.0;
    Direction direction = Direction::Decreasing;
    std::vector<Constraint> constraints;
    double guard = 1e-3;

    static PoincareSpec stroboscopic(double period, double phase = 0.0);
    // {(x, y, 21) : -10 <= x, y <= 10, xy < 63}, decreasing z.
    static PoincareSpec chen_section();
    bool on_section(double x, double y) const;
    void validate() const;
};

std::vector<double> vector_field(const SystemSpec& spec, const std::vector<double>& state, double t);

struct Trajectory {
    std::vector<double> t;
    std::vector<std::vector<double>> states;
};

// Fixed-step classical RK4 from t0 to t1; the last step is shortened to end at t1.
std::vector<double> integrate(const SystemSpec& spec, const IntegratorConfig& cfg,
                              const std::vector<double>& state0, double t0, double t1,
                              Trajectory* dense = nullptr);

void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

enum class MapStatus { Ok, Escaped, NoReturn, OffSection };
std::string status_name(MapStatus s);

struct MapResult {
    MapStatus status = MapStatus::Ok;
    Vec2 point;
    std::string message;
    bool ok() const { return status == MapStatus::Ok; }
};

// A Poincare map; immutable after construction and safe to call concurrently.
class PoincareMap {
public:
    PoincareMap(SystemSpec spec, PoincareSpec psec, IntegratorConfig cfg);

    // Throws Escaped, NoReturn or OffSection.
    Vec2 operator()(Vec2 p) const;
    MapResult apply(Vec2 p) const;
    // Section-return maps only: full state (x, y, z) at the refined crossing.
    std::array<double, 3> return_state(Vec2 p) const;

    const SystemSpec& system() const { return spec_; }
    const PoincareSpec& section() const { return psec_; }
    const IntegratorConfig& integrator() const { return cfg_; }

    // Number of RK4 steps in one stroboscopic period.
    long steps_per_period() const { return static_cast<long>(steps_); }

private:
    Vec2 stroboscopic(Vec2 p) const;
    Vec2 section_return(Vec2 p) const;

    SystemSpec spec_;
    PoincareSpec psec_;
    IntegratorConfig cfg_;
    std::size_t steps_ = 0;
    double last_step_ = 0.0;
    // forcing cos(omega t) at the start, midpoint and end of each step
    std::vector<double> forcing_;
};

using PlanarMap = std::function<MapResult(Vec2)>;

inline PlanarMap as_planar(std::shared_ptr<const PoincareMap> m) {
    return [m](Vec2 p) { return m->apply(p); };
}

// Elementwise map with per-point status; order preserved; evaluated in parallel.
std::vector<MapResult> map_point_cloud(const PlanarMap& map, const std::vector<Vec2>& points);

}  // namespace horseshoe
