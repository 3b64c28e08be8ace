#include "horseshoe/flows.hpp"
#include "horseshoe/parallel.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

namespace horseshoe {

SystemSpec SystemSpec::duffing(double delta, double gamma, double omega) {
    SystemSpec s;
    s.kind = SystemKind::DuffingForced;
    s.parameters = {{"delta", delta}, {"gamma", gamma}, {"omega", omega}};
    return s;
}

SystemSpec SystemSpec::chen() {
    SystemSpec s;
    s.kind = SystemKind::Chen;
    s.parameters = default_parameters(SystemKind::Chen);
    return s;
}

SystemSpec SystemSpec::custom(int dimension, std::function<void(double, const double*, double*)> rhs) {
    SystemSpec s;
    s.kind = SystemKind::Custom;
    s.custom_dimension = dimension;
    s.custom_rhs = std::move(rhs);
    return s;
}

std::map<std::string, double> default_parameters(SystemKind kind) {
    switch (kind) {
        case SystemKind::DuffingForced:
            return {{"delta", 0.25}, {"gamma", 1.183}, {"omega", 1.0}};
        case SystemKind::Chen:
            // x' = a(y - x), y' = p x + q y - x z, z' = -b z + x y
            return {{"a", 35.0}, {"p", -7.0}, {"q", 28.0}, {"b", 3.0}};
        case SystemKind::Custom:
            return {};
    }
    return {};
}

std::string kind_name(SystemKind kind) {
    switch (kind) {
        case SystemKind::DuffingForced: return "DuffingForced";
        case SystemKind::Chen: return "Chen";
        case SystemKind::Custom: return "Custom";
    }
    return "?";
}

SystemKind kind_from_name(const std::string& name) {
    if (name == "DuffingForced") return SystemKind::DuffingForced;
    if (name == "Chen") return SystemKind::Chen;
    if (name == "Custom") return SystemKind::Custom;
    throw SchemaError("unknown system kind '" + name + "'");
}

int SystemSpec::dimension() const {
    switch (kind) {
        case SystemKind::DuffingForced: return 2;
        case SystemKind::Chen: return 3;
        case SystemKind::Custom: return custom_dimension;
    }
    return 0;
}

double SystemSpec::param(const std::string& key) const {
    auto it = parameters.find(key);
    if (it == parameters.end()) throw SchemaError("missing parameter '" + key + "'");
    return it->second;
}

void SystemSpec::validate() const {
    if (kind == SystemKind::Custom) {
        if (custom_dimension < 1 || !custom_rhs) throw InvariantError("custom system needs a dimension and a right-hand side");
        return;
    }
    auto want = default_parameters(kind);
    for (auto& [k, v] : parameters)
        if (!want.count(k)) throw SchemaError("unexpected parameter '" + k + "' for " + kind_name(kind));
    for (auto& [k, v] : want) {
        if (!parameters.count(k)) throw SchemaError("missing parameter '" + k + "' for " + kind_name(kind));
        if (!std::isfinite(parameters.at(k))) throw InvariantError("parameter '" + k + "' is not finite");
    }
    if (kind == SystemKind::DuffingForced && !(param("omega") > 0))
        throw InvariantError("omega must be positive");
}

void IntegratorConfig::validate() const {
    if (!(step > 0) || !(max_time > 0) || !(escape_radius > 0))
        throw InvariantError("integrator step, max_time and escape_radius must be positive");
    if (step > max_time) throw InvariantError("integrator step exceeds max_time");
}

IntegratorConfig default_integrator(const SystemSpec& spec) {
    IntegratorConfig c;
    if (spec.kind == SystemKind::DuffingForced) c.step = 2 * std::numbers::pi / spec.param("omega") / 10000.0;
    return c;
}

bool Constraint::holds(double x, double y) const {
    double v = lhs == Term::X ? x : lhs == Term::Y ? y : x * y;
    switch (op) {
        case Op::Less: return v < rhs;
        case Op::LessEq: return v <= rhs;
        case Op::Greater: return v > rhs;
        case Op::GreaterEq: return v >= rhs;
    }
    return false;
}

std::string Constraint::str() const {
    static const char* terms[] = {"x", "y", "xy"};
    static const char* ops[] = {"<", "<=", ">", ">="};
    std::ostringstream os;
    os << terms[static_cast<int>(lhs)] << ' ' << ops[static_cast<int>(op)] << ' ' << rhs;
    return os.str();
}

PoincareSpec PoincareSpec::stroboscopic(double period, double phase) {
    PoincareSpec p;
    p.kind = Kind::Stroboscopic;
    p.period = period;
    p.phase = phase;
    return p;
}

PoincareSpec PoincareSpec::chen_section() {
    using T = Constraint::Term;
    using O = Constraint::Op;
    PoincareSpec p;
    p.kind = Kind::SectionReturn;
    p.plane_z = 21.0;
    p.direction = Direction::Decreasing;
    p.constraints = {{T::X, O::GreaterEq, -10}, {T::X, O::LessEq, 10}, {T::Y, O::GreaterEq, -10},
                     {T::Y, O::LessEq, 10},     {T::XY, O::Less, 63}};
    return p;
}

bool PoincareSpec::on_section(double x, double y) const {
    for (auto& c : constraints)
        if (!c.holds(x, y)) return false;
    return true;
}

void PoincareSpec::validate() const {
    if (kind == Kind::Stroboscopic) {
        if (!(period > 0)) throw InvariantError("stroboscopic period must be positive");
        if (!std::isfinite(phase)) throw InvariantError("phase must be finite");
    } else {
        if (!std::isfinite(plane_z)) throw InvariantError("section plane must be finite");
        if (!(guard > 0)) throw InvariantError("section guard must be positive");
    }
}

namespace {

template <int D>
using State = std::array<double, D>;

// One classical RK4 step. f(k, stage, t, y, dy) with stage 0 = start, 1 = midpoint, 2 = end
// of step k; the stage index lets callers look up precomputed forcing values.
template <int D, class F>
inline void rk4_step(F& f, std::size_t k, double t, double h, State<D>& y) {
    State<D> k1, k2, k3, k4, tmp;
    f(k, 0, t, y, k1);
    for (int i = 0; i < D; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
    f(k, 1, t + 0.5 * h, tmp, k2);
    for (int i = 0; i < D; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
    f(k, 1, t + 0.5 * h, tmp, k3);
    for (int i = 0; i < D; ++i) tmp[i] = y[i] + h * k3[i];
    f(k, 2, t + h, tmp, k4);
    for (int i = 0; i < D; ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

template <int D>
inline double norm(const State<D>& y) {
    double s = 0.0;
    for (int i = 0; i < D; ++i) s += y[i] * y[i];
    return std::sqrt(s);
}

// Step count and final step length for [t0, t1] at nominal step h.
std::size_t step_count(double t0, double t1, double h) {
    double r = (t1 - t0) / h;
    auto n = static_cast<std::size_t>(std::ceil(r - 1e-9 * std::max(1.0, r)));
    return std::max<std::size_t>(n, 1);
}

struct DuffingRhs {
    double delta, gamma, omega;
    template <class Y, class DY>
    void operator()(std::size_t, int, double t, const Y& y, DY& dy) const {
        dy[0] = y[1];
        dy[1] = y[0] - y[0] * y[0] * y[0] - delta * y[1] + gamma * std::cos(omega * t);
    }
};

struct DuffingTableRhs {
    double delta, gamma;
    const double* table;
    template <class Y, class DY>
    void operator()(std::size_t k, int stage, double, const Y& y, DY& dy) const {
        dy[0] = y[1];
        dy[1] = y[0] - y[0] * y[0] * y[0] - delta * y[1] + gamma * table[3 * k + stage];
    }
};

struct ChenRhs {
    double a, p, q, b;
    template <class Y, class DY>
    void operator()(std::size_t, int, double, const Y& y, DY& dy) const {
        dy[0] = a * (y[1] - y[0]);
        dy[1] = p * y[0] + q * y[1] - y[0] * y[2];
        dy[2] = -b * y[2] + y[0] * y[1];
    }
};

struct Custom3Rhs {
    const std::function<void(double, const double*, double*)>* f;
    template <class Y, class DY>
    void operator()(std::size_t, int, double t, const Y& y, DY& dy) const {
        (*f)(t, y.data(), dy.data());
    }
};

template <int D, class F>
State<D> run_fixed(F& f, const IntegratorConfig& cfg, State<D> y, double t0, double t1, Trajectory* dense) {
    double h = cfg.step;
    std::size_t n = step_count(t0, t1, h);
    auto record = [&](double t) {
        if (!dense) return;
        dense->t.push_back(t);
        dense->states.emplace_back(y.begin(), y.end());
    };
    record(t0);
    for (std::size_t k = 0; k < n; ++k) {
        double t = t0 + static_cast<double>(k) * h;
        double hk = k + 1 == n ? t1 - t : h;
        rk4_step<D>(f, k, t, hk, y);
        double r = norm<D>(y);
        if (!(r <= cfg.escape_radius)) throw Escaped(t + hk, r);
        record(k + 1 == n ? t1 : t + hk);
    }
    return y;
}

std::vector<double> integrate_custom(const SystemSpec& spec, const IntegratorConfig& cfg,
                                     std::vector<double> y, double t0, double t1, Trajectory* dense) {
    int d = spec.custom_dimension;
    double h = cfg.step;
    std::size_t n = step_count(t0, t1, h);
    std::vector<double> k1(d), k2(d), k3(d), k4(d), tmp(d);
    auto& f = spec.custom_rhs;
    if (dense) {
        dense->t.push_back(t0);
        dense->states.push_back(y);
    }
    for (std::size_t k = 0; k < n; ++k) {
        double t = t0 + static_cast<double>(k) * h;
        double hk = k + 1 == n ? t1 - t : h;
        f(t, y.data(), k1.data());
        for (int i = 0; i < d; ++i) tmp[i] = y[i] + 0.5 * hk * k1[i];
        f(t + 0.5 * hk, tmp.data(), k2.data());
        for (int i = 0; i < d; ++i) tmp[i] = y[i] + 0.5 * hk * k2[i];
        f(t + 0.5 * hk, tmp.data(), k3.data());
        for (int i = 0; i < d; ++i) tmp[i] = y[i] + hk * k3[i];
        f(t + hk, tmp.data(), k4.data());
        double r = 0.0;
        for (int i = 0; i < d; ++i) {
            y[i] += hk / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            r += y[i] * y[i];
        }
        r = std::sqrt(r);
        if (!(r <= cfg.escape_radius)) throw Escaped(t + hk, r);
        if (dense) {
            dense->t.push_back(k + 1 == n ? t1 : t + hk);
            dense->states.push_back(y);
        }
    }
    return y;
}

template <class F>
State<3> section_return_impl(F& f, const PoincareSpec& ps, const IntegratorConfig& cfg, State<3> y) {
    const double c = ps.plane_z;
    const bool down = ps.direction == PoincareSpec::Direction::Decreasing;
    const double h = cfg.step;
    bool armed = false;
    for (std::size_t k = 0;; ++k) {
        double t = static_cast<double>(k) * h;
        if (t >= cfg.max_time) break;
        State<3> prev = y;
        rk4_step<3>(f, k, t, h, y);
        double r = norm<3>(y);
        if (!(r <= cfg.escape_radius)) throw Escaped(t + h, r);
        double g0 = prev[2] - c, g1 = y[2] - c;
        bool crossed = armed && (down ? (g0 > 0 && g1 <= 0) : (g0 < 0 && g1 >= 0));
        if (std::fabs(g1) > ps.guard) armed = true;
        if (!crossed) continue;
        // bisection on the step length from prev
        State<3> hit = y;
        if (std::fabs(g1) > 1e-10) {
            double lo = 0.0, hi = h;
            bool done = false;
            for (int it = 0; it < 50 && !done; ++it) {
                double mid = 0.5 * (lo + hi);
                State<3> s = prev;
                rk4_step<3>(f, k, t, mid, s);
                double g = s[2] - c;
                if (std::fabs(g) <= 1e-10) {
                    hit = s;
                    done = true;
                } else if ((g > 0) == down) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            if (!done) throw NoReturn("crossing refinement did not reach |z - c| <= 1e-10");
        }
        if (ps.on_section(hit[0], hit[1])) return hit;
    }
    throw NoReturn("no qualifying section crossing within max_time " + std::to_string(cfg.max_time));
}

}  // namespace

std::vector<double> vector_field(const SystemSpec& spec, const std::vector<double>& s, double t) {
    if (static_cast<int>(s.size()) != spec.dimension())
        throw DimensionMismatch("state has dimension " + std::to_string(s.size()) + ", system expects " +
                                std::to_string(spec.dimension()));
    std::vector<double> out(s.size());
    switch (spec.kind) {
        case SystemKind::DuffingForced:
            DuffingRhs{spec.param("delta"), spec.param("gamma"), spec.param("omega")}(0, 0, t, s, out);
            break;
        case SystemKind::Chen:
            ChenRhs{spec.param("a"), spec.param("p"), spec.param("q"), spec.param("b")}(0, 0, t, s, out);
            break;
        case SystemKind::Custom:
            spec.custom_rhs(t, s.data(), out.data());
            break;
    }
    return out;
}

std::vector<double> integrate(const SystemSpec& spec, const IntegratorConfig& cfg,
                              const std::vector<double>& state0, double t0, double t1, Trajectory* dense) {
    if (!(t1 > t0)) throw OutOfRange("integrate requires t1 > t0");
    if (static_cast<int>(state0.size()) != spec.dimension())
        throw DimensionMismatch("initial state has wrong dimension");
    cfg.validate();
    switch (spec.kind) {
        case SystemKind::DuffingForced: {
            DuffingRhs f{spec.param("delta"), spec.param("gamma"), spec.param("omega")};
            auto y = run_fixed<2>(f, cfg, State<2>{state0[0], state0[1]}, t0, t1, dense);
            return {y[0], y[1]};
        }
        case SystemKind::Chen: {
            ChenRhs f{spec.param("a"), spec.param("p"), spec.param("q"), spec.param("b")};
            auto y = run_fixed<3>(f, cfg, State<3>{state0[0], state0[1], state0[2]}, t0, t1, dense);
            return {y[0], y[1], y[2]};
        }
        case SystemKind::Custom:
            return integrate_custom(spec, cfg, state0, t0, t1, dense);
    }
    return {};
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    std::size_t d = traj.states.empty() ? 2 : traj.states.front().size();
    static const char* names[] = {"x", "y", "z"};
    os << 't';
    for (std::size_t i = 0; i < d; ++i) os << ',' << (i < 3 ? names[i] : ("s" + std::to_string(i)).c_str());
    os << '\n';
    os.precision(17);
    for (std::size_t k = 0; k < traj.t.size(); ++k) {
        os << traj.t[k];
        for (double v : traj.states[k]) os << ',' << v;
        os << '\n';
    }
}

std::string status_name(MapStatus s) {
    switch (s) {
        case MapStatus::Ok: return "ok";
        case MapStatus::Escaped: return "Escaped";
        case MapStatus::NoReturn: return "NoReturn";
        case MapStatus::OffSection: return "OffSection";
    }
    return "?";
}

PoincareMap::PoincareMap(SystemSpec spec, PoincareSpec psec, IntegratorConfig cfg)
    : spec_(std::move(spec)), psec_(std::move(psec)), cfg_(cfg) {
    spec_.validate();
    psec_.validate();
    cfg_.validate();
    if (psec_.kind == PoincareSpec::Kind::Stroboscopic) {
        if (spec_.dimension() != 2) throw InvariantError("stroboscopic map needs a planar system");
        double t0 = psec_.phase, t1 = psec_.phase + psec_.period;
        steps_ = step_count(t0, t1, cfg_.step);
        if (spec_.kind == SystemKind::DuffingForced) {
            double w = spec_.param("omega");
            forcing_.resize(3 * steps_);
            for (std::size_t k = 0; k < steps_; ++k) {
                double t = t0 + static_cast<double>(k) * cfg_.step;
                double hk = k + 1 == steps_ ? t1 - t : cfg_.step;
                forcing_[3 * k] = std::cos(w * t);
                forcing_[3 * k + 1] = std::cos(w * (t + 0.5 * hk));
                forcing_[3 * k + 2] = std::cos(w * (t + hk));
            }
        }
    } else if (spec_.dimension() != 3) {
        throw InvariantError("section-return map needs a three-dimensional system");
    }
}

Vec2 PoincareMap::stroboscopic(Vec2 p) const {
    double t0 = psec_.phase, t1 = psec_.phase + psec_.period;
    if (spec_.kind != SystemKind::DuffingForced) {
        auto y = integrate(spec_, cfg_, {p.x, p.y}, t0, t1);
        return {y[0], y[1]};
    }
    DuffingTableRhs f{spec_.param("delta"), spec_.param("gamma"), forcing_.data()};
    auto y = run_fixed<2>(f, cfg_, State<2>{p.x, p.y}, t0, t1, nullptr);
    return {y[0], y[1]};
}

std::array<double, 3> PoincareMap::return_state(Vec2 p) const {
    if (psec_.kind != PoincareSpec::Kind::SectionReturn) throw InvariantError("return_state needs a section-return map");
    if (!psec_.on_section(p.x, p.y)) {
        std::ostringstream os;
        os << "point (" << p.x << ", " << p.y << ") is not on the section";
        throw OffSection(os.str());
    }
    State<3> y{p.x, p.y, psec_.plane_z};
    if (spec_.kind == SystemKind::Chen) {
        ChenRhs f{spec_.param("a"), spec_.param("p"), spec_.param("q"), spec_.param("b")};
        if (psec_.direction == PoincareSpec::Direction::Decreasing) {
            // z' < 0 must hold at the start point for it to be a downward crossing
            State<3> dy;
            f(0, 0, 0.0, y, dy);
            if (!(dy[2] < 0)) throw OffSection("section point is not transversal (z' >= 0)");
        }
        auto r = section_return_impl(f, psec_, cfg_, y);
        return {r[0], r[1], r[2]};
    }
    Custom3Rhs f{&spec_.custom_rhs};
    auto r = section_return_impl(f, psec_, cfg_, y);
    return {r[0], r[1], r[2]};
}

Vec2 PoincareMap::section_return(Vec2 p) const {
    auto r = return_state(p);
    return {r[0], r[1]};
}

Vec2 PoincareMap::operator()(Vec2 p) const {
    return psec_.kind == PoincareSpec::Kind::Stroboscopic ? stroboscopic(p) : section_return(p);
}

MapResult PoincareMap::apply(Vec2 p) const {
    MapResult r;
    try {
        r.point = (*this)(p);
    } catch (const Escaped& e) {
        r.status = MapStatus::Escaped;
        r.message = e.what();
    } catch (const NoReturn& e) {
        r.status = MapStatus::NoReturn;
        r.message = e.what();
    } catch (const OffSection& e) {
        r.status = MapStatus::OffSection;
        r.message = e.what();
    }
    return r;
}

std::vector<MapResult> map_point_cloud(const PlanarMap& map, const std::vector<Vec2>& points) {
    std::vector<MapResult> out(points.size());
    parallel_for(points.size(), [&](std::size_t i) { out[i] = map(points[i]); });
    return out;
}

}  // namespace horseshoe
