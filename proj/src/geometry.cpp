#include "morphcomp/geometry.hpp"

#include "morphcomp/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <utility>
#include <vector>

namespace morphcomp {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Flat angular segments on [0, 2pi), lo <= hi.
using Segments = std::vector<std::pair<double, double>>;

Segments normalize_arc(double lo, double len) {
    lo = std::fmod(lo, kTwoPi);
    if (lo < 0.0) lo += kTwoPi;
    double hi = lo + len;
    if (hi <= kTwoPi) return {{lo, hi}};
    return {{lo, kTwoPi}, {0.0, hi - kTwoPi}};
}

Segments intersect(const Segments& a, const Segments& b) {
    Segments out;
    for (const auto& [a0, a1] : a) {
        for (const auto& [b0, b1] : b) {
            const double lo = std::max(a0, b0);
            const double hi = std::min(a1, b1);
            if (hi > lo) out.emplace_back(lo, hi);
        }
    }
    return out;
}

// Angular measure of the arc of the circle (center c, radius r) lying
// inside the axis-aligned square of half-side h centered at the origin.
// The square is the intersection of four half-planes n.p <= h; each
// half-plane admits a single arc of the circle, so the inside arc is the
// intersection of four circular intervals (corners never double-count).
double arc_inside_square(const Vec2& c, double r, double h) {
    static const Vec2 normals[4] = {{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}};

    Segments allowed = {{0.0, kTwoPi}};
    bool any_cut = false;
    for (const Vec2& n : normals) {
        const double t = (h - n.dot(c)) / r;
        if (t >= 1.0) continue;  // whole circle satisfies this edge
        if (t <= -1.0) return 0.0;
        any_cut = true;
        const double psi = std::atan2(n.y(), n.x());
        const double beta = std::acos(t);  // cos(alpha - psi) <= t
        allowed = intersect(allowed, normalize_arc(psi + beta, kTwoPi - 2.0 * beta));
        if (allowed.empty()) return 0.0;
    }
    if (!any_cut) return kTwoPi;  // circle fully inside the square

    double total = 0.0;
    for (const auto& [lo, hi] : allowed) total += hi - lo;
    return total;
}

void check_theta(double theta_i) {
    constexpr double tol = 1e-9;
    if (!(theta_i >= -kPi / 2.0 - tol && theta_i <= kPi + tol)) {
        throw std::domain_error("arm angle outside [-pi/2, pi]: " + std::to_string(theta_i));
    }
}

void check_arm(int arm) {
    if (arm < 0 || arm > 3) throw std::domain_error("arm index outside 0..3");
}

MorphologyState preset_from_json(const nlohmann::json& j, const std::string& name) {
    if (!j.contains(name)) throw ConfigError("geometry config missing preset " + name);
    const auto& arr = j.at(name);
    if (!arr.is_array() || arr.size() != 4) {
        throw ConfigError("preset " + name + " must be an array of 4 angles");
    }
    MorphologyState m;
    for (int i = 0; i < 4; ++i) m.theta[i] = arr[i].get<double>();
    m.validate();
    return m;
}

}  // namespace

VehicleGeometry VehicleGeometry::standard(double body_half_side, double arm_length,
                                          double prop_radius) {
    VehicleGeometry g;
    g.body_half_side = body_half_side;
    g.arm_length = arm_length;
    g.prop_radius = prop_radius;
    const double h = body_half_side;
    const double s = std::numbers::sqrt2 / 2.0;
    g.pivot_positions = {Vec2{h, h}, Vec2{-h, h}, Vec2{-h, -h}, Vec2{h, -h}};
    g.arm_zero_directions = {Vec2{s, s}, Vec2{-s, s}, Vec2{-s, -s}, Vec2{s, -s}};
    g.validate();
    return g;
}

void VehicleGeometry::validate() const {
    if (!(body_half_side > 0.0 && arm_length > 0.0 && prop_radius > 0.0)) {
        throw ConfigError("geometry lengths must be positive");
    }
    for (int i = 0; i < 4; ++i) {
        if (std::abs(pivot_positions[i].cwiseAbs().maxCoeff() - body_half_side) > 1e-12 ||
            std::abs(pivot_positions[i].cwiseAbs().minCoeff() - body_half_side) > 1e-12) {
            throw ConfigError("pivots must sit at the square corners");
        }
        if (std::abs(arm_zero_directions[i].norm() - 1.0) > 1e-9) {
            throw ConfigError("arm zero directions must be unit vectors");
        }
    }
    // X configuration must be occlusion free: nearest square point to the
    // propeller center at theta=0 is the pivot corner itself.
    if (arm_length <= prop_radius) {
        throw ConfigError("X configuration overlaps the body (arm_length <= prop_radius)");
    }
}

void MorphologyState::validate() const {
    for (double t : theta) check_theta(t);
}

Vec2 prop_center(const VehicleGeometry& geom, double theta_i, int arm) {
    check_arm(arm);
    check_theta(theta_i);
    const double c = std::cos(theta_i);
    const double s = std::sin(theta_i);
    const Vec2& d = geom.arm_zero_directions[arm];
    const Vec2 rotated(c * d.x() - s * d.y(), s * d.x() + c * d.y());
    return geom.pivot_positions[arm] + geom.arm_length * rotated;
}

double occlusion_angle_single(const VehicleGeometry& geom, double theta_i, int arm) {
    const Vec2 center = prop_center(geom, theta_i, arm);
    return arc_inside_square(center, geom.prop_radius, geom.body_half_side);
}

OcclusionProfile occlusion_angle(const VehicleGeometry& geom, const MorphologyState& morph) {
    morph.validate();
    OcclusionProfile occ;
    for (int i = 0; i < 4; ++i) {
        occ.prop_centers[i] = prop_center(geom, morph.theta[i], i);
        occ.phi[i] = arc_inside_square(occ.prop_centers[i], geom.prop_radius,
                                       geom.body_half_side);
    }
    return occ;
}

bool has_overlap(const VehicleGeometry& geom, double theta_i, int arm) {
    return occlusion_angle_single(geom, theta_i, arm) > 0.0;
}

GeometryConfig default_geometry_config() {
    GeometryConfig cfg;
    cfg.geometry = VehicleGeometry::standard();
    cfg.presets.x = MorphologyState{};
    // Folded presets chosen so the occluded arcs stay below the 65 degree
    // mechanical bound; O_asym leaves propeller 3 (index 2) less folded.
    cfg.presets.o = MorphologyState{{1.80, 1.80, 1.80, 1.80}};
    cfg.presets.o_asym = MorphologyState{{1.80, 1.80, 1.58, 1.80}};
    return cfg;
}

GeometryConfig load_geometry_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open geometry config: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("geometry config parse error: " + std::string(e.what()));
    }
    GeometryConfig cfg;
    cfg.geometry = VehicleGeometry::standard(
        j.value("body_half_side", 0.05),
        j.value("arm_length", 0.09),
        j.value("prop_radius", 0.0635));
    if (j.contains("presets")) {
        const auto& p = j.at("presets");
        cfg.presets.x = preset_from_json(p, "X");
        cfg.presets.o = preset_from_json(p, "O");
        cfg.presets.o_asym = preset_from_json(p, "O_asym");
    } else {
        cfg.presets = default_geometry_config().presets;
    }
    return cfg;
}

}  // namespace morphcomp
