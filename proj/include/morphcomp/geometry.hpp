#pragma once

#include <Eigen/Core>

#include <array>
#include <string>

namespace morphcomp {

using Vec2 = Eigen::Vector2d;

// Four-arm foldable frame: square central body, arms pivoting at the
// corners. All lengths in meters, angles in radians.
struct VehicleGeometry {
    double body_half_side = 0.05;
    double arm_length = 0.09;
    double prop_radius = 0.0635;  // 5 inch propeller
    std::array<Vec2, 4> pivot_positions;
    std::array<Vec2, 4> arm_zero_directions;  // outward diagonals, unit length

    // Builds the standard frame: pivots at the square corners, zero
    // directions pointing along the outward diagonals (X configuration).
    static VehicleGeometry standard(double body_half_side = 0.05,
                                    double arm_length = 0.09,
                                    double prop_radius = 0.0635);

    void validate() const;  // throws ConfigError
};

// Arm rotation angles relative to each arm's zero direction.
// Positive theta folds the arm around the body (X -> O sense).
struct MorphologyState {
    std::array<double, 4> theta{0.0, 0.0, 0.0, 0.0};

    void validate() const;  // throws std::domain_error outside [-pi/2, pi]
};

struct OcclusionProfile {
    std::array<double, 4> phi{};          // occluded arc per propeller, [0, 2pi]
    std::array<Vec2, 4> prop_centers{};
};

// Propeller center for arm i at rotation theta_i.
Vec2 prop_center(const VehicleGeometry& geom, double theta_i, int arm);

// Occluded arc angle for a single propeller: angular measure of the part
// of the propeller-tip circle that lies inside the body square.
double occlusion_angle_single(const VehicleGeometry& geom, double theta_i, int arm);

OcclusionProfile occlusion_angle(const VehicleGeometry& geom, const MorphologyState& morph);

// Cheap overlap gate: true iff occlusion_angle_single > 0.
bool has_overlap(const VehicleGeometry& geom, double theta_i, int arm);

struct MorphologyPresets {
    MorphologyState x;       // spread arms, no overlap
    MorphologyState o;       // symmetric fold, all four propellers occluded
    MorphologyState o_asym;  // propeller 3 (index 2) folded less
};

struct GeometryConfig {
    VehicleGeometry geometry;
    MorphologyPresets presets;
};

GeometryConfig default_geometry_config();

// JSON schema: {body_half_side, arm_length, prop_radius,
//               presets: {X: [theta x4], O: [...], O_asym: [...]}}
GeometryConfig load_geometry_config(const std::string& path);

}  // namespace morphcomp
