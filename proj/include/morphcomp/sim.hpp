#pragma once

#include "morphcomp/aero.hpp"
#include "morphcomp/compensation.hpp"
#include "morphcomp/control.hpp"
#include "morphcomp/geometry.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace morphcomp {

struct VehicleParams {
    double mass = 0.58;                          // kg
    Vec3 inertia_diag{2.5e-3, 2.5e-3, 4.5e-3};   // kg m^2
    double motor_tau = 0.03;                     // s, first-order ESC lag
    double yaw_drag_coefficient = 0.016;         // m, torque/thrust ratio
    std::array<int, 4> spin{+1, -1, +1, -1};     // yaw reaction sign per rotor
    RotorLimits limits;
};

// One plant integration step (RK4): motor lag toward the setpoints,
// per-propeller thrust k(phi_i) * w_i^2, rigid-body Newton-Euler.
VehicleState step(const VehicleState& state, const Vec4& speed_setpoints,
                  const OcclusionProfile& occ, const AeroModel& plant,
                  const VehicleParams& params, double dt);

struct TrajectorySpec {
    enum class Kind { Hover, Circle, CircleVarying };
    Kind kind = Kind::Hover;
    Vec3 hover_point{0.0, 0.0, 1.5};
    double radius = 1.5;
    double speed = 0.6;
    double height = 1.5;
    double z_min = 1.25;
    double z_max = 1.75;
};

TrajectorySample trajectory_sample(const TrajectorySpec& spec, double t);

struct MorphEvent {
    double t = 0.0;
    MorphologyState target;
    double duration = 0.5;  // linear blend time
};

struct CompensationEvent {
    double t = 0.0;
    bool enabled = true;
};

struct Scenario {
    Scenario();  // defaults both aero models to default_flight_model()

    TrajectorySpec trajectory;
    MorphologyState initial_morphology;
    std::vector<MorphEvent> morph_schedule;       // sorted by t
    bool compensation = true;
    std::vector<CompensationEvent> compensation_schedule;
    VehicleGeometry geometry = VehicleGeometry::standard();
    AeroModel controller_model;  // what the compensation believes
    AeroModel plant_model;       // ground truth (may be perturbed)
    VehicleParams vehicle;
    ControllerGains gains;
    double sensor_noise_sigma = 0.0;
    double duration = 10.0;
    double dt = 0.002;
    std::uint64_t seed = 0;

    void validate() const;
};

MorphologyState morph_at(const Scenario& scenario, double t);
bool compensation_at(const Scenario& scenario, double t);

// Scenario plant/controller models default to a hover-capable rescaling of
// the reference coefficient line (the bench k_t cannot lift the vehicle).
AeroModel default_flight_model();

struct ScenarioResult {
    std::vector<double> t;
    std::vector<Vec3> reference;
    std::vector<Vec3> true_position;
    std::vector<Vec3> estimated;
    std::vector<std::array<double, 4>> phi;
    std::vector<Vec4> omega_cmd;
    std::vector<std::array<bool, 4>> saturated;
    std::vector<bool> compensation_active;
    VehicleState final_state;
    bool saturation_infeasible_seen = false;
};

ScenarioResult run_scenario(const Scenario& scenario);

struct SegmentSpec {
    std::string label;
    double t0 = 0.0;
    double t1 = 0.0;
};

struct SegmentSummary {
    std::string label;
    double t0 = 0.0, t1 = 0.0;
    Vec3 mean_abs_error = Vec3::Zero();  // steady state: last 50% of the segment
    double euclid_mean = 0.0;            // whole segment
    double euclid_std = 0.0;
    int samples = 0;
};

std::vector<SegmentSummary> summarize(const ScenarioResult& result,
                                      const std::vector<SegmentSpec>& segments);

// Time-series CSV: t,ref_x,ref_y,ref_z,est_x,est_y,est_z,
//                  phi_1..4,omega_cmd_1..4,sat_1..4
void write_result_csv(const ScenarioResult& result, std::ostream& out);
std::string summaries_to_json(const std::vector<SegmentSummary>& summaries);

// Scenario JSON (all fields optional except trajectory.type).
Scenario scenario_from_json_string(const std::string& text);
Scenario load_scenario(const std::string& path);

}  // namespace morphcomp
