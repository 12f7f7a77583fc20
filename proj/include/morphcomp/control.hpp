#pragma once

#include "morphcomp/geometry.hpp"

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <array>

namespace morphcomp {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

struct ControllerGains {
    double kp_pos = 8.0;   // 1/s^2
    double kd_pos = 4.0;   // 1/s
    double kp_att = 250.0;  // 1/s^2
    double kd_att = 30.0;   // 1/s
    double kp_yaw = 60.0;   // 1/s^2, folded into the attitude error vector

    void validate() const;  // throws ConfigError on non-positive gains
};

struct TrajectorySample {
    Vec3 position = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();
    Vec3 acceleration = Vec3::Zero();
    double yaw = 0.0;
};

// 6-DOF rigid-body state plus motor speeds. Attitude maps body to world.
struct VehicleState {
    Vec3 position = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();
    Eigen::Quaterniond attitude = Eigen::Quaterniond::Identity();
    Vec3 angular_rate = Vec3::Zero();  // body frame
    Vec4 motor_speeds = Vec4::Zero();
};

struct WrenchCommand {
    double collective_thrust = 0.0;  // N, along body z
    Vec3 torque = Vec3::Zero();      // N m, body frame
    bool singular = false;           // free-fall direction request, attitude held
};

// PD position loop with gravity and reference-acceleration feed-forward:
// a_des = a_ref + kp (p_ref - p) + kd (v_ref - v) + g z.
Vec3 position_control(const VehicleState& state, const TrajectorySample& ref,
                      const ControllerGains& gains);

// Maps thrusts (N, per propeller) to (collective force, roll, pitch, yaw
// torque). Lever arms follow the propeller centers at the current
// morphology; spin gives the yaw reaction sign.
Mat4 allocation_matrix(const VehicleGeometry& geom, const MorphologyState& morph,
                       double yaw_drag_coefficient, const std::array<int, 4>& spin);

// Inverts the mixer; throws AllocationError when the morphology makes it
// singular (condition number reported in the message).
Vec4 allocate(const WrenchCommand& wrench, const Mat4& alloc);

// Outer position loop + attitude P/rate-D loop. Holds the last desired
// attitude across ticks to ride through free-fall singularities.
class CascadedController {
public:
    CascadedController(ControllerGains gains, double mass, Vec3 inertia_diag);

    WrenchCommand attitude_control(const VehicleState& state, const Vec3& accel_des,
                                   double yaw_ref);

    const ControllerGains& gains() const { return gains_; }
    double mass() const { return mass_; }

private:
    ControllerGains gains_;
    double mass_;
    Vec3 inertia_diag_;
    Eigen::Quaterniond last_attitude_des_ = Eigen::Quaterniond::Identity();
};

}  // namespace morphcomp
