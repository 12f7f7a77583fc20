#include "morphcomp/control.hpp"

#include "morphcomp/errors.hpp"

#include <cmath>
#include <string>

namespace morphcomp {

namespace {

constexpr double kGravity = 9.81;

Vec3 vee(const Eigen::Matrix3d& m) {
    return Vec3(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1)) * 0.5;
}

}  // namespace

void ControllerGains::validate() const {
    if (!(kp_pos > 0.0 && kd_pos > 0.0 && kp_att > 0.0 && kd_att > 0.0 && kp_yaw > 0.0)) {
        throw ConfigError("controller gains must be positive");
    }
}

Vec3 position_control(const VehicleState& state, const TrajectorySample& ref,
                      const ControllerGains& gains) {
    return ref.acceleration + gains.kp_pos * (ref.position - state.position) +
           gains.kd_pos * (ref.velocity - state.velocity) + Vec3(0.0, 0.0, kGravity);
}

Mat4 allocation_matrix(const VehicleGeometry& geom, const MorphologyState& morph,
                       double yaw_drag_coefficient, const std::array<int, 4>& spin) {
    Mat4 a;
    for (int i = 0; i < 4; ++i) {
        const Vec2 r = prop_center(geom, morph.theta[i], i);
        a(0, i) = 1.0;       // collective force
        a(1, i) = r.y();     // roll torque of a +z thrust at r
        a(2, i) = -r.x();    // pitch torque
        a(3, i) = spin[i] * yaw_drag_coefficient;
    }
    return a;
}

Vec4 allocate(const WrenchCommand& wrench, const Mat4& alloc) {
    const Eigen::JacobiSVD<Mat4> svd(alloc);
    const double cond = svd.singularValues()(0) / svd.singularValues()(3);
    if (!std::isfinite(cond) || cond > 1e9) {
        throw AllocationError("singular allocation matrix, condition number " +
                              std::to_string(cond));
    }
    const Vec4 w(wrench.collective_thrust, wrench.torque.x(), wrench.torque.y(),
                 wrench.torque.z());
    return alloc.partialPivLu().solve(w);
}

CascadedController::CascadedController(ControllerGains gains, double mass, Vec3 inertia_diag)
    : gains_(gains), mass_(mass), inertia_diag_(std::move(inertia_diag)) {
    gains_.validate();
    if (!(mass_ > 0.0) || !(inertia_diag_.minCoeff() > 0.0)) {
        throw ConfigError("mass and inertia must be positive");
    }
}

WrenchCommand CascadedController::attitude_control(const VehicleState& state,
                                                   const Vec3& accel_des, double yaw_ref) {
    WrenchCommand cmd;

    Eigen::Quaterniond q_des;
    if (accel_des.norm() < 1e-6) {
        q_des = last_attitude_des_;
        cmd.singular = true;
    } else {
        const Vec3 z_b = accel_des.normalized();
        const Vec3 x_c(std::cos(yaw_ref), std::sin(yaw_ref), 0.0);
        Vec3 y_b = z_b.cross(x_c);
        if (y_b.norm() < 1e-6) {
            // Thrust direction parallel to the yaw heading; fall back to world y.
            y_b = z_b.cross(Vec3::UnitY());
        }
        y_b.normalize();
        const Vec3 x_b = y_b.cross(z_b);
        Eigen::Matrix3d r_des;
        r_des.col(0) = x_b;
        r_des.col(1) = y_b;
        r_des.col(2) = z_b;
        q_des = Eigen::Quaterniond(r_des);
        last_attitude_des_ = q_des;
    }

    const Eigen::Matrix3d r = state.attitude.toRotationMatrix();
    const Eigen::Matrix3d r_d = q_des.toRotationMatrix();
    const Vec3 e_r = vee(r_d.transpose() * r - r.transpose() * r_d);

    Vec3 accel_att(-gains_.kp_att * e_r.x(), -gains_.kp_att * e_r.y(),
                   -gains_.kp_yaw * e_r.z());
    accel_att -= gains_.kd_att * state.angular_rate;

    const Vec3 j_omega = inertia_diag_.cwiseProduct(state.angular_rate);
    cmd.torque = inertia_diag_.cwiseProduct(accel_att) + state.angular_rate.cross(j_omega);

    // Project the desired specific force on the actual body z axis.
    cmd.collective_thrust = std::max(0.0, mass_ * accel_des.dot(r.col(2)));
    return cmd;
}

}  // namespace morphcomp
