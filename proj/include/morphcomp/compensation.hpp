#pragma once

#include "morphcomp/aero.hpp"

#include <Eigen/Dense>

#include <array>

namespace morphcomp {

inline constexpr double kMinScalingFactor = 1e-3;

// Per-propeller effectiveness fractions, 1 = unoccluded.
struct ScalingFactors {
    std::array<double, 4> k{1.0, 1.0, 1.0, 1.0};
};

struct RotorLimits {
    double omega_min = 150.0;   // rad/s
    double omega_max = 2000.0;  // rad/s
};

struct RotorCommand {
    Eigen::Vector4d desired_thrusts = Eigen::Vector4d::Zero();
    Eigen::Vector4d corrected_speeds = Eigen::Vector4d::Zero();
    std::array<bool, 4> saturated{false, false, false, false};
    bool thrust_reduced = false;
    bool yaw_relaxed = false;
    bool infeasible = false;
};

// Everything the desaturation re-solve needs: the thrust->wrench map in
// effect and the speed mapping used to command the rotors.
struct AllocationContext {
    Eigen::Matrix4d alloc = Eigen::Matrix4d::Identity();  // thrusts -> (F, tx, ty, tz)
    ScalingFactors scaling;
    double k_t = 0.0;
};

// Fraction of nominal effectiveness retained under occlusion phi:
// 1 - |K_T - k(phi)| / K_T, with k(phi) clamped to K_T from above so the
// plant round-trip is exact, and the result floored at kMinScalingFactor.
double scaling_factor(const AeroModel& model, double phi);

// Modified desired motor speed sqrt(T / (K_T * k_i)).
double compensated_speed(const AeroModel& model, double thrust_i, double k_i);

// Resolves rotor-speed limit violations with fixed priority: roll/pitch
// torques preserved exactly, collective thrust reduced next, yaw torque
// relaxed first.
RotorCommand saturate_prioritized(const Eigen::Vector4d& desired_speeds,
                                  const RotorLimits& limits, const AllocationContext& ctx);

}  // namespace morphcomp
