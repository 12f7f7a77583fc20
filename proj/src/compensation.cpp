#include "morphcomp/compensation.hpp"

#include "morphcomp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace morphcomp {

namespace {

// Feasible interval of s for lo <= base + s * dir <= hi, componentwise.
// Returns {lo > hi} when empty.
std::pair<double, double> feasible_interval(const Eigen::Vector4d& base,
                                            const Eigen::Vector4d& dir,
                                            const Eigen::Vector4d& lo,
                                            const Eigen::Vector4d& hi) {
    double s_lo = -std::numeric_limits<double>::infinity();
    double s_hi = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 4; ++i) {
        if (std::abs(dir[i]) < 1e-15) {
            if (base[i] < lo[i] - 1e-12 || base[i] > hi[i] + 1e-12) {
                return {1.0, 0.0};
            }
            continue;
        }
        double a = (lo[i] - base[i]) / dir[i];
        double b = (hi[i] - base[i]) / dir[i];
        if (a > b) std::swap(a, b);
        s_lo = std::max(s_lo, a);
        s_hi = std::min(s_hi, b);
    }
    return {s_lo, s_hi};
}

}  // namespace

double scaling_factor(const AeroModel& model, double phi) {
    if (phi < 0.0) throw std::domain_error("occlusion angle must be non-negative");
    if (phi == 0.0) return 1.0;
    const double k_phi = std::min(model.coefficient(phi), model.k_t);
    const double k = 1.0 - std::abs(model.k_t - k_phi) / model.k_t;
    return std::clamp(k, kMinScalingFactor, 1.0);
}

double compensated_speed(const AeroModel& model, double thrust_i, double k_i) {
    if (thrust_i < 0.0) throw std::domain_error("desired thrust must be non-negative");
    return std::sqrt(thrust_i / (model.k_t * k_i));
}

RotorCommand saturate_prioritized(const Eigen::Vector4d& desired_speeds,
                                  const RotorLimits& limits, const AllocationContext& ctx) {
    if (!(limits.omega_min < limits.omega_max)) {
        throw std::domain_error("rotor limits require omega_min < omega_max");
    }

    // Effective thrust delivered at speed w on rotor i is k_i * K_T * w^2,
    // so the speed box maps to a per-rotor thrust box.
    Eigen::Vector4d gain, t_des, t_lo, t_hi;
    for (int i = 0; i < 4; ++i) {
        gain[i] = ctx.scaling.k[i] * ctx.k_t;
        t_des[i] = gain[i] * desired_speeds[i] * desired_speeds[i];
        t_lo[i] = gain[i] * limits.omega_min * limits.omega_min;
        t_hi[i] = gain[i] * limits.omega_max * limits.omega_max;
    }

    RotorCommand cmd;
    cmd.desired_thrusts = t_des;

    bool inside = true;
    for (int i = 0; i < 4; ++i) {
        inside = inside && desired_speeds[i] >= limits.omega_min &&
                 desired_speeds[i] <= limits.omega_max;
    }
    if (inside) {
        cmd.corrected_speeds = desired_speeds;
        return cmd;
    }

    const Eigen::PartialPivLU<Eigen::Matrix4d> lu(ctx.alloc);
    const Eigen::Vector4d wrench = ctx.alloc * t_des;

    Eigen::Vector4d thrusts;
    bool solved = false;

    // Stage 1: keep collective thrust and roll/pitch, scale yaw by the
    // largest gamma in [0, 1] that fits the box.
    const Eigen::Vector4d d_yaw = lu.solve(Eigen::Vector4d(0.0, 0.0, 0.0, wrench[3]));
    const Eigen::Vector4d base_noyaw = t_des - d_yaw;  // gamma = 0
    auto [g_lo, g_hi] = feasible_interval(base_noyaw, d_yaw, t_lo, t_hi);
    g_lo = std::max(g_lo, 0.0);
    g_hi = std::min(g_hi, 1.0);
    if (g_lo <= g_hi) {
        thrusts = base_noyaw + g_hi * d_yaw;
        cmd.yaw_relaxed = g_hi < 1.0;
        solved = true;
    } else {
        // Stage 2: yaw dropped entirely, move collective thrust to the
        // nearest feasible value while roll/pitch stay exact.
        const Eigen::Vector4d d_coll = lu.solve(Eigen::Vector4d(1.0, 0.0, 0.0, 0.0));
        const Eigen::Vector4d base_nocoll = base_noyaw - wrench[0] * d_coll;
        auto [f_lo, f_hi] = feasible_interval(base_nocoll, d_coll, t_lo, t_hi);
        if (f_lo <= f_hi) {
            const double f = std::clamp(wrench[0], f_lo, f_hi);
            thrusts = base_nocoll + f * d_coll;
            cmd.yaw_relaxed = true;
            cmd.thrust_reduced = f != wrench[0];
            solved = true;
        }
    }

    if (!solved) {
        // Best effort: clamp speeds directly; roll/pitch no longer exact.
        cmd.infeasible = true;
        cmd.yaw_relaxed = true;
        cmd.thrust_reduced = true;
        for (int i = 0; i < 4; ++i) {
            cmd.corrected_speeds[i] =
                std::clamp(desired_speeds[i], limits.omega_min, limits.omega_max);
            cmd.saturated[i] = true;
        }
        return cmd;
    }

    for (int i = 0; i < 4; ++i) {
        const double w = std::sqrt(std::max(thrusts[i], 0.0) / gain[i]);
        cmd.corrected_speeds[i] = std::clamp(w, limits.omega_min, limits.omega_max);
        cmd.saturated[i] =
            std::abs(cmd.corrected_speeds[i] - desired_speeds[i]) > 1e-9 * limits.omega_max;
    }
    return cmd;
}

}  // namespace morphcomp
