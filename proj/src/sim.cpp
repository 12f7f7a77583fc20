#include "morphcomp/sim.hpp"

#include "morphcomp/errors.hpp"
#include "morphcomp/log.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace morphcomp {

namespace {

constexpr double kGravity = 9.81;

using StateVec = Eigen::Matrix<double, 17, 1>;  // pos 3, vel 3, quat 4, rate 3, motors 4

StateVec pack(const VehicleState& s) {
    StateVec x;
    x.segment<3>(0) = s.position;
    x.segment<3>(3) = s.velocity;
    x[6] = s.attitude.w();
    x[7] = s.attitude.x();
    x[8] = s.attitude.y();
    x[9] = s.attitude.z();
    x.segment<3>(10) = s.angular_rate;
    x.segment<4>(13) = s.motor_speeds;
    return x;
}

VehicleState unpack(const StateVec& x) {
    VehicleState s;
    s.position = x.segment<3>(0);
    s.velocity = x.segment<3>(3);
    s.attitude = Eigen::Quaterniond(x[6], x[7], x[8], x[9]);
    s.angular_rate = x.segment<3>(10);
    s.motor_speeds = x.segment<4>(13);
    return s;
}

struct PlantContext {
    const Vec4* setpoints;
    const OcclusionProfile* occ;
    const AeroModel* aero;
    const VehicleParams* params;
    std::array<double, 4> k_phi;  // plant coefficient per propeller, cached
};

StateVec derivative(const StateVec& x, const PlantContext& ctx) {
    const VehicleParams& p = *ctx.params;
    StateVec dx;

    const Eigen::Quaterniond q(x[6], x[7], x[8], x[9]);
    const Vec3 omega = x.segment<3>(10);
    const Vec4 motors = x.segment<4>(13);

    Vec4 thrusts;
    Vec3 torque = Vec3::Zero();
    double collective = 0.0;
    for (int i = 0; i < 4; ++i) {
        const double t = ctx.k_phi[i] * motors[i] * motors[i];
        thrusts[i] = t;
        collective += t;
        const Vec2& r = ctx.occ->prop_centers[i];
        torque.x() += r.y() * t;
        torque.y() += -r.x() * t;
        torque.z() += p.spin[i] * p.yaw_drag_coefficient * t;
    }

    const Eigen::Matrix3d rot = q.toRotationMatrix();
    const Vec3 force_world = rot.col(2) * collective - Vec3(0.0, 0.0, p.mass * kGravity);

    dx.segment<3>(0) = x.segment<3>(3);
    dx.segment<3>(3) = force_world / p.mass;

    const Eigen::Quaterniond omega_q(0.0, omega.x(), omega.y(), omega.z());
    const Eigen::Quaterniond q_dot = q * omega_q;
    dx[6] = 0.5 * q_dot.w();
    dx[7] = 0.5 * q_dot.x();
    dx[8] = 0.5 * q_dot.y();
    dx[9] = 0.5 * q_dot.z();

    const Vec3 j_omega = p.inertia_diag.cwiseProduct(omega);
    dx.segment<3>(10) =
        (torque - omega.cross(j_omega)).cwiseQuotient(p.inertia_diag);

    dx.segment<4>(13) = (*ctx.setpoints - motors) / p.motor_tau;
    return dx;
}

}  // namespace

VehicleState step(const VehicleState& state, const Vec4& speed_setpoints,
                  const OcclusionProfile& occ, const AeroModel& plant,
                  const VehicleParams& params, double dt) {
    if (!(dt > 0.0 && dt <= 0.01)) {
        throw std::domain_error("plant timestep must be in (0, 0.01] s");
    }
    PlantContext ctx{&speed_setpoints, &occ, &plant, &params, {}};
    for (int i = 0; i < 4; ++i) ctx.k_phi[i] = plant.coefficient(occ.phi[i]);

    const StateVec x0 = pack(state);
    const StateVec k1 = derivative(x0, ctx);
    const StateVec k2 = derivative(x0 + 0.5 * dt * k1, ctx);
    const StateVec k3 = derivative(x0 + 0.5 * dt * k2, ctx);
    const StateVec k4 = derivative(x0 + dt * k3, ctx);
    StateVec x1 = x0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    if (!x1.allFinite()) {
        throw SimulationError("non-finite state after integration step");
    }

    VehicleState next = unpack(x1);
    next.attitude.normalize();
    next.motor_speeds =
        next.motor_speeds.cwiseMax(0.0).cwiseMin(params.limits.omega_max);
    return next;
}

TrajectorySample trajectory_sample(const TrajectorySpec& spec, double t) {
    if (t < 0.0) throw std::domain_error("trajectory time must be non-negative");
    TrajectorySample s;
    switch (spec.kind) {
        case TrajectorySpec::Kind::Hover:
            s.position = spec.hover_point;
            break;
        case TrajectorySpec::Kind::Circle:
        case TrajectorySpec::Kind::CircleVarying: {
            const double w = spec.speed / spec.radius;
            const double a = w * t;
            s.position = Vec3(spec.radius * std::cos(a), spec.radius * std::sin(a), 0.0);
            s.velocity =
                Vec3(-spec.radius * w * std::sin(a), spec.radius * w * std::cos(a), 0.0);
            s.acceleration = Vec3(-spec.radius * w * w * std::cos(a),
                                  -spec.radius * w * w * std::sin(a), 0.0);
            if (spec.kind == TrajectorySpec::Kind::Circle) {
                s.position.z() = spec.height;
            } else {
                // Sinusoidal height, one full cycle per lap.
                const double mid = 0.5 * (spec.z_min + spec.z_max);
                const double amp = 0.5 * (spec.z_max - spec.z_min);
                s.position.z() = mid + amp * std::sin(a);
                s.velocity.z() = amp * w * std::cos(a);
                s.acceleration.z() = -amp * w * w * std::sin(a);
            }
            break;
        }
    }
    return s;
}

Scenario::Scenario() : controller_model(default_flight_model()), plant_model(controller_model) {}

void Scenario::validate() const {
    if (!(dt > 0.0 && dt <= 0.01)) throw ConfigError("scenario dt must be in (0, 0.01]");
    if (!(duration > 0.0)) throw ConfigError("scenario duration must be positive");
    for (std::size_t i = 1; i < morph_schedule.size(); ++i) {
        if (morph_schedule[i].t < morph_schedule[i - 1].t) {
            throw ConfigError("morph schedule times must be sorted");
        }
    }
    for (std::size_t i = 1; i < compensation_schedule.size(); ++i) {
        if (compensation_schedule[i].t < compensation_schedule[i - 1].t) {
            throw ConfigError("compensation schedule times must be sorted");
        }
    }
    initial_morphology.validate();
    for (const auto& e : morph_schedule) e.target.validate();
    gains.validate();
    geometry.validate();
}

MorphologyState morph_at(const Scenario& scenario, double t) {
    MorphologyState current = scenario.initial_morphology;
    for (const auto& event : scenario.morph_schedule) {
        if (t < event.t) break;
        if (event.duration <= 0.0 || t >= event.t + event.duration) {
            current = event.target;
            continue;
        }
        const double frac = (t - event.t) / event.duration;
        MorphologyState blended;
        for (int i = 0; i < 4; ++i) {
            blended.theta[i] =
                current.theta[i] + frac * (event.target.theta[i] - current.theta[i]);
        }
        return blended;
    }
    return current;
}

bool compensation_at(const Scenario& scenario, double t) {
    bool enabled = scenario.compensation;
    for (const auto& event : scenario.compensation_schedule) {
        if (t < event.t) break;
        enabled = event.enabled;
    }
    return enabled;
}

AeroModel default_flight_model() {
    // The bench-scale k_t (~1e-8) cannot hover a 0.58 kg vehicle inside
    // the rotor speed limits, so flight scenarios use the same linear
    // shape rescaled to a hover speed of ~1000 rad/s.
    return AeroModel::paper_shaped(1.4e-6, "5in-3blade-flight");
}

ScenarioResult run_scenario(const Scenario& scenario) {
    scenario.validate();

    const int steps = static_cast<int>(std::llround(scenario.duration / scenario.dt));
    ScenarioResult result;
    result.t.reserve(steps);

    std::mt19937_64 rng(scenario.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    CascadedController controller(scenario.gains, scenario.vehicle.mass,
                                  scenario.vehicle.inertia_diag);

    const TrajectorySample ref0 = trajectory_sample(scenario.trajectory, 0.0);
    VehicleState state;
    state.position = ref0.position;
    state.velocity = ref0.velocity;
    const double hover_speed =
        std::sqrt(scenario.vehicle.mass * kGravity / (4.0 * scenario.controller_model.k_t));
    state.motor_speeds.setConstant(hover_speed);

    MorphologyState morph = morph_at(scenario, 0.0);
    std::array<double, 4> cached_theta{std::numeric_limits<double>::quiet_NaN(), 0, 0, 0};
    OcclusionProfile occ;
    Mat4 alloc;

    for (int n = 0; n < steps; ++n) {
        const double t = n * scenario.dt;
        morph = morph_at(scenario, t);

        // Geometry gate: the occlusion angles and the mixer are refreshed
        // only when the morphology actually changed.
        if (morph.theta != cached_theta) {
            occ = occlusion_angle(scenario.geometry, morph);
            alloc = allocation_matrix(scenario.geometry, morph,
                                      scenario.vehicle.yaw_drag_coefficient,
                                      scenario.vehicle.spin);
            cached_theta = morph.theta;
        }

        const TrajectorySample ref = trajectory_sample(scenario.trajectory, t);

        VehicleState estimated = state;
        if (scenario.sensor_noise_sigma > 0.0) {
            for (int i = 0; i < 3; ++i) {
                estimated.position[i] += scenario.sensor_noise_sigma * gauss(rng);
                estimated.velocity[i] += scenario.sensor_noise_sigma * gauss(rng);
            }
        }

        const Vec3 accel_des = position_control(estimated, ref, scenario.gains);
        const WrenchCommand wrench = controller.attitude_control(estimated, accel_des, ref.yaw);
        const Vec4 thrusts = allocate(wrench, alloc).cwiseMax(0.0);

        const bool comp = compensation_at(scenario, t);
        ScalingFactors scaling;
        Vec4 desired_speeds;
        for (int i = 0; i < 4; ++i) {
            scaling.k[i] = comp ? scaling_factor(scenario.controller_model, occ.phi[i]) : 1.0;
            desired_speeds[i] =
                compensated_speed(scenario.controller_model, thrusts[i], scaling.k[i]);
        }

        const AllocationContext ctx{alloc, scaling, scenario.controller_model.k_t};
        const RotorCommand cmd =
            saturate_prioritized(desired_speeds, scenario.vehicle.limits, ctx);
        if (cmd.infeasible) {
            result.saturation_infeasible_seen = true;
            log(LogLevel::Warn, "saturation infeasible at t = " + std::to_string(t));
        }

        result.t.push_back(t);
        result.reference.push_back(ref.position);
        result.true_position.push_back(state.position);
        result.estimated.push_back(estimated.position);
        result.phi.push_back(occ.phi);
        result.omega_cmd.push_back(cmd.corrected_speeds);
        result.saturated.push_back(cmd.saturated);
        result.compensation_active.push_back(comp);

        try {
            state = step(state, cmd.corrected_speeds, occ, scenario.plant_model,
                         scenario.vehicle, scenario.dt);
        } catch (const SimulationError& e) {
            throw SimulationError(std::string(e.what()) + " at t = " + std::to_string(t));
        }
    }

    result.final_state = state;
    return result;
}

std::vector<SegmentSummary> summarize(const ScenarioResult& result,
                                      const std::vector<SegmentSpec>& segments) {
    std::vector<SegmentSummary> out;
    for (const auto& seg : segments) {
        SegmentSummary s;
        s.label = seg.label;
        s.t0 = seg.t0;
        s.t1 = seg.t1;

        const double t_mid = 0.5 * (seg.t0 + seg.t1);
        Vec3 abs_sum = Vec3::Zero();
        int steady_count = 0;
        double e_sum = 0.0, e_sq_sum = 0.0;
        int count = 0;
        for (std::size_t i = 0; i < result.t.size(); ++i) {
            const double t = result.t[i];
            if (t < seg.t0 || t > seg.t1) continue;
            const Vec3 err = result.estimated[i] - result.reference[i];
            const double e = err.norm();
            e_sum += e;
            e_sq_sum += e * e;
            ++count;
            if (t >= t_mid) {
                abs_sum += err.cwiseAbs();
                ++steady_count;
            }
        }
        if (count < 10) {
            log(LogLevel::Warn, "segment '" + seg.label + "' has fewer than 10 samples, skipped");
            continue;
        }
        s.samples = count;
        s.euclid_mean = e_sum / count;
        s.euclid_std = std::sqrt(std::max(0.0, e_sq_sum / count - s.euclid_mean * s.euclid_mean));
        s.mean_abs_error = abs_sum / std::max(1, steady_count);
        out.push_back(std::move(s));
    }
    return out;
}

void write_result_csv(const ScenarioResult& result, std::ostream& out) {
    out << "t,ref_x,ref_y,ref_z,est_x,est_y,est_z,"
           "phi_1,phi_2,phi_3,phi_4,"
           "omega_cmd_1,omega_cmd_2,omega_cmd_3,omega_cmd_4,"
           "sat_1,sat_2,sat_3,sat_4\n";
    out.precision(17);
    for (std::size_t i = 0; i < result.t.size(); ++i) {
        out << result.t[i];
        for (int a = 0; a < 3; ++a) out << "," << result.reference[i][a];
        for (int a = 0; a < 3; ++a) out << "," << result.estimated[i][a];
        for (int a = 0; a < 4; ++a) out << "," << result.phi[i][a];
        for (int a = 0; a < 4; ++a) out << "," << result.omega_cmd[i][a];
        for (int a = 0; a < 4; ++a) out << "," << (result.saturated[i][a] ? 1 : 0);
        out << "\n";
    }
}

std::string summaries_to_json(const std::vector<SegmentSummary>& summaries) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& s : summaries) {
        j.push_back({{"label", s.label},
                     {"t0", s.t0},
                     {"t1", s.t1},
                     {"samples", s.samples},
                     {"mean_abs_error",
                      {{"x", s.mean_abs_error.x()},
                       {"y", s.mean_abs_error.y()},
                       {"z", s.mean_abs_error.z()}}},
                     {"euclidean", {{"mean", s.euclid_mean}, {"std", s.euclid_std}}}});
    }
    return nlohmann::json{{"segments", j}}.dump(2);
}

namespace {

MorphologyState resolve_morphology(const nlohmann::json& j, const MorphologyPresets& presets) {
    if (j.is_string()) {
        const std::string name = j.get<std::string>();
        if (name == "X") return presets.x;
        if (name == "O") return presets.o;
        if (name == "O_asym") return presets.o_asym;
        throw ConfigError("unknown morphology preset: " + name);
    }
    if (j.is_array() && j.size() == 4) {
        MorphologyState m;
        for (int i = 0; i < 4; ++i) m.theta[i] = j[i].get<double>();
        return m;
    }
    throw ConfigError("morphology must be a preset name or an array of 4 angles");
}

}  // namespace

Scenario scenario_from_json_string(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("scenario JSON parse error: " + std::string(e.what()));
    }

    Scenario sc;
    GeometryConfig geom_cfg = default_geometry_config();
    try {
        if (j.contains("geometry")) {
            const auto& g = j.at("geometry");
            geom_cfg.geometry = VehicleGeometry::standard(
                g.value("body_half_side", 0.05), g.value("arm_length", 0.09),
                g.value("prop_radius", 0.0635));
            if (g.contains("presets")) {
                const auto& p = g.at("presets");
                geom_cfg.presets.x = resolve_morphology(p.at("X"), geom_cfg.presets);
                geom_cfg.presets.o = resolve_morphology(p.at("O"), geom_cfg.presets);
                geom_cfg.presets.o_asym = resolve_morphology(p.at("O_asym"), geom_cfg.presets);
            }
        }
        sc.geometry = geom_cfg.geometry;

        const auto& traj = j.at("trajectory");
        const std::string type = traj.at("type").get<std::string>();
        if (type == "hover") {
            sc.trajectory.kind = TrajectorySpec::Kind::Hover;
            if (traj.contains("point")) {
                for (int i = 0; i < 3; ++i) sc.trajectory.hover_point[i] = traj.at("point")[i];
            }
        } else if (type == "circle" || type == "circle_varying") {
            sc.trajectory.kind = type == "circle" ? TrajectorySpec::Kind::Circle
                                                  : TrajectorySpec::Kind::CircleVarying;
            sc.trajectory.radius = traj.value("radius", 1.5);
            sc.trajectory.speed = traj.value("speed", 0.6);
            sc.trajectory.height = traj.value("height", 1.5);
            sc.trajectory.z_min = traj.value("z_min", 1.25);
            sc.trajectory.z_max = traj.value("z_max", 1.75);
        } else {
            throw ConfigError("unknown trajectory type: " + type);
        }

        if (j.contains("initial_configuration")) {
            sc.initial_morphology =
                resolve_morphology(j.at("initial_configuration"), geom_cfg.presets);
        }
        for (const auto& e : j.value("morph_schedule", nlohmann::json::array())) {
            MorphEvent ev;
            ev.t = e.at("t").get<double>();
            ev.target = resolve_morphology(e.at("preset"), geom_cfg.presets);
            ev.duration = e.value("duration", 0.5);
            sc.morph_schedule.push_back(std::move(ev));
        }
        sc.compensation = j.value("compensation", true);
        for (const auto& e : j.value("compensation_schedule", nlohmann::json::array())) {
            sc.compensation_schedule.push_back(
                {e.at("t").get<double>(), e.at("enabled").get<bool>()});
        }

        sc.controller_model =
            j.contains("model") ? model_from_json_string(j.at("model").dump())
                                : default_flight_model();
        sc.plant_model = sc.controller_model;
        if (j.contains("plant_mismatch")) {
            const auto& m = j.at("plant_mismatch");
            sc.plant_model.slope *= 1.0 + m.value("slope_pct", 0.0) / 100.0;
            sc.plant_model.intercept *= 1.0 + m.value("intercept_pct", 0.0) / 100.0;
        }

        if (j.contains("vehicle")) {
            const auto& v = j.at("vehicle");
            sc.vehicle.mass = v.value("mass", sc.vehicle.mass);
            if (v.contains("inertia")) {
                for (int i = 0; i < 3; ++i) sc.vehicle.inertia_diag[i] = v.at("inertia")[i];
            }
            sc.vehicle.motor_tau = v.value("motor_tau", sc.vehicle.motor_tau);
            sc.vehicle.yaw_drag_coefficient =
                v.value("yaw_drag_coefficient", sc.vehicle.yaw_drag_coefficient);
            sc.vehicle.limits.omega_min = v.value("omega_min", sc.vehicle.limits.omega_min);
            sc.vehicle.limits.omega_max = v.value("omega_max", sc.vehicle.limits.omega_max);
        }
        if (j.contains("gains")) {
            const auto& g = j.at("gains");
            sc.gains.kp_pos = g.value("kp_pos", sc.gains.kp_pos);
            sc.gains.kd_pos = g.value("kd_pos", sc.gains.kd_pos);
            sc.gains.kp_att = g.value("kp_att", sc.gains.kp_att);
            sc.gains.kd_att = g.value("kd_att", sc.gains.kd_att);
            sc.gains.kp_yaw = g.value("kp_yaw", sc.gains.kp_yaw);
        }

        sc.sensor_noise_sigma = j.value("sensor_noise_sigma", 0.0);
        sc.duration = j.value("duration", 10.0);
        sc.dt = j.value("dt", 0.002);
        sc.seed = j.value("seed", std::uint64_t{0});
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("scenario JSON schema error: " + std::string(e.what()));
    }

    sc.validate();
    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return scenario_from_json_string(ss.str());
}

}  // namespace morphcomp
