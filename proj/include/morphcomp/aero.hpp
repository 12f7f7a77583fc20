#pragma once

#include <cstdint>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

namespace morphcomp {

// One bench measurement. Angles in radians, speed in rad/s (converted
// from RPM at ingestion), thrust in newtons.
struct BenchSample {
    double phi = 0.0;
    double omega = 0.0;
    double thrust = 0.0;
    int repetition = 1;
    std::string propeller_id;
};

// Quadratic thrust model T = k(phi) * omega^2 with a linear
// angle-dependent coefficient k(phi) = intercept + slope * phi.
struct AeroModel {
    double k_t = 0.0;              // nominal coefficient, N s^2 / rad^2
    double slope = 0.0;            // per radian of occlusion, negative
    double intercept = 0.0;        // fitted k(0)
    std::pair<double, double> phi_valid{0.0, 0.0};  // trusted range, rad
    std::string propeller_id;

    // k(phi): exact k_t at phi == 0, linear law elsewhere, clamped below
    // at 1e-3 * k_t so the compensation mapping stays finite.
    double coefficient(double phi) const;

    void validate() const;  // throws IdentificationError

    // Paper-shaped default: intercept = k_t, k(270deg) = 0.25 * k_t.
    // The k_t magnitude is a placeholder (only its order is published).
    static AeroModel paper_shaped(double k_t = 1.0e-8,
                                  std::string propeller_id = "5in-3blade");
};

struct ThrustResult {
    double thrust = 0.0;
    bool extrapolated = false;  // phi outside the model's validity range
};

ThrustResult thrust(const AeroModel& model, double phi, double omega);

// CSV schema (header required): phi_deg,rpm,thrust_n,rep,propeller_id
std::vector<BenchSample> ingest_bench_csv(const std::string& path);

// Collapses repetitions: one sample per (propeller_id, phi, omega) with
// the mean thrust. Groups with fewer than 3 repetitions pass with a warning.
std::vector<BenchSample> average_repetitions(const std::vector<BenchSample>& samples);

// Through-origin least squares of T against omega^2 over phi == 0 samples.
double fit_nominal(const std::vector<BenchSample>& samples);

struct FitReport {
    std::vector<std::pair<double, double>> k_estimates;  // (phi, k)
    double slope_stderr = 0.0;
    double max_residual = 0.0;  // on the k-vs-phi line, same units as k
    double r_squared = 1.0;
};

// Per-phi through-origin coefficient estimates, then an ordinary
// least-squares line of k against phi including the (0, k_t) anchor.
AeroModel fit_angle_coefficient(const std::vector<BenchSample>& samples, double k_t,
                                FitReport* report = nullptr);

struct PropellerPairRelation {
    std::string id_a, id_b;
    double slope_ratio = 0.0;
    double intercept_offset = 0.0;
    double intercept_ratio = 0.0;
    bool doubling_rule_pass = false;  // intercept ratio within 25% of 2x
};

struct CrossPropellerReport {
    std::vector<PropellerPairRelation> pairs;
    std::string table;  // printable summary
};

CrossPropellerReport cross_propeller_report(const std::vector<AeroModel>& models);

struct BenchProtocol {
    std::vector<double> phis;  // radians; default {0, 45, 90, 180, 270} deg
    double rpm_min = 100.0;
    double rpm_max = 19100.0;
    int steps = 40;
    double noise_sigma = 0.0;  // thrust noise, N
    int repetitions = 3;
    std::uint64_t seed = 0;

    static BenchProtocol paper_default();
};

std::vector<BenchSample> generate_synthetic_bench(const AeroModel& true_model,
                                                  const BenchProtocol& protocol);

// Model JSON: {propeller_id, k_t, slope_per_rad, intercept, phi_valid_deg: [lo, hi]}
std::string model_to_json(const AeroModel& model);
AeroModel model_from_json_string(const std::string& text);
AeroModel load_model(const std::string& path);
void save_model(const AeroModel& model, const std::string& path);

inline double rpm_to_rad_s(double rpm) { return rpm * 2.0 * std::numbers::pi / 60.0; }
inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

}  // namespace morphcomp
