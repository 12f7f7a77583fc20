#include "morphcomp/aero.hpp"
#include "morphcomp/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <string>
#include <vector>

using namespace morphcomp;

namespace {

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    REQUIRE(out.good());
    out << content;
}

struct TempFile {
    std::string path;
    explicit TempFile(std::string p) : path(std::move(p)) {}
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("thrust is zero at zero speed and quadratic in speed") {
    const auto m = AeroModel::paper_shaped();
    CHECK(thrust(m, 0.0, 0.0).thrust == 0.0);
    for (double phi : {0.0, deg_to_rad(45.0), deg_to_rad(120.0)}) {
        const double t1 = thrust(m, phi, 700.0).thrust;
        const double t2 = thrust(m, phi, 1400.0).thrust;
        CHECK(t2 == doctest::Approx(4.0 * t1).epsilon(1e-12));
    }
}

TEST_CASE("nominal thrust at 2000 rad/s with k_t 1e-8 is 0.04 N") {
    auto m = AeroModel::paper_shaped(1.0e-8);
    CHECK(thrust(m, 0.0, 2000.0).thrust == doctest::Approx(4.0e-2).epsilon(1e-12));
}

TEST_CASE("thrust is non-increasing in occlusion at fixed speed") {
    const auto m = AeroModel::paper_shaped();
    double last = thrust(m, 0.0, 1500.0).thrust;
    for (double phi = 0.1; phi <= m.phi_valid.second; phi += 0.1) {
        const double t = thrust(m, phi, 1500.0).thrust;
        CHECK(t <= last + 1e-15);
        last = t;
    }
}

TEST_CASE("thrust flags extrapolation outside the validity range") {
    const auto m = AeroModel::paper_shaped();
    CHECK_FALSE(thrust(m, deg_to_rad(100.0), 1000.0).extrapolated);
    CHECK(thrust(m, deg_to_rad(300.0), 1000.0).extrapolated);
    CHECK_FALSE(thrust(m, 0.0, 1000.0).extrapolated);
}

TEST_CASE("coefficient is clamped away from zero") {
    auto m = AeroModel::paper_shaped();
    m.slope = -10.0 * m.k_t;  // drives k(phi) negative well inside [0, 2pi]
    CHECK(m.coefficient(2.0) == doctest::Approx(1e-3 * m.k_t));
}

TEST_CASE("bench CSV ingestion converts units and validates rows") {
    TempFile f("test_bench.csv");
    write_file(f.path,
               "phi_deg,rpm,thrust_n,rep,propeller_id\n"
               "45,19100,0.35,1,5in-3blade\n");
    const auto samples = ingest_bench_csv(f.path);
    REQUIRE(samples.size() == 1);
    CHECK(samples[0].omega == doctest::Approx(19100.0 * 2.0 * 3.14159265358979 / 60.0));
    CHECK(samples[0].phi == doctest::Approx(deg_to_rad(45.0)));
    CHECK(samples[0].thrust == doctest::Approx(0.35));
    CHECK(samples[0].propeller_id == "5in-3blade");
}

TEST_CASE("empty bench CSV yields an empty list") {
    TempFile f("test_bench_empty.csv");
    write_file(f.path, "phi_deg,rpm,thrust_n,rep,propeller_id\n");
    CHECK(ingest_bench_csv(f.path).empty());
}

TEST_CASE("bench CSV rejects bad rows with the line number") {
    TempFile f("test_bench_bad.csv");
    write_file(f.path,
               "phi_deg,rpm,thrust_n,rep,propeller_id\n"
               "45,19100,0.35,1,5in-3blade\n"
               "45,19100,-0.1,1,5in-3blade\n");
    try {
        ingest_bench_csv(f.path);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }

    TempFile g("test_bench_rep.csv");
    write_file(g.path,
               "phi_deg,rpm,thrust_n,rep,propeller_id\n"
               "45,19100,0.35,4,5in-3blade\n");
    CHECK_THROWS_AS(ingest_bench_csv(g.path), ConfigError);

    TempFile h("test_bench_header.csv");
    write_file(h.path, "phi,rpm,thrust,rep,id\n");
    CHECK_THROWS_AS(ingest_bench_csv(h.path), ConfigError);
}

TEST_CASE("average_repetitions takes the arithmetic mean per group") {
    std::vector<BenchSample> samples;
    for (double t : {0.30, 0.32, 0.34}) {
        samples.push_back({deg_to_rad(45.0), 1000.0, t, static_cast<int>(samples.size()) + 1,
                           "5in-3blade"});
    }
    samples.push_back({deg_to_rad(90.0), 1000.0, 0.5, 1, "5in-3blade"});  // single rep
    const auto avg = average_repetitions(samples);
    REQUIRE(avg.size() == 2);
    CHECK(avg[0].thrust == doctest::Approx(0.32).epsilon(1e-15));
    CHECK(avg[1].thrust == doctest::Approx(0.5));
}

TEST_CASE("averaging three repetitions cuts the noise variance by three") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> noise(0.0, 1.0);
    const double sigma = 0.05;
    double var_sum = 0.0;
    const int groups = 4000;
    for (int gidx = 0; gidx < groups; ++gidx) {
        std::vector<BenchSample> g;
        for (int rep = 1; rep <= 3; ++rep) {
            g.push_back({1.0, 500.0 + gidx, 1.0 + sigma * noise(rng), rep, "p"});
        }
        const auto avg = average_repetitions(g);
        REQUIRE(avg.size() == 1);
        var_sum += (avg[0].thrust - 1.0) * (avg[0].thrust - 1.0);
    }
    const double var = var_sum / groups;
    CHECK(var == doctest::Approx(sigma * sigma / 3.0).epsilon(0.15));
}

TEST_CASE("fit_nominal recovers k_t exactly from a noiseless sweep") {
    const auto truth = AeroModel::paper_shaped(1.0e-8);
    BenchProtocol protocol = BenchProtocol::paper_default();
    const auto bench = average_repetitions(generate_synthetic_bench(truth, protocol));
    CHECK(fit_nominal(bench) == doctest::Approx(1.0e-8).epsilon(1e-12));
}

TEST_CASE("fit_nominal requires five distinct speeds at zero occlusion") {
    const auto truth = AeroModel::paper_shaped();
    BenchProtocol protocol = BenchProtocol::paper_default();
    protocol.steps = 4;
    const auto bench = generate_synthetic_bench(truth, protocol);
    CHECK_THROWS_AS(fit_nominal(bench), IdentificationError);
}

TEST_CASE("fit_nominal stays within 1% under 1% thrust noise") {
    const auto truth = AeroModel::paper_shaped(1.0e-8);
    const double max_thrust = truth.k_t * rpm_to_rad_s(19100.0) * rpm_to_rad_s(19100.0);
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        BenchProtocol protocol = BenchProtocol::paper_default();
        protocol.noise_sigma = 0.01 * max_thrust;
        protocol.seed = seed;
        const auto bench = average_repetitions(generate_synthetic_bench(truth, protocol));
        if (std::abs(fit_nominal(bench) / truth.k_t - 1.0) < 0.01) ++ok;
    }
    CHECK(ok >= 99);
}

TEST_CASE("fit_angle_coefficient round trips a noiseless generator") {
    const auto truth = AeroModel::paper_shaped(1.0e-8);
    const auto bench =
        average_repetitions(generate_synthetic_bench(truth, BenchProtocol::paper_default()));
    const double k_t = fit_nominal(bench);
    const auto fitted = fit_angle_coefficient(bench, k_t);
    CHECK(fitted.slope == doctest::Approx(truth.slope).epsilon(1e-6));
    CHECK(fitted.intercept == doctest::Approx(truth.intercept).epsilon(1e-6));
}

TEST_CASE("fit_angle_coefficient needs two occlusion angles and a negative trend") {
    const auto truth = AeroModel::paper_shaped();
    BenchProtocol protocol = BenchProtocol::paper_default();
    protocol.phis = {0.0, deg_to_rad(45.0)};
    const auto bench = generate_synthetic_bench(truth, protocol);
    CHECK_THROWS_AS(fit_angle_coefficient(bench, truth.k_t), IdentificationError);

    // Thrust increasing with occlusion contradicts the model.
    std::vector<BenchSample> rising;
    for (double phi_deg : {45.0, 90.0, 180.0}) {
        for (double rpm = 1000.0; rpm <= 19000.0; rpm += 1000.0) {
            const double w = rpm_to_rad_s(rpm);
            rising.push_back(
                {deg_to_rad(phi_deg), w, 1e-8 * (1.0 + phi_deg / 90.0) * w * w, 1, "p"});
        }
    }
    CHECK_THROWS_AS(fit_angle_coefficient(rising, 1e-8), IdentificationError);
}

TEST_CASE("anchors at 90% and 25% of nominal interpolate on the fitted line") {
    // Bench data shaped like the reported thrust fractions: k(45deg) = 0.90 k_t,
    // k(270deg) = 0.25 k_t.
    const double k_t = 1.0e-8;
    std::vector<BenchSample> bench;
    for (auto [phi_deg, frac] : {std::pair{45.0, 0.90}, std::pair{270.0, 0.25}}) {
        for (double rpm = 100.0; rpm <= 19100.0; rpm += 500.0) {
            const double w = rpm_to_rad_s(rpm);
            bench.push_back({deg_to_rad(phi_deg), w, frac * k_t * w * w, 1, "5in-3blade"});
        }
    }
    const auto fitted = fit_angle_coefficient(bench, k_t);
    const double k45 = fitted.intercept + fitted.slope * deg_to_rad(45.0);
    const double k90 = fitted.intercept + fitted.slope * deg_to_rad(90.0);
    const double k270 = fitted.intercept + fitted.slope * deg_to_rad(270.0);
    // Line through the two anchors alone predicts 0.77 k_t at 90 degrees.
    CHECK(std::abs(k90 - 0.77 * k_t) <= 0.02 * k_t);
    CHECK(k45 / k_t == doctest::Approx(0.90).epsilon(0.03));
    CHECK(k270 / k_t == doctest::Approx(0.25).epsilon(0.12));
}

TEST_CASE("synthetic bench honors the sweep protocol") {
    const auto truth = AeroModel::paper_shaped();
    const auto bench = generate_synthetic_bench(truth, BenchProtocol::paper_default());
    // 5 occlusion angles x 40 steps x 3 repetitions
    CHECK(bench.size() == 5 * 40 * 3);
    double rpm_min = 1e12, rpm_max = 0.0;
    for (const auto& s : bench) {
        rpm_min = std::min(rpm_min, s.omega);
        rpm_max = std::max(rpm_max, s.omega);
    }
    CHECK(rpm_min == doctest::Approx(rpm_to_rad_s(100.0)));
    CHECK(rpm_max == doctest::Approx(rpm_to_rad_s(19100.0)));
}

TEST_CASE("cross propeller report tabulates offsets and the doubling rule") {
    auto a = AeroModel::paper_shaped(1.0e-8, "5in-2blade");
    auto b = AeroModel::paper_shaped(1.0e-8, "5in-3blade");
    b.intercept = a.intercept - 0.4e-8;
    b.slope = a.slope;
    auto c = AeroModel::paper_shaped(2.0e-8, "6in-2blade");

    CHECK(cross_propeller_report({a}).pairs.empty());

    const auto rep = cross_propeller_report({a, b, c});
    REQUIRE(rep.pairs.size() == 3);
    CHECK(rep.pairs[0].intercept_offset == doctest::Approx(0.4e-8));
    CHECK(rep.pairs[0].slope_ratio == doctest::Approx(1.0));
    // 5in vs 6in intercept ratio 2.0 satisfies the doubling rule.
    CHECK(rep.pairs[1].doubling_rule_pass);
}

TEST_CASE("model JSON round trips") {
    const auto m = AeroModel::paper_shaped(3.2e-8, "6in-3blade");
    const auto back = model_from_json_string(model_to_json(m));
    CHECK(back.k_t == doctest::Approx(m.k_t).epsilon(1e-15));
    CHECK(back.slope == doctest::Approx(m.slope).epsilon(1e-12));
    CHECK(back.intercept == doctest::Approx(m.intercept).epsilon(1e-12));
    CHECK(back.phi_valid.second == doctest::Approx(m.phi_valid.second).epsilon(1e-12));
    CHECK(back.propeller_id == m.propeller_id);
    CHECK_THROWS_AS(model_from_json_string("{not json"), ConfigError);
    CHECK_THROWS_AS(model_from_json_string("{\"k_t\": 1}"), ConfigError);
}
