#include "morphcomp/cli.hpp"

#include "morphcomp/aero.hpp"
#include "morphcomp/errors.hpp"
#include "morphcomp/log.hpp"
#include "morphcomp/sim.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace morphcomp {

namespace fs = std::filesystem;

namespace {

constexpr double kGravity = 9.81;

std::string now_iso8601() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    std::ostringstream ss;
    ss << std::put_time(&tm, "%FT%TZ");
    return ss.str();
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << content;
}

void write_manifest(const fs::path& out_dir, const std::string& command,
                    const nlohmann::json& inputs, std::uint64_t seed) {
    nlohmann::json manifest{{"command", command},
                            {"inputs", inputs},
                            {"seed", seed},
                            {"output_directory", out_dir.string()},
                            {"tool_version", kToolVersion},
                            {"timestamp", now_iso8601()}};
    write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

// Mean signed estimate-minus-reference error over [t0, t1].
Vec3 mean_error(const ScenarioResult& r, double t0, double t1) {
    Vec3 sum = Vec3::Zero();
    int n = 0;
    for (std::size_t i = 0; i < r.t.size(); ++i) {
        if (r.t[i] < t0 || r.t[i] > t1) continue;
        sum += r.estimated[i] - r.reference[i];
        ++n;
    }
    return n > 0 ? Vec3(sum / n) : Vec3::Zero();
}

double mean_euclid(const ScenarioResult& r, double t0, double t1) {
    double sum = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < r.t.size(); ++i) {
        if (r.t[i] < t0 || r.t[i] > t1) continue;
        sum += (r.estimated[i] - r.reference[i]).norm();
        ++n;
    }
    return n > 0 ? sum / n : 0.0;
}

std::vector<SegmentSpec> default_segments(const Scenario& sc) {
    std::vector<double> cuts{0.0, sc.duration};
    for (const auto& e : sc.morph_schedule) {
        cuts.push_back(e.t);
        cuts.push_back(std::min(e.t + e.duration, sc.duration));
    }
    for (const auto& e : sc.compensation_schedule) cuts.push_back(e.t);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-9; }),
               cuts.end());
    std::vector<SegmentSpec> segs;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (cuts[i + 1] - cuts[i] < 0.1) continue;
        segs.push_back({"segment_" + std::to_string(segs.size()), cuts[i], cuts[i + 1]});
    }
    return segs;
}

void write_run_outputs(const fs::path& dir, const Scenario& sc, const ScenarioResult& result) {
    fs::create_directories(dir);
    std::ofstream csv(dir / "timeseries.csv");
    if (!csv) throw ConfigError("cannot write " + (dir / "timeseries.csv").string());
    write_result_csv(result, csv);
    write_text_file(dir / "summary.json",
                    summaries_to_json(summarize(result, default_segments(sc))) + "\n");
}

}  // namespace

int cmd_identify(const IdentifyOptions& opts) {
    try {
        const auto samples = ingest_bench_csv(opts.bench_csv);
        const auto averaged = average_repetitions(samples);
        const double k_t = fit_nominal(averaged);
        FitReport report;
        const AeroModel model = fit_angle_coefficient(averaged, k_t, &report);
        save_model(model, opts.out_model_json);

        nlohmann::json fit{{"k_t", k_t},
                           {"slope_per_rad", model.slope},
                           {"intercept", model.intercept},
                           {"r_squared", report.r_squared},
                           {"max_residual", report.max_residual},
                           {"slope_stderr", report.slope_stderr},
                           {"k_estimates", nlohmann::json::array()}};
        for (const auto& [phi, k] : report.k_estimates) {
            fit["k_estimates"].push_back({{"phi_deg", rad_to_deg(phi)}, {"k", k}});
        }
        const fs::path out(opts.out_model_json);
        write_text_file(out.parent_path().empty()
                            ? fs::path("fit_report.json")
                            : out.parent_path() / "fit_report.json",
                        fit.dump(2) + "\n");
        std::cout << "identified " << model.propeller_id << ": k_t = " << k_t
                  << ", slope = " << model.slope << " /rad, R^2 = " << report.r_squared
                  << "\n";
        return kExitOk;
    } catch (const ConfigError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const IdentificationError& e) {
        std::cerr << "identification error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntimeError;
    }
}

int cmd_run(const RunOptions& opts) {
    Scenario sc;
    try {
        sc = load_scenario(opts.scenario_path);
        if (opts.compensation_override) {
            sc.compensation = *opts.compensation_override;
            sc.compensation_schedule.clear();
        }
        if (opts.seed_override) sc.seed = *opts.seed_override;
    } catch (const std::exception& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInputError;
    }
    try {
        const ScenarioResult result = run_scenario(sc);
        const fs::path dir(opts.out_dir);
        write_run_outputs(dir, sc, result);
        nlohmann::json inputs{{"scenario", opts.scenario_path},
                              {"compensation", sc.compensation}};
        if (opts.compensation_override) inputs["compensation_override"] = true;
        write_manifest(dir, "run", inputs, sc.seed);
        std::cout << "wrote " << (dir / "timeseries.csv").string() << "\n";
        return kExitOk;
    } catch (const SimulationError& e) {
        std::cerr << "simulation failure: " << e.what() << "\n";
        return kExitRuntimeError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntimeError;
    }
}

namespace {

struct SuiteRun {
    std::string name;
    Scenario scenario;
    double seg_start0 = 0.0, seg_start1 = 0.0;  // initial-configuration window
    double seg_final0 = 0.0, seg_final1 = 0.0;  // final-configuration window
};

Scenario base_scenario() {
    Scenario sc;
    sc.duration = 16.0;
    return sc;
}

std::vector<SuiteRun> build_suite(bool disable_compensation) {
    const GeometryConfig cfg = default_geometry_config();
    std::vector<SuiteRun> runs;

    auto hover = [&](const std::string& name, const MorphologyState& start,
                     const std::vector<MorphEvent>& schedule, bool comp,
                     const std::vector<CompensationEvent>& toggles = {}) {
        SuiteRun r;
        r.name = name;
        r.scenario = base_scenario();
        r.scenario.trajectory.kind = TrajectorySpec::Kind::Hover;
        r.scenario.initial_morphology = start;
        r.scenario.morph_schedule = schedule;
        r.scenario.compensation = comp && !disable_compensation;
        if (!disable_compensation) r.scenario.compensation_schedule = toggles;
        r.seg_start0 = 2.0;
        r.seg_start1 = 5.5;
        r.seg_final0 = 11.0;
        r.seg_final1 = 16.0;
        runs.push_back(std::move(r));
    };

    const std::vector<MorphEvent> to_o{{6.0, cfg.presets.o, 0.5}};
    const std::vector<MorphEvent> to_x{{6.0, cfg.presets.x, 0.5}};
    const std::vector<MorphEvent> to_o_asym{{6.0, cfg.presets.o_asym, 0.5}};

    hover("hover_X_comp_on", cfg.presets.x, {}, true);
    hover("hover_X_comp_off", cfg.presets.x, {}, false);
    hover("hover_X_to_O_nc", cfg.presets.x, to_o, false);
    hover("hover_X_to_O_c", cfg.presets.x, to_o, true);
    hover("hover_O_to_X_nc", cfg.presets.o, to_x, false);
    hover("hover_O_to_X_c", cfg.presets.o, to_x, true);
    hover("hover_O_comp_on_to_off", cfg.presets.o, {}, true, {{8.0, false}});
    hover("hover_O_comp_off_to_on", cfg.presets.o, {}, false, {{8.0, true}});
    hover("hover_X_to_Oasym_nc", cfg.presets.x, to_o_asym, false);
    hover("hover_X_to_Oasym_c", cfg.presets.x, to_o_asym, true);

    auto forward = [&](const std::string& name, TrajectorySpec::Kind kind,
                       const MorphologyState& start, const std::vector<MorphEvent>& schedule,
                       bool comp, const std::vector<CompensationEvent>& toggles = {}) {
        SuiteRun r;
        r.name = name;
        r.scenario = base_scenario();
        r.scenario.trajectory.kind = kind;
        r.scenario.duration = 24.0;
        r.scenario.initial_morphology = start;
        r.scenario.morph_schedule = schedule;
        r.scenario.compensation = comp && !disable_compensation;
        if (!disable_compensation) r.scenario.compensation_schedule = toggles;
        r.seg_start0 = 3.0;
        r.seg_start1 = 9.5;
        r.seg_final0 = 14.0;
        r.seg_final1 = 24.0;
        runs.push_back(std::move(r));
    };

    const std::vector<MorphEvent> to_o_fwd{{10.0, cfg.presets.o, 0.5}};
    for (auto [kind, prefix] :
         {std::pair{TrajectorySpec::Kind::Circle, std::string("circle")},
          std::pair{TrajectorySpec::Kind::CircleVarying, std::string("circle_vary")}}) {
        forward(prefix + "_X_to_O_nc", kind, cfg.presets.x, to_o_fwd, false);
        forward(prefix + "_Onc_to_Oc", kind, cfg.presets.o, {}, false, {{10.0, true}});
        forward(prefix + "_X_to_O_c", kind, cfg.presets.x, to_o_fwd, true);
    }
    return runs;
}

const ScenarioResult& find_result(const std::vector<SuiteRun>& runs,
                                  const std::vector<ScenarioResult>& results,
                                  const std::string& name) {
    for (std::size_t i = 0; i < runs.size(); ++i) {
        if (runs[i].name == name) return results[i];
    }
    throw SimulationError("suite run not found: " + name);
}

const SuiteRun& find_run(const std::vector<SuiteRun>& runs, const std::string& name) {
    for (const auto& r : runs) {
        if (r.name == name) return r;
    }
    throw SimulationError("suite run not found: " + name);
}

}  // namespace

bool PaperSuiteReport::all_pass() const {
    return std::all_of(criteria.begin(), criteria.end(),
                       [](const CriterionResult& c) { return c.pass; });
}

PaperSuiteReport run_paper_suite(const SuiteOptions& opts) {
    const auto t_begin = std::chrono::steady_clock::now();

    std::vector<SuiteRun> runs = build_suite(opts.disable_compensation);
    std::vector<ScenarioResult> results(runs.size());

    const int jobs = std::max(1, opts.jobs);
    for (std::size_t begin = 0; begin < runs.size(); begin += jobs) {
        std::vector<std::future<ScenarioResult>> futures;
        const std::size_t end = std::min(runs.size(), begin + jobs);
        for (std::size_t i = begin; i < end; ++i) {
            futures.push_back(std::async(std::launch::async, [&runs, i] {
                return run_scenario(runs[i].scenario);
            }));
        }
        for (std::size_t i = begin; i < end; ++i) {
            results[i] = futures[i - begin].get();
        }
    }

    if (!opts.out_dir.empty()) {
        fs::create_directories(opts.out_dir);
        for (std::size_t i = 0; i < runs.size(); ++i) {
            write_run_outputs(fs::path(opts.out_dir) / runs[i].name, runs[i].scenario,
                              results[i]);
        }
    }

    PaperSuiteReport report;

    // Hover table: per-axis absolute steady errors in the final configuration.
    {
        std::ostringstream t;
        t << std::left << std::setw(26) << "transition" << std::right << std::setw(10)
          << "|ex| [m]" << std::setw(10) << "|ey| [m]" << std::setw(10) << "|ez| [m]"
          << "\n";
        for (const auto& run : runs) {
            if (run.name.rfind("hover", 0) != 0) continue;
            const auto& res = find_result(runs, results, run.name);
            const Vec3 err = mean_error(res, run.seg_final0, run.seg_final1).cwiseAbs();
            t << std::left << std::setw(26) << run.name << std::right << std::fixed
              << std::setprecision(4) << std::setw(10) << err.x() << std::setw(10) << err.y()
              << std::setw(10) << err.z() << "\n";
        }
        report.hover_table = t.str();
    }

    // Forward-flight table: euclidean mean/std per configuration segment.
    {
        std::ostringstream t;
        t << std::left << std::setw(26) << "transition" << std::right << std::setw(10)
          << "mu_start" << std::setw(10) << "sd_start" << std::setw(10) << "mu_final"
          << std::setw(10) << "sd_final"
          << "\n";
        for (std::size_t i = 0; i < runs.size(); ++i) {
            if (runs[i].name.rfind("circle", 0) != 0) continue;
            const auto segs = summarize(
                results[i], {{"start", runs[i].seg_start0, runs[i].seg_start1},
                             {"final", runs[i].seg_final0, runs[i].seg_final1}});
            t << std::left << std::setw(26) << runs[i].name << std::right << std::fixed
              << std::setprecision(4);
            for (const auto& s : segs) {
                t << std::setw(10) << s.euclid_mean << std::setw(10) << s.euclid_std;
            }
            t << "\n";
        }
        report.forward_table = t.str();
    }

    auto add = [&report](const std::string& name, bool pass, const std::string& detail) {
        report.criteria.push_back({name, pass, detail});
    };

    // Criterion 5: hover steady-state closed form, symmetric O.
    {
        const SuiteRun& nc = find_run(runs, "hover_X_to_O_nc");
        const auto& res_nc = find_result(runs, results, "hover_X_to_O_nc");
        const auto& res_c = find_result(runs, results, "hover_X_to_O_c");

        const OcclusionProfile occ =
            occlusion_angle(nc.scenario.geometry, default_geometry_config().presets.o);
        const double k_bar = std::min(nc.scenario.plant_model.coefficient(occ.phi[0]),
                                      nc.scenario.plant_model.k_t) /
                             nc.scenario.plant_model.k_t;
        const double expected = kGravity * (1.0 - k_bar) / (k_bar * nc.scenario.gains.kp_pos);
        const double measured = -mean_error(res_nc, nc.seg_final0, nc.seg_final1).z();
        const double z_err_c = std::abs(mean_error(res_c, nc.seg_final0, nc.seg_final1).z());
        std::ostringstream d;
        d << "n.c. z drop " << measured << " m vs closed form " << expected
          << " m; c. |z err| " << z_err_c << " m";
        add("hover_steady_state_closed_form",
            std::abs(measured - expected) <= 0.05 * expected && z_err_c < 0.01, d.str());
    }

    // Criterion 6: asymmetric O lateral drift.
    {
        const SuiteRun& nc = find_run(runs, "hover_X_to_Oasym_nc");
        const auto& res_nc = find_result(runs, results, "hover_X_to_Oasym_nc");
        const auto& res_c = find_result(runs, results, "hover_X_to_Oasym_c");
        const Vec3 drift_nc = mean_error(res_nc, nc.seg_final0, nc.seg_final1);
        const Vec3 drift_c = mean_error(res_c, nc.seg_final0, nc.seg_final1);
        const double lat_nc = drift_nc.head<2>().norm();
        const double lat_c = drift_c.head<2>().norm();

        // Propeller 3 (index 2) keeps more thrust, so the vehicle tips away
        // from it and drifts toward the opposite corner.
        const GeometryConfig cfg = default_geometry_config();
        const Vec2 dir3 =
            prop_center(cfg.geometry, cfg.presets.o_asym.theta[2], 2).normalized();
        const double along = drift_nc.head<2>().dot(Eigen::Vector2d(dir3));
        std::ostringstream d;
        d << "n.c. lateral drift " << lat_nc << " m (component along prop-3 direction "
          << along << "); c. lateral drift " << lat_c << " m";
        add("asymmetric_O_lateral_drift", lat_nc > 0.02 && along < 0.0 && lat_c < 0.01,
            d.str());
    }

    // Criterion 7: circle tracking, compensation should beat 0.6x of n.c.
    for (const std::string prefix : {std::string("circle"), std::string("circle_vary")}) {
        const SuiteRun& nc = find_run(runs, prefix + "_X_to_O_nc");
        const auto& res_nc = find_result(runs, results, prefix + "_X_to_O_nc");
        const auto& res_c = find_result(runs, results, prefix + "_X_to_O_c");
        const double mu_nc = mean_euclid(res_nc, nc.seg_final0, nc.seg_final1);
        const double mu_c = mean_euclid(res_c, nc.seg_final0, nc.seg_final1);
        std::ostringstream d;
        d << "O euclidean mean: c. " << mu_c << " m vs n.c. " << mu_nc << " m";
        add(prefix + "_tracking_halving", mu_c < 0.6 * mu_nc, d.str());
    }

    // Criterion 8: X-configuration commands identical with and without
    // compensation (overlap gate).
    {
        const auto& on = find_result(runs, results, "hover_X_comp_on");
        const auto& off = find_result(runs, results, "hover_X_comp_off");
        bool identical = on.omega_cmd.size() == off.omega_cmd.size();
        for (std::size_t i = 0; identical && i < on.omega_cmd.size(); ++i) {
            identical = on.omega_cmd[i] == off.omega_cmd[i];
        }
        add("x_config_gate_invariance", identical,
            identical ? "commanded speeds bitwise identical"
                      : "commanded speeds diverge in X configuration");
    }

    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();

    if (!opts.out_dir.empty()) {
        nlohmann::json j{{"runtime_seconds", report.runtime_seconds},
                         {"criteria", nlohmann::json::array()}};
        for (const auto& c : report.criteria) {
            j["criteria"].push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
        }
        write_text_file(fs::path(opts.out_dir) / "criteria.json", j.dump(2) + "\n");
        write_text_file(fs::path(opts.out_dir) / "hover_table.txt", report.hover_table);
        write_text_file(fs::path(opts.out_dir) / "forward_table.txt", report.forward_table);
        write_manifest(opts.out_dir, "paper-suite",
                       {{"jobs", opts.jobs},
                        {"disable_compensation", opts.disable_compensation}},
                       0);
    }
    return report;
}

int cmd_paper_suite(const SuiteOptions& opts) {
    try {
        const PaperSuiteReport report = run_paper_suite(opts);
        std::cout << report.hover_table << "\n" << report.forward_table << "\n";
        for (const auto& c : report.criteria) {
            std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
        }
        std::cout << "suite runtime: " << report.runtime_seconds << " s\n";
        if (!report.all_pass()) {
            std::cerr << "criteria failed:";
            for (const auto& c : report.criteria) {
                if (!c.pass) std::cerr << " " << c.name;
            }
            std::cerr << "\n";
            return kExitRuntimeError;
        }
        return kExitOk;
    } catch (const ConfigError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntimeError;
    }
}

}  // namespace morphcomp
