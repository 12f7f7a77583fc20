#include "morphcomp/cli.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <optional>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"Morphing-quadrotor occlusion thrust model, identification and "
                 "compensation simulator"};
    app.require_subcommand(1);

    morphcomp::IdentifyOptions id_opts;
    auto* identify = app.add_subcommand("identify", "Fit a thrust model from bench data");
    identify->add_option("--bench", id_opts.bench_csv, "Bench sweep CSV")->required();
    identify->add_option("--out", id_opts.out_model_json, "Output model JSON")->required();

    morphcomp::RunOptions run_opts;
    std::string comp_flag;
    std::optional<std::uint64_t> seed;
    auto* run = app.add_subcommand("run", "Run a flight scenario");
    run->add_option("--scenario", run_opts.scenario_path, "Scenario JSON")->required();
    run->add_option("--out", run_opts.out_dir, "Output directory")->required();
    run->add_option("--compensation", comp_flag, "Override the scenario toggle")
        ->check(CLI::IsMember({"on", "off"}));
    run->add_option("--seed", seed, "Override the scenario seed");

    morphcomp::SuiteOptions suite_opts;
    auto* suite = app.add_subcommand("paper-suite",
                                     "Run the hover and forward-flight experiment matrix");
    suite->add_option("--out", suite_opts.out_dir, "Output directory")->required();
    suite->add_option("--jobs", suite_opts.jobs, "Parallel scenario workers");
    suite->add_flag("--no-compensation", suite_opts.disable_compensation,
                    "Negative control: disable compensation everywhere");

    CLI11_PARSE(app, argc, argv);

    if (identify->parsed()) return morphcomp::cmd_identify(id_opts);
    if (run->parsed()) {
        if (!comp_flag.empty()) run_opts.compensation_override = comp_flag == "on";
        run_opts.seed_override = seed;
        return morphcomp::cmd_run(run_opts);
    }
    if (suite->parsed()) return morphcomp::cmd_paper_suite(suite_opts);
    return morphcomp::kExitInputError;
}
