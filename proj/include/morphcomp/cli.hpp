#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace morphcomp {

inline constexpr const char* kToolVersion = "morphcomp 0.1.0";

// Exit code contract: 0 success, 2 input error, 3 runtime failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitRuntimeError = 3;

struct IdentifyOptions {
    std::string bench_csv;
    std::string out_model_json;
};

struct RunOptions {
    std::string scenario_path;
    std::string out_dir;
    std::optional<bool> compensation_override;
    std::optional<std::uint64_t> seed_override;
};

struct SuiteOptions {
    std::string out_dir;
    int jobs = 1;
    bool disable_compensation = false;  // negative control: criteria must fail
};

// Bench CSV -> fitted model JSON + fit report (residuals, R^2).
int cmd_identify(const IdentifyOptions& opts);

// Scenario JSON -> time-series CSV + summary JSON + manifest.
int cmd_run(const RunOptions& opts);

struct CriterionResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct PaperSuiteReport {
    std::vector<CriterionResult> criteria;
    std::string hover_table;    // per-axis errors per transition
    std::string forward_table;  // euclidean mean/std per segment
    double runtime_seconds = 0.0;

    bool all_pass() const;
};

// Runs the hover and forward-flight experiment matrix (compensation on
// and off variants) and checks the relative claims behind it.
PaperSuiteReport run_paper_suite(const SuiteOptions& opts);

int cmd_paper_suite(const SuiteOptions& opts);

}  // namespace morphcomp
