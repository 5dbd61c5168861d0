#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"

#include "opctl/model_io.hpp"

namespace opctl {

struct RunOptions {
    std::string model_path;
    std::string out_dir;                ///< empty: no artifact files
    std::optional<std::uint64_t> seed;  ///< overrides the model's sim seed
    std::optional<std::string> target;  ///< overrides the model's restricted core, index set syntax
};

struct RunResult {
    int exit_code = 0;
    nlohmann::json report;
    std::string text;  ///< one line per completed stage, plus the error if any
};

/// Runs the staged pipeline up to and including the named command:
///   compile -> thresholds -> synthesize -> simulate -> verify
/// Each stage records an input and output content hash in the report, so a
/// rerun on identical inputs is checkable line by line. With a non-empty out
/// directory the stages leave their artifacts there (transition.txt,
/// lambda.csv, traces.csv, summary.csv, vbar.svg) and report.json/report.txt
/// are always written last, even on failure.
///
/// Exceptions never escape. They are folded into the exit code contract:
/// 0 success, 2 not stabilizable, 3 invalid input, 4 numeric failure.
RunResult run_pipeline(const std::string& command, const RunOptions& opts);

} // namespace opctl
