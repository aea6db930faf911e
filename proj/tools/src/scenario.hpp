#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"

namespace weylworlds::cli {

struct Check {
    std::string name;  // checks.* key without the section
    nlohmann::json value;
    nlohmann::json limit;
    bool pass = false;
};

struct RunOptions {
    std::optional<std::filesystem::path> out_root;  // overrides scenario.output_dir
};

struct RunResult {
    nlohmann::json summary;
    std::vector<Check> checks;
    std::filesystem::path dir;
    bool passed() const;
};

// validate() plus the checks.* keys that make sense for the mode.
void check_scenario(const Config& c);

// Validates, runs and writes <out>/<name>/{summary.json, trajectories.csv,
// fields/*.WWF1, diagnostics.jsonl}. Throws on configuration or runtime
// errors; threshold failures are reported through RunResult.
RunResult run_scenario(const Config& c, const RunOptions& opt = {});

}  // namespace weylworlds::cli
