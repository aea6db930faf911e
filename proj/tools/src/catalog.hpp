#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"

namespace weylworlds::cli {

struct ScenarioEntry {
    std::string name;
    std::string description;
    std::string source;  // "bundled" or the config path
};

// Bundled scenarios in their fixed order, then *.cfg files of user_dir
// sorted by file name.
std::vector<ScenarioEntry> list_scenarios(const std::optional<std::filesystem::path>& user_dir);

// An existing file path, else a bundled name, else <user_dir>/<name>.cfg.
Config resolve_config(const std::string& ref,
                      const std::optional<std::filesystem::path>& user_dir);

}  // namespace weylworlds::cli
