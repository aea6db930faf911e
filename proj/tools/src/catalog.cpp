#include "catalog.hpp"

#include <algorithm>

#include <weylworlds/error.hpp>

#include "bundled.hpp"

namespace weylworlds::cli {

namespace fs = std::filesystem;

namespace {

ScenarioEntry describe(const Config& c, std::string fallback_name, std::string source) {
    ScenarioEntry e{std::move(fallback_name), "", std::move(source)};
    if (c.explicitly_set("scenario.name")) e.name = c.str("scenario.name");
    if (c.explicitly_set("scenario.description")) e.description = c.str("scenario.description");
    return e;
}

}  // namespace

std::vector<ScenarioEntry> list_scenarios(const std::optional<fs::path>& user_dir) {
    std::vector<ScenarioEntry> out;
    for (const BundledScenario& b : bundled_scenarios())
        out.push_back(describe(Config::parse(b.text, std::string(b.name)), std::string(b.name),
                               "bundled"));
    if (!user_dir || !fs::is_directory(*user_dir)) return out;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(*user_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".cfg")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const fs::path& f : files) {
        try {
            out.push_back(describe(Config::load(f), f.stem().string(), f.string()));
        } catch (const Error&) {
            out.push_back({f.stem().string(), "(unreadable config)", f.string()});
        }
    }
    return out;
}

Config resolve_config(const std::string& ref, const std::optional<fs::path>& user_dir) {
    if (fs::is_regular_file(ref)) return Config::load(ref);
    if (const BundledScenario* b = find_bundled(ref))
        return Config::parse(b->text, "bundled:" + std::string(b->name));
    if (user_dir) {
        for (const fs::path& p : {*user_dir / ref, *user_dir / (ref + ".cfg")})
            if (fs::is_regular_file(p)) return Config::load(p);
    }
    throw IoError("no config file or scenario named '" + ref + "'");
}

}  // namespace weylworlds::cli
