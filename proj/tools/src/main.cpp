#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include <weylworlds/error.hpp>
#include <weylworlds/parallel.hpp>

#include "catalog.hpp"
#include "config.hpp"
#include "scenario.hpp"

using namespace weylworlds;
using namespace weylworlds::cli;
namespace fs = std::filesystem;

int main(int argc, char** argv) {
    CLI::App app{"weylworlds: trajectory ensembles on Weyl configuration space"};
    app.require_subcommand(1);
    std::optional<fs::path> scenario_dir;
    app.add_option("--scenario-dir", scenario_dir, "Extra directory of *.cfg scenarios");

    std::string ref;
    std::optional<fs::path> out_root;
    std::size_t threads = 0;
    auto* run = app.add_subcommand("run", "Run a scenario (config path or scenario name)");
    run->add_option("config", ref, "Config file or scenario name")->required();
    run->add_option("--out", out_root, "Output root (overrides scenario.output_dir)");
    run->add_option("--threads", threads, "Worker threads (0: WEYLWORLDS_THREADS or all cores)");

    auto* list = app.add_subcommand("list", "List bundled and user scenarios");

    std::string vref;
    auto* validate_cmd = app.add_subcommand("validate", "Check a config without running it");
    validate_cmd->add_option("config", vref, "Config file or scenario name")->required();

    auto* version = app.add_subcommand("version", "Print the version");

    std::optional<fs::path> keys_out;
    auto* keys = app.add_subcommand("keys", "Print the config key reference (markdown)");
    keys->add_option("-o,--output", keys_out, "Write to this file instead of stdout");

    for (auto* sub : {run, list, validate_cmd, version, keys}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*version) {
            std::cout << "weylworlds " << WEYLWORLDS_VERSION << '\n';
            return 0;
        }
        if (*keys) {
            const std::string text = key_reference_markdown();
            if (!keys_out) {
                std::cout << text;
                return 0;
            }
            std::ofstream f(*keys_out);
            f << text;
            if (!f) throw IoError("cannot write " + keys_out->string());
            return 0;
        }
        if (*list) {
            const auto entries = list_scenarios(scenario_dir);
            std::size_t width = 0;
            for (const auto& e : entries) width = std::max(width, e.name.size());
            for (const auto& e : entries) {
                std::cout << e.name << std::string(width + 2 - e.name.size(), ' ') << e.description;
                if (e.source != "bundled") std::cout << "  [" << e.source << "]";
                std::cout << '\n';
            }
            return 0;
        }
        if (*validate_cmd) {
            const Config c = resolve_config(vref, scenario_dir);
            check_scenario(c);
            std::cout << c.origin() << ": ok (" << c.str("scenario.name") << ", "
                      << c.str("scenario.mode") << ")\n";
            return 0;
        }
        if (threads > 0) set_thread_count(threads);
        const Config c = resolve_config(ref, scenario_dir);
        const RunResult res = run_scenario(c, RunOptions{out_root});
        for (const Check& ch : res.checks)
            std::cout << (ch.pass ? "  ok    " : "  FAIL  ") << ch.name << " = " << ch.value.dump()
                      << " (limit " << ch.limit.dump() << ")\n";
        std::cout << c.str("scenario.name") << ": " << (res.passed() ? "passed" : "FAILED")
                  << " -> " << res.dir.string() << '\n';
        return res.passed() ? 0 : 2;
    } catch (const SchemaError& e) {
        std::cerr << "schema error: " << e.what() << '\n';
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
    }
    return 1;
}
