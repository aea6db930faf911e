#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <weylworlds/error.hpp>

namespace weylworlds::cli {

namespace {

KeySpec key(std::string name, KeyType type, std::string fallback, std::string description) {
    KeySpec k;
    k.key = std::move(name);
    k.type = type;
    k.fallback = std::move(fallback);
    k.description = std::move(description);
    return k;
}

KeySpec positive(KeySpec k) {
    k.lower = 0.0;
    k.lower_open = true;
    return k;
}

KeySpec at_least(KeySpec k, double lo) {
    k.lower = lo;
    return k;
}

KeySpec choice(std::string name, std::vector<std::string> choices, std::string fallback,
               std::string description) {
    KeySpec k = key(std::move(name), KeyType::choice, std::move(fallback), std::move(description));
    k.choices = std::move(choices);
    return k;
}

std::vector<KeySpec> build_registry() {
    using T = KeyType;
    std::vector<KeySpec> r;
    // scenario
    r.push_back(key("scenario.name", T::string, "", "Scenario name; also the output subdirectory."));
    r.push_back(key("scenario.description", T::string, "", "One-line description shown by `list`."));
    r.push_back(choice("scenario.mode",
                       {"self_contained", "guided", "classical", "geometry_check", "topology_check"},
                       "", "What to run."));
    r.push_back(key("scenario.output_dir", T::path, "out",
                    "Output root; results go to <output_dir>/<name>. `run --out` overrides."));

    // state
    r.push_back(choice("state.kind",
                       {"ho_ground", "free_gaussian", "angular_eigenstate", "double_gaussian"}, "",
                       "Closed-form initial state. Exactly one of kind and file is required."));
    r.push_back(key("state.file", T::path, "",
                    "WWF1 wavefunction file (relative to the config). The grid, metric and hbar "
                    "come from the file; the [grid] section must then be absent."));
    r.push_back(at_least(key("state.dim", T::integer, "1", "Configuration-space dimension."), 1));
    r.push_back(positive(key("state.mass", T::real, "1", "Mass of every coordinate.")));
    r.push_back(positive(key("state.omega", T::real, "1", "Oscillator frequency of the state.")));
    r.push_back(positive(key("state.sigma", T::real, "1", "Initial density width (free kinds).")));
    r.push_back(positive(key("state.hbar", T::real, "1", "Planck constant of the state and oracle.")));
    r.push_back(key("state.center", T::real_list, "", "Packet center, one value per axis."));
    r.push_back(key("state.momentum", T::real_list, "", "Mean momentum, one value per axis."));
    r.push_back(key("state.winding", T::integer, "1", "Winding of angular_eigenstate."));
    r.push_back(key("state.parity", T::integer, "1", "Parity (+1 or -1) of double_gaussian."));
    r.push_back(key("state.boost", T::real_list, "",
                    "Extra plane-wave factor exp(i k.x) applied on the grid (topology_check)."));

    // grid
    r.push_back(key("grid.min", T::real_list, "", "Lower bound per axis (one value broadcasts)."));
    r.push_back(key("grid.max", T::real_list, "", "Upper bound per axis (one value broadcasts)."));
    KeySpec count = key("grid.count", T::integer_list, "", "Points per axis (one value broadcasts).");
    count.lower = 8;
    r.push_back(count);
    r.push_back(key("grid.periodic", T::boolean, "false",
                    "Periodic axes. The split-step oracle needs a periodic grid."));

    // numerics
    r.push_back(choice("numerics.order", {"2", "4", "6"}, "2", "Finite-difference order."));
    r.push_back(choice("numerics.interpolation", {"linear", "cubic"}, "cubic",
                       "Grid-to-world interpolation."));
    r.push_back(positive(key("numerics.eps_node", T::real, "1e-12",
                             "Node floor, relative to the density maximum.")));
    r.push_back(at_least(key("numerics.lambda", T::real, "",
                             "Weyl coupling lambda; defaults to state.hbar (forced to 0 in "
                             "classical mode)."),
                         0.0));

    // ensemble
    r.push_back(at_least(key("ensemble.count", T::integer, "1000", "Number of worlds."), 2));
    r.push_back(at_least(key("ensemble.seed", T::integer, "1", "Sampling seed."), 0));
    r.push_back(choice("ensemble.init", {"sample", "quantile"}, "sample",
                       "Initial positions: i.i.d. draws from the state density, or 1D quantiles."));
    r.push_back(choice("ensemble.estimator", {"kde", "spacing1d", "exact"}, "kde",
                       "Density estimator of self-contained runs."));
    r.push_back(key("ensemble.bandwidth", T::real_list, "",
                    "KDE bandwidth per axis; Silverman's rule when absent."));
    r.push_back(at_least(key("ensemble.spacing_stride", T::integer, "0",
                             "Worlds per gap of the spacing estimator; 0 picks about 25 gaps."),
                         0));

    // integrator
    r.push_back(choice("integrator.scheme", {"velocity-verlet", "euler-guided"}, "",
                       "Integrator; defaults to velocity-verlet, or euler-guided in guided mode."));
    r.push_back(positive(key("integrator.t_end", T::real, "", "Final time.")));
    r.push_back(positive(key("integrator.dt", T::real, "",
                             "Time step. Self-contained runs default to 0.99 of the stability "
                             "limit, rounded so that the steps divide t_end.")));
    r.push_back(choice("integrator.refresh", {"every-step", "exact-oracle"}, "every-step",
                       "Density used for Q in self-contained runs."));
    r.push_back(choice("integrator.node_policy", {"error", "extrapolate"}, "",
                       "Worlds whose stencil reaches a node: error (guided default) or "
                       "extrapolate (self-contained default)."));
    r.push_back(at_least(key("integrator.probes", T::integer, "10",
                             "Diagnostic snapshots after t = 0 (trajectories.csv rows)."),
                         1));

    // potential
    r.push_back(choice("potential.kind", {"state", "none", "harmonic"}, "state",
                       "External potential: the one the state solves, zero, or isotropic "
                       "harmonic."));
    r.push_back(positive(key("potential.omega", T::real, "",
                             "Harmonic frequency; defaults to state.omega.")));

    // topology
    r.push_back(positive(key("topology.h", T::real, "",
                             "Circulation quantum; defaults to 2 pi hbar.")));
    r.push_back(at_least(key("topology.loop_radius", T::real, "0",
                             "Loop radius around each node; 0 picks one from the grid."),
                         0.0));
    r.push_back(positive(key("topology.solver_tolerance", T::real, "1e-8",
                             "Relative residual of the U Poisson solve.")));

    // checks
    r.push_back(positive(key("checks.max_hj_residual", T::real, "",
                             "Bound on the oracle Hamilton-Jacobi residual at the final time.")));
    r.push_back(positive(key("checks.max_continuity_residual", T::real, "",
                             "Bound on the oracle continuity residual at the final time.")));
    r.push_back(positive(key("checks.max_ks", T::real, "",
                             "Bound on the KS distance between worlds and the oracle density.")));
    r.push_back(positive(key("checks.max_sigma_error", T::real, "",
                             "Bound on |world std / oracle std - 1| per axis.")));
    r.push_back(positive(key("checks.max_drift", T::real, "",
                             "Bound on world displacement from its label, in initial oracle std.")));
    r.push_back(positive(key("checks.max_energy_drift", T::real, "",
                             "Bound on the per-world energy change relative to the mean energy.")));
    r.push_back(positive(key("checks.max_trajectory_error", T::real, "",
                             "Bound on the classical trajectory error relative to amplitude.")));
    r.push_back(positive(key("checks.max_identity_error", T::real, "",
                             "Bound on |gamma lambda^2 R + Q| / max|Q|.")));
    r.push_back(positive(key("checks.max_integrability", T::real, "",
                             "Bound on the antisymmetric derivative of the Weyl one-form.")));
    r.push_back(key("checks.expect_windings", T::integer_list, "",
                    "Windings expected on the codimension-2 nodes, in detection order."));
    r.push_back(positive(key("checks.max_winding_defect", T::real, "",
                             "Bound on the distance of circulation / h from an integer.")));
    return r;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',' || c == ' ' || c == '\t') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

bool parse_real(const std::string& s, double& v) {
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size() && std::isfinite(v);
}

bool parse_long(const std::string& s, long& v) {
    const char* b = s.data();
    if (!s.empty() && s[0] == '+') ++b;
    auto res = std::from_chars(b, s.data() + s.size(), v);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

bool parse_bool(const std::string& s, bool& v) {
    if (s == "true" || s == "yes" || s == "on" || s == "1") {
        v = true;
        return true;
    }
    if (s == "false" || s == "no" || s == "off" || s == "0") {
        v = false;
        return true;
    }
    return false;
}

std::string bounds_text(const KeySpec& k) {
    std::ostringstream s;
    if (k.lower > -1e299) s << (k.lower_open ? "> " : ">= ") << k.lower;
    if (k.upper < 1e299) s << (k.lower > -1e299 ? ", " : "") << "<= " << k.upper;
    return s.str();
}

// Returns an error message, empty when the value is acceptable.
std::string check_value(const KeySpec& k, const std::string& v) {
    const auto in_range = [&](double x) {
        return (k.lower_open ? x > k.lower : x >= k.lower) && x <= k.upper;
    };
    const std::string bad = k.key + " = '" + v + "': ";
    switch (k.type) {
        case KeyType::string:
        case KeyType::path:
            if (v.empty()) return bad + "empty value";
            return {};
        case KeyType::choice:
            if (std::find(k.choices.begin(), k.choices.end(), v) == k.choices.end())
                return bad + "expected " + type_name(k);
            return {};
        case KeyType::boolean: {
            bool b;
            return parse_bool(v, b) ? std::string{} : bad + "expected a boolean";
        }
        case KeyType::real: {
            double x;
            if (!parse_real(v, x)) return bad + "expected a real number";
            if (!in_range(x)) return bad + "must be " + bounds_text(k);
            return {};
        }
        case KeyType::integer: {
            long x;
            if (!parse_long(v, x)) return bad + "expected an integer";
            if (!in_range(static_cast<double>(x))) return bad + "must be " + bounds_text(k);
            return {};
        }
        case KeyType::real_list:
        case KeyType::integer_list: {
            const auto items = split_list(v);
            if (items.empty()) return bad + "empty list";
            for (const auto& it : items) {
                double x;
                long l;
                const bool ok = k.type == KeyType::real_list ? parse_real(it, x)
                                                             : (parse_long(it, l) && (x = l, true));
                if (!ok) return bad + "'" + it + "' is not " +
                                (k.type == KeyType::real_list ? "a real number" : "an integer");
                if (!in_range(x)) return bad + "entries must be " + bounds_text(k);
            }
            return {};
        }
    }
    return {};
}

}  // namespace

const std::vector<KeySpec>& key_registry() {
    static const std::vector<KeySpec> r = build_registry();
    return r;
}

const KeySpec* find_key(std::string_view name) {
    for (const KeySpec& k : key_registry())
        if (k.key == name) return &k;
    return nullptr;
}

std::string type_name(const KeySpec& k) {
    switch (k.type) {
        case KeyType::string: return "string";
        case KeyType::path: return "path";
        case KeyType::real: return "real";
        case KeyType::integer: return "integer";
        case KeyType::boolean: return "boolean";
        case KeyType::real_list: return "real list";
        case KeyType::integer_list: return "integer list";
        case KeyType::choice: {
            std::string s = "one of ";
            for (std::size_t i = 0; i < k.choices.size(); ++i)
                s += (i ? ", " : "") + k.choices[i];
            return s;
        }
    }
    return {};
}

std::string key_reference_markdown() {
    std::ostringstream out;
    out << "# Scenario config reference\n\n"
        << "Generated by `weylworlds keys`; do not edit by hand.\n\n"
        << "Configs are plain text: `[section]` headers followed by `name = value` lines. "
           "Lines starting with `#` or `;` are comments, as is anything after ` #` on a value "
           "line. Lists are comma or space separated. Unknown sections or keys are errors.\n";
    std::string section;
    for (const KeySpec& k : key_registry()) {
        const std::string sec = k.key.substr(0, k.key.find('.'));
        if (sec != section) {
            section = sec;
            out << "\n## [" << sec << "]\n\n"
                << "| key | type | default | constraint | description |\n"
                << "|---|---|---|---|---|\n";
        }
        out << "| `" << k.key.substr(k.key.find('.') + 1) << "` | " << type_name(k) << " | "
            << (k.fallback.empty() ? "-" : "`" + k.fallback + "`") << " | "
            << (bounds_text(k).empty() ? "-" : bounds_text(k)) << " | " << k.description
            << " |\n";
    }
    out << "\n## Modes\n\n"
        << "| mode | requires |\n|---|---|\n"
        << "| `guided` | state, grid (unless state.file), integrator.t_end, integrator.dt |\n"
        << "| `self_contained` | state, grid, integrator.t_end |\n"
        << "| `classical` | state, grid, integrator.t_end, integrator.dt |\n"
        << "| `geometry_check` | state, grid |\n"
        << "| `topology_check` | state, grid; state.dim 2 or 3 |\n";
    return out.str();
}

Config Config::parse(std::string_view text, std::string origin, std::filesystem::path base_dir) {
    Config c;
    c.origin_ = std::move(origin);
    c.base_dir_ = std::move(base_dir);
    std::vector<std::string> problems;
    std::set<std::string> known_sections;
    for (const KeySpec& k : key_registry()) known_sections.insert(k.key.substr(0, k.key.find('.')));

    std::string section;
    std::size_t lineno = 0;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string where = c.origin_ + ":" + std::to_string(lineno);
        std::string s = trim(line);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        if (s.front() == '[') {
            if (s.back() != ']') {
                problems.push_back(where + ": malformed section header");
                continue;
            }
            section = trim(std::string_view(s).substr(1, s.size() - 2));
            if (!known_sections.count(section))
                problems.push_back(where + ": unknown section [" + section + "]");
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            problems.push_back(where + ": expected 'name = value'");
            continue;
        }
        std::string name = trim(std::string_view(s).substr(0, eq));
        std::string value = s.substr(eq + 1);
        for (const char* marker : {" #", "\t#", " ;", "\t;"})
            if (auto p = value.find(marker); p != std::string::npos) value.erase(p);
        value = trim(value);
        if (section.empty()) {
            problems.push_back(where + ": key '" + name + "' outside any section");
            continue;
        }
        if (!known_sections.count(section)) continue;  // already reported
        const std::string full = section + "." + name;
        if (!find_key(full)) {
            problems.push_back(where + ": unknown key " + full);
            continue;
        }
        if (c.values_.count(full)) {
            problems.push_back(where + ": duplicate key " + full);
            continue;
        }
        c.values_[full] = value;
    }
    if (!problems.empty()) {
        std::string msg = "invalid config " + c.origin_ + ":";
        for (const auto& p : problems) msg += "\n  " + p;
        throw SchemaError(msg);
    }
    return c;
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string(), path.parent_path());
}

std::string Config::raw(const std::string& name) const {
    if (auto it = values_.find(name); it != values_.end()) return it->second;
    const KeySpec* k = find_key(name);
    if (!k) throw InvalidArgument("no such config key " + name);
    if (k->fallback.empty()) throw SchemaError("missing required key " + name);
    return k->fallback;
}

bool Config::has(const std::string& name) const {
    if (values_.count(name)) return true;
    const KeySpec* k = find_key(name);
    return k && !k->fallback.empty();
}

std::string Config::str(const std::string& name) const { return raw(name); }

double Config::real(const std::string& name) const {
    double v;
    if (!parse_real(raw(name), v)) throw SchemaError(name + " is not a real number");
    return v;
}

long Config::integer(const std::string& name) const {
    long v;
    if (!parse_long(raw(name), v)) throw SchemaError(name + " is not an integer");
    return v;
}

bool Config::boolean(const std::string& name) const {
    bool v;
    if (!parse_bool(raw(name), v)) throw SchemaError(name + " is not a boolean");
    return v;
}

std::vector<double> Config::reals(const std::string& name) const {
    std::vector<double> out;
    for (const auto& it : split_list(raw(name))) {
        double v;
        if (!parse_real(it, v)) throw SchemaError(name + " has a non-numeric entry");
        out.push_back(v);
    }
    return out;
}

std::vector<long> Config::integers(const std::string& name) const {
    std::vector<long> out;
    for (const auto& it : split_list(raw(name))) {
        long v;
        if (!parse_long(it, v)) throw SchemaError(name + " has a non-integer entry");
        out.push_back(v);
    }
    return out;
}

std::filesystem::path Config::path(const std::string& name) const {
    std::filesystem::path p = raw(name);
    if (p.is_relative() && !base_dir_.empty()) p = base_dir_ / p;
    return p;
}

void validate(const Config& c) {
    std::vector<std::string> problems;
    for (const auto& [name, value] : c.explicit_values())
        if (std::string err = check_value(*find_key(name), value); !err.empty())
            problems.push_back(err);

    const auto need = [&](const std::string& name, const std::string& why) {
        if (!c.has(name)) problems.push_back("missing " + name + " (" + why + ")");
    };
    need("scenario.name", "always required");
    need("scenario.mode", "always required");

    const bool from_file = c.explicitly_set("state.file");
    if (from_file == c.explicitly_set("state.kind"))
        problems.push_back("exactly one of state.kind and state.file must be set");
    if (from_file) {
        for (const char* g : {"grid.min", "grid.max", "grid.count", "grid.periodic"})
            if (c.explicitly_set(g))
                problems.push_back(std::string(g) + " conflicts with state.file");
    } else {
        for (const char* g : {"grid.min", "grid.max", "grid.count"}) need(g, "state.kind needs a grid");
    }

    std::string mode;
    if (c.explicitly_set("scenario.mode") && problems.empty()) mode = c.str("scenario.mode");
    if (mode == "guided" || mode == "self_contained" || mode == "classical")
        need("integrator.t_end", mode + " mode");
    if (mode == "guided" || mode == "classical") need("integrator.dt", mode + " mode");

    if (problems.empty() && !from_file) {
        const long dim = c.integer("state.dim");
        const auto per_axis = [&](const std::string& name) {
            if (!c.explicitly_set(name)) return;
            const std::size_t len = c.str(name).empty() ? 0 : c.reals(name).size();
            if (len != 1 && len != static_cast<std::size_t>(dim))
                problems.push_back(name + " needs 1 or " + std::to_string(dim) + " entries");
        };
        for (const char* g : {"grid.min", "grid.max", "grid.count"}) per_axis(g);
        for (const char* s : {"state.center", "state.momentum", "state.boost",
                              "ensemble.bandwidth"})
            if (c.explicitly_set(s) && c.reals(s).size() != static_cast<std::size_t>(dim))
                problems.push_back(std::string(s) + " needs " + std::to_string(dim) + " entries");
        if (problems.empty()) {
            const auto lo = c.reals("grid.min"), hi = c.reals("grid.max");
            for (std::size_t a = 0; a < static_cast<std::size_t>(dim); ++a)
                if (!(hi[hi.size() == 1 ? 0 : a] > lo[lo.size() == 1 ? 0 : a]))
                    problems.push_back("grid.max must exceed grid.min on axis " + std::to_string(a));
        }
        if (mode == "topology_check" && dim != 2 && dim != 3)
            problems.push_back("topology_check needs state.dim 2 or 3");
        if (c.explicitly_set("state.parity")) {
            const long p = c.integer("state.parity");
            if (p != 1 && p != -1) problems.push_back("state.parity must be +1 or -1");
        }
    }
    if (problems.empty() && c.explicitly_set("integrator.scheme")) {
        const std::string scheme = c.str("integrator.scheme");
        if (mode == "guided" && scheme != "euler-guided")
            problems.push_back("guided mode integrates with euler-guided");
        if ((mode == "self_contained" || mode == "classical") && scheme != "velocity-verlet")
            problems.push_back(mode + " mode integrates with velocity-verlet");
    }
    if (problems.empty() && mode == "classical" && c.explicitly_set("numerics.lambda") &&
        c.real("numerics.lambda") != 0.0)
        problems.push_back("numerics.lambda must be 0 (or absent) in classical mode");

    if (!problems.empty()) {
        std::string msg = "invalid config " + c.origin() + ":";
        for (const auto& p : problems) msg += "\n  " + p;
        throw SchemaError(msg);
    }
    if (from_file && !std::filesystem::exists(c.path("state.file")))
        throw IoError("state file " + c.path("state.file").string() + " does not exist");
}

}  // namespace weylworlds::cli
