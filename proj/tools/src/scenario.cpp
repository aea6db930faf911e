#include "scenario.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <memory>
#include <numbers>
#include <set>

#include <weylworlds/dynamics.hpp>
#include <weylworlds/ensemble.hpp>
#include <weylworlds/error.hpp>
#include <weylworlds/interpolation.hpp>
#include <weylworlds/io.hpp>
#include <weylworlds/oracle.hpp>
#include <weylworlds/topology.hpp>
#include <weylworlds/weyl.hpp>

#ifndef WEYLWORLDS_VERSION
#define WEYLWORLDS_VERSION "unknown"
#endif

namespace weylworlds::cli {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

// checks.<key> -> (summary metric, modes that produce it)
struct CheckSpec {
    const char* key;
    const char* metric;
    std::set<std::string> modes;
};

const std::vector<CheckSpec>& check_specs() {
    static const std::vector<CheckSpec> specs = {
        {"max_hj_residual", "hj_residual", {"guided", "self_contained"}},
        {"max_continuity_residual", "continuity_residual", {"guided", "self_contained"}},
        {"max_ks", "max_ks", {"guided", "self_contained"}},
        {"max_sigma_error", "max_sigma_error", {"guided", "self_contained"}},
        {"max_drift", "max_drift", {"guided", "self_contained", "classical"}},
        {"max_energy_drift", "max_energy_drift", {"self_contained"}},
        {"max_trajectory_error", "max_trajectory_error", {"classical"}},
        {"max_identity_error", "identity_error", {"geometry_check"}},
        {"max_integrability", "integrability", {"geometry_check"}},
        {"max_winding_defect", "max_winding_defect", {"topology_check"}},
    };
    return specs;
}

struct Setup {
    std::string mode;
    std::optional<AnalyticState> state;
    std::optional<WaveFunction> psi0;
    std::optional<Metric> metric;
    double hbar = 1.0;
    PotentialSpec potential;
    std::string potential_kind;  // resolved: none | harmonic | state
    double potential_omega = 0.0;
    bool analytic_oracle = false;
    int order = 2;
    Interpolation interp = Interpolation::cubic;
    double eps = kDefaultNodeFloor;

    const Grid& grid() const { return psi0->grid(); }
    const Metric& g() const { return *metric; }
};

Grid make_grid(const Config& c, std::size_t dim) {
    const auto lo = c.reals("grid.min"), hi = c.reals("grid.max");
    const auto count = c.integers("grid.count");
    const bool periodic = c.boolean("grid.periodic");
    const auto pick = [](const auto& v, std::size_t a) { return v[v.size() == 1 ? 0 : a]; };
    std::vector<Axis> axes;
    for (std::size_t a = 0; a < dim; ++a)
        axes.push_back(Axis{pick(lo, a), pick(hi, a), static_cast<std::size_t>(pick(count, a)),
                            periodic});
    return Grid(std::move(axes));
}

PotentialSpec free_potential(double lambda) {
    PotentialSpec p;
    p.lambda = lambda;
    return p;
}

PotentialSpec state_potential(const AnalyticState& s, double lambda) {
    if (s.kind != StateKind::ho_ground && s.kind != StateKind::angular_eigenstate)
        return free_potential(lambda);
    PotentialSpec p;
    p.lambda = lambda;
    p.value = [s](std::span<const double> x) { return analytic_potential(s, x); };
    p.gradient = [s](std::span<const double> x, std::span<double> out) {
        const double k = s.mass * s.omega * s.omega;
        for (std::size_t a = 0; a < x.size(); ++a) {
            const double c = s.kind == StateKind::angular_eigenstate && a < s.center.size()
                                 ? s.center[a]
                                 : 0.0;
            out[a] = k * (x[a] - c);
        }
    };
    return p;
}

Setup make_setup(const Config& c) {
    Setup s;
    s.mode = c.str("scenario.mode");
    s.order = std::stoi(c.str("numerics.order"));
    s.interp = c.str("numerics.interpolation") == "linear" ? Interpolation::linear
                                                          : Interpolation::cubic;
    s.eps = c.real("numerics.eps_node");

    if (c.explicitly_set("state.file")) {
        WaveFunction psi = read_wavefunction(c.path("state.file"));
        psi.set_time(0.0);
        psi.normalize();
        s.metric = psi.metric();
        s.hbar = psi.hbar();
        s.psi0 = std::move(psi);
    } else {
        AnalyticState a;
        a.kind = parse_state_kind(c.str("state.kind"));
        a.dim = static_cast<std::size_t>(c.integer("state.dim"));
        a.mass = c.real("state.mass");
        a.omega = c.real("state.omega");
        a.sigma = c.real("state.sigma");
        a.hbar = c.real("state.hbar");
        if (c.has("state.center")) a.center = c.reals("state.center");
        if (c.has("state.momentum")) a.momentum = c.reals("state.momentum");
        a.winding = static_cast<int>(c.integer("state.winding"));
        a.parity = static_cast<int>(c.integer("state.parity"));
        try {
            validate(a);
        } catch (const InvalidArgument& e) {
            throw SchemaError(std::string("invalid state: ") + e.what());
        }
        s.metric = state_metric(a);
        s.hbar = a.hbar;
        s.psi0 = analytic_state(a, make_grid(c, a.dim), 0.0);
        s.state = a;
    }
    const bool boosted = c.has("state.boost");
    if (boosted) s.psi0 = boost(*s.psi0, c.reals("state.boost"));

    double lambda = c.has("numerics.lambda") ? c.real("numerics.lambda") : s.hbar;
    if (s.mode == "classical") lambda = 0.0;

    s.potential_kind = c.str("potential.kind");
    if (s.potential_kind == "state") {
        if (s.state && (s.state->kind == StateKind::ho_ground ||
                        s.state->kind == StateKind::angular_eigenstate)) {
            s.potential = state_potential(*s.state, lambda);
            s.potential_omega = s.state->omega;
            if (s.state->kind == StateKind::ho_ground) s.potential_kind = "harmonic";
        } else {
            s.potential = free_potential(lambda);
            s.potential_kind = "none";
        }
        s.analytic_oracle = s.state.has_value() && !boosted;
    } else if (s.potential_kind == "harmonic") {
        s.potential_omega = c.has("potential.omega") ? c.real("potential.omega")
                            : s.state                ? s.state->omega
                                                     : 1.0;
        s.potential = harmonic_potential(s.g(), s.potential_omega, lambda);
    } else {
        s.potential = free_potential(lambda);
    }
    return s;
}

bool fully_periodic(const Grid& grid) {
    return std::all_of(grid.axes().begin(), grid.axes().end(),
                       [](const Axis& a) { return a.periodic; });
}

// Exact psi(t): closed form when the state solves the configured potential,
// otherwise the split-step propagator (nondecreasing multiples of dt).
class Oracle {
public:
    Oracle(const Setup& s, double dt) : setup_(&s), dt_(dt) {
        if (s.analytic_oracle) return;
        if (!fully_periodic(s.grid()))
            throw SchemaError("the split-step oracle needs grid.periodic = true");
        prop_.emplace(*s.psi0, sample_potential(s.potential, s.grid()), dt);
    }

    static bool available(const Setup& s) { return s.analytic_oracle || fully_periodic(s.grid()); }

    WaveFunction at(double t) {
        if (setup_->analytic_oracle) return analytic_state(*setup_->state, setup_->grid(), t);
        const long target = std::lround(t / dt_);
        if (target < done_) throw InvalidArgument("oracle queried backwards in time");
        prop_->step(static_cast<std::size_t>(target - done_));
        done_ = target;
        return prop_->state();
    }

private:
    const Setup* setup_;
    double dt_;
    std::optional<SplitStepPropagator> prop_;
    long done_ = 0;
};

double density_std(const ScalarField& mu, std::size_t axis) {
    const Grid& grid = mu.grid();
    double m0 = 0.0, m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double w = mu[i] * grid.quadrature_weight(i);
        const double x = grid.coord(i, axis);
        m0 += w;
        m1 += w * x;
        m2 += w * x * x;
    }
    const double mean = m1 / m0;
    return std::sqrt(std::max(0.0, m2 / m0 - mean * mean));
}

struct Output {
    fs::path dir;
    std::ofstream diagnostics;
    std::ofstream trajectories;

    explicit Output(fs::path d) : dir(std::move(d)) {
        fs::create_directories(dir / "fields");
        diagnostics.open(dir / "diagnostics.jsonl");
        if (!diagnostics) throw IoError("cannot write " + (dir / "diagnostics.jsonl").string());
    }
    void diag(const json& j) { diagnostics << j.dump() << '\n'; }
    void field(const std::string& name, const WaveFunction& psi) {
        write_wavefunction(dir / "fields" / (name + ".WWF1"), psi);
    }
    void snapshot(const WorldEnsemble& e) {
        const bool first = !trajectories.is_open();
        if (first) {
            trajectories.open(dir / "trajectories.csv");
            if (!trajectories) throw IoError("cannot write " + (dir / "trajectories.csv").string());
        }
        write_ensemble_csv(trajectories, e, first);
    }
};

struct ResidualPair {
    double hj = 0.0;
    double continuity = 0.0;
};

// Residuals of the oracle solution centred on the middle of three snapshots.
ResidualPair oracle_residuals(const WaveFunction& before, const WaveFunction& now,
                              const WaveFunction& after, const Setup& s, double dt) {
    ResidualOptions opt;
    opt.order = s.order;
    opt.region_floor = 1e-6;
    const Hydrodynamic hd = decompose(now, s.eps, s.order);
    const std::vector<ScalarField> mu = {before.density(), hd.mu, after.density()};
    ResidualPair r;
    r.continuity = continuity_residual(mu, raise(hd.p, s.g()), s.g(), dt, opt);
    std::vector<double> ds(now.grid().size());
    for (std::size_t i = 0; i < ds.size(); ++i)
        ds[i] = s.hbar * std::arg(after[i] * std::conj(before[i])) / (2 * dt);
    PotentialSpec quantum = s.potential;
    quantum.lambda = s.hbar;
    r.hj = hamilton_jacobi_residual(ScalarField(now.grid(), std::move(ds)), hd.p, hd.mu, quantum,
                                    s.g(), opt);
    return r;
}

void run_dynamics(const Config& c, Setup& s, Output& out, json& metrics) {
    const Grid& grid = s.grid();
    const Metric& g = s.g();
    const std::size_t n = grid.dim();
    const std::size_t count = static_cast<std::size_t>(c.integer("ensemble.count"));
    const double t_end = c.real("integrator.t_end");
    const bool guided = s.mode == "guided", classical = s.mode == "classical";
    const bool with_oracle = !classical && Oracle::available(s);
    if (guided && !with_oracle)
        throw SchemaError("guided mode needs an oracle: a closed-form state in its own potential "
                          "or a periodic grid");
    for (const CheckSpec& cs : check_specs()) {
        const std::string m = cs.metric;
        const bool needs_oracle = m == "hj_residual" || m == "continuity_residual" ||
                                  m == "max_ks" || m == "max_sigma_error";
        if (needs_oracle && !with_oracle && c.explicitly_set(std::string("checks.") + cs.key))
            throw SchemaError(std::string("checks.") + cs.key + " needs an oracle for this state");
    }

    const ScalarField mu0 = s.psi0->density();
    WorldEnsemble e = [&] {
        if (c.str("ensemble.init") == "quantile") {
            if (n != 1) throw SchemaError("ensemble.init = quantile needs state.dim = 1");
            return quantile_ensemble_1d(mu0, count);
        }
        return sample_from_density(mu0, count, static_cast<std::uint64_t>(c.integer("ensemble.seed")));
    }();
    {
        const VectorField p0 = s.analytic_oracle ? analytic_momentum(*s.state, grid, 0.0, s.eps)
                                                 : decompose(*s.psi0, s.eps, s.order).p;
        const VectorField v0 = raise(p0, g);
        for (std::size_t k = 0; k < e.size(); ++k)
            interpolate(v0, e.position(k), e.velocity(k), s.interp);
    }
    const std::vector<double> x0(e.positions().begin(), e.positions().end());
    const std::vector<double> v0(e.velocities().begin(), e.velocities().end());
    double sigma0 = INFINITY;
    for (std::size_t a = 0; a < n; ++a) sigma0 = std::min(sigma0, density_std(mu0, a));

    IntegratorConfig cfg;
    cfg.estimator = parse_density_method(c.str("ensemble.estimator"));
    if (c.has("ensemble.bandwidth")) cfg.bandwidth = c.reals("ensemble.bandwidth");
    cfg.spacing_stride = static_cast<std::size_t>(c.integer("ensemble.spacing_stride"));
    cfg.refresh = cfg.estimator == DensityMethod::exact
                      ? DensityRefresh::exact_oracle
                      : parse_density_refresh(c.str("integrator.refresh"));
    cfg.eps_node = s.eps;
    cfg.order = s.order;
    cfg.interpolation = s.interp;
    cfg.node_policy = c.has("integrator.node_policy")
                          ? parse_node_policy(c.str("integrator.node_policy"))
                          : NodePolicy::extrapolate;
    const bool wants_exact =
        cfg.refresh == DensityRefresh::exact_oracle || cfg.estimator == DensityMethod::exact;
    if (wants_exact && (classical || !with_oracle))
        throw SchemaError("exact density refresh needs an oracle for this state");

    std::size_t probes = static_cast<std::size_t>(c.integer("integrator.probes"));
    std::size_t steps = 0;
    const auto exact_source = [&](double dt) -> DensitySource {
        if (!wants_exact) return {};
        auto oracle = std::make_shared<Oracle>(s, dt);
        return [oracle](double t) { return oracle->at(t).density(); };
    };
    if (c.has("integrator.dt")) {
        steps = static_cast<std::size_t>(std::max(1L, std::lround(t_end / c.real("integrator.dt"))));
    } else {
        if (s.mode != "self_contained") throw SchemaError("integrator.dt is required");
        SelfContainedIntegrator probe(grid, g, s.potential, cfg, exact_source(t_end));
        const double stable = probe.stable_dt(e);
        steps = static_cast<std::size_t>(std::ceil(t_end / (0.99 * stable)));
        steps = (steps + probes - 1) / probes * probes;
    }
    probes = std::min(probes, steps);
    const double dt = t_end / static_cast<double>(steps);
    cfg.dt = dt;
    cfg.steps = steps;
    std::set<std::size_t> probe_steps;
    for (std::size_t j = 0; j <= probes; ++j)
        probe_steps.insert(static_cast<std::size_t>(
            std::llround(static_cast<double>(j) * static_cast<double>(steps) / probes)));

    std::optional<Oracle> oracle;
    if (with_oracle) oracle.emplace(s, dt);
    std::optional<SelfContainedIntegrator> integ;
    MomentumSource momentum;
    GuidedOptions gopt;
    if (guided) {
        if (s.analytic_oracle) {
            const AnalyticState st = *s.state;
            const double eps = s.eps;
            momentum = [st, &grid, eps](double t) { return analytic_momentum(st, grid, t, eps); };
        } else {
            auto src = std::make_shared<OracleMomentumSource>(
                *s.psi0, sample_potential(s.potential, grid), 0.5 * dt, s.eps, s.order);
            momentum = [src](double t) { return (*src)(t); };
        }
        gopt.interpolation = s.interp;
        gopt.node_policy = c.has("integrator.node_policy")
                               ? parse_node_policy(c.str("integrator.node_policy"))
                               : NodePolicy::error;
    } else {
        integ.emplace(grid, g, s.potential, cfg, exact_source(dt));
    }

    // classical reference: free flight or isotropic oscillator
    const bool harmonic = s.potential_kind == "harmonic";
    const double w = s.potential_omega;
    double max_ks = 0.0, max_sigma = 0.0, max_drift = 0.0, max_energy = 0.0, max_traj = 0.0;
    std::vector<double> energy0;
    std::size_t warnings = 0;
    const auto probe = [&](std::size_t step) {
        out.snapshot(e);
        json d = {{"step", step}, {"t", e.t()}};
        double drift = 0.0;
        for (std::size_t i = 0; i < x0.size(); ++i)
            drift = std::max(drift, std::abs(e.positions()[i] - x0[i]));
        drift /= sigma0;
        max_drift = std::max(max_drift, drift);
        d["drift"] = drift;
        std::vector<double> mean(n), sd(n);
        for (std::size_t a = 0; a < n; ++a) {
            mean[a] = e.mean(a);
            sd[a] = e.stddev(a);
        }
        d["mean"] = mean;
        d["std"] = sd;
        if (oracle) {
            const ScalarField mu = oracle->at(e.t()).density();
            const double ks = distribution_distance(e, mu, g, false).ks;
            double se = 0.0;
            for (std::size_t a = 0; a < n; ++a)
                se = std::max(se, std::abs(sd[a] / density_std(mu, a) - 1.0));
            max_ks = std::max(max_ks, ks);
            max_sigma = std::max(max_sigma, se);
            d["ks"] = ks;
            d["sigma_error"] = se;
        }
        if (integ && !classical) {
            const std::vector<double> en = integ->world_energies(e);
            if (energy0.empty()) energy0 = en;
            double mean_e = 0.0, dev = 0.0;
            for (std::size_t k = 0; k < en.size(); ++k) {
                mean_e += energy0[k] / static_cast<double>(en.size());
                dev = std::max(dev, std::abs(en[k] - energy0[k]));
            }
            const double rel = dev / std::max(std::abs(mean_e), 1e-300);
            max_energy = std::max(max_energy, rel);
            d["energy_drift"] = rel;
        }
        if (classical) {
            const double t = e.t();
            double err = 0.0;
            for (std::size_t i = 0; i < x0.size(); ++i) {
                double want, scale;
                if (harmonic) {
                    want = x0[i] * std::cos(w * t) + v0[i] / w * std::sin(w * t);
                    scale = std::hypot(x0[i], v0[i] / w);
                } else {
                    want = x0[i] + v0[i] * t;
                    scale = std::abs(x0[i]) + std::abs(v0[i]) * t;
                }
                err = std::max(err, std::abs(e.positions()[i] - want) / std::max(scale, sigma0));
            }
            max_traj = std::max(max_traj, err);
            d["trajectory_error"] = err;
        }
        out.diag(d);
    };

    for (std::size_t step = 0; step <= steps; ++step) {
        if (probe_steps.count(step)) probe(step);
        if (step == steps) break;
        const StepReport rep = guided ? step_guided(e, momentum, g, dt, gopt) : integ->step(e);
        for (const std::string& msg : rep.warnings) {
            ++warnings;
            out.diag({{"step", rep.step}, {"t", rep.t}, {"warning", msg}});
        }
        if (!e.all_finite())
            throw NumericalError("non-finite world state at step " + std::to_string(step + 1));
    }

    out.field("psi_initial", *s.psi0);
    if (oracle) {
        const WaveFunction now = oracle->at(t_end);
        const WaveFunction next = oracle->at(t_end + dt);
        const WaveFunction last = oracle->at(t_end + 2 * dt);
        out.field("psi_final", now);
        const ResidualPair r = oracle_residuals(now, next, last, s, dt);
        metrics["hj_residual"] = r.hj;
        metrics["continuity_residual"] = r.continuity;
        metrics["residual_time"] = t_end + dt;
        metrics["max_ks"] = max_ks;
        metrics["max_sigma_error"] = max_sigma;
    }
    if (integ && !classical) metrics["max_energy_drift"] = max_energy;
    if (classical) metrics["max_trajectory_error"] = max_traj;
    metrics["max_drift"] = max_drift;
    metrics["dt"] = dt;
    metrics["steps"] = steps;
    metrics["t_end"] = t_end;
    metrics["worlds"] = e.size();
    metrics["warnings"] = warnings;
    metrics["lambda"] = s.potential.lambda;
    std::vector<double> mean(n), sd(n);
    for (std::size_t a = 0; a < n; ++a) {
        mean[a] = e.mean(a);
        sd[a] = e.stddev(a);
    }
    metrics["final_mean"] = mean;
    metrics["final_std"] = sd;
}

void run_geometry(const Setup& s, Output& out, json& metrics) {
    const ScalarField mu = s.psi0->density();
    const Metric& g = s.g();
    const std::size_t n = g.dim();
    const double lambda = s.potential.lambda;
    WeylStructure w{g, phi_from_density(mu, g, s.eps, s.order)};
    const ScalarField R = scalar_curvature(w, s.order);
    const ScalarField Q = quantum_potential(mu, g, lambda, s.eps, s.order);
    Mask region = interior_cells(mu.grid(), 2 * static_cast<std::size_t>(stencil_radius(s.order)),
                                 merge_masks(merge_masks(R.mask(), Q.mask()), mu.mask()));
    const double top = mu.max();
    const double gl2 = weyl_coupling(n) * lambda * lambda;
    double qmax = 0.0, err = 0.0;
    std::size_t cells = 0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (!region[i] || !(mu[i] > 1e-6 * top)) continue;
        ++cells;
        qmax = std::max(qmax, std::abs(Q[i]));
        err = std::max(err, std::abs(gl2 * R[i] + Q[i]));
    }
    if (cells == 0) throw DomainTooSmall("no interior cells above the density floor");
    metrics["identity_error"] = err / qmax;
    metrics["q_max"] = qmax;
    metrics["integrability"] = integrability_check(w.phi, s.order);
    metrics["action"] = weyl_action_functional(mu, w.phi, g, s.order);
    metrics["coupling"] = weyl_coupling(n);
    metrics["lambda"] = lambda;
    metrics["region_cells"] = cells;
    out.field("psi", *s.psi0);
    out.diag({{"identity_error", err / qmax}, {"region_cells", cells}});
}

void run_topology(const Config& c, const Setup& s, Output& out, json& metrics) {
    const Hydrodynamic hd = decompose(*s.psi0, s.eps, s.order);
    const NodeSet nodes = detect_nodes(hd.mu, s.eps);
    DecomposeOptions opt;
    opt.order = s.order;
    opt.interpolation = s.interp;
    opt.loop_radius = c.real("topology.loop_radius");
    opt.solver_tolerance = c.real("topology.solver_tolerance");
    const double h = c.has("topology.h") ? c.real("topology.h") : 2 * std::numbers::pi * s.hbar;
    const PhaseDecomposition d = decompose_momentum(hd.p, s.g(), nodes, h, opt);

    json regions = json::array();
    std::vector<long> windings;
    for (std::size_t r = 0; r < nodes.regions.size(); ++r) {
        const NodeRegion& node = nodes.regions[r];
        json j = {{"codimension", node.codimension},
                  {"centroid", node.centroid},
                  {"cells", node.cells.size()},
                  {"order", node.order},
                  {"winding", d.windings[r]},
                  {"defect", d.defects[r]},
                  {"loop_radius", d.loop_radii[r]}};
        if (node.codimension == 2) windings.push_back(d.windings[r]);
        out.diag(j);
        regions.push_back(std::move(j));
    }
    metrics["nodes"] = regions;
    metrics["windings"] = windings;
    metrics["vacuum_regions"] = nodes.vacuum_regions;
    metrics["max_winding_defect"] = d.max_defect;
    metrics["residual"] = d.residual;
    metrics["solver_residual"] = d.solver_residual;
    metrics["h"] = h;
    out.field("psi", *s.psi0);
}

}  // namespace

bool RunResult::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

void check_scenario(const Config& c) {
    validate(c);
    const std::string mode = c.str("scenario.mode");
    for (const CheckSpec& cs : check_specs())
        if (c.explicitly_set(std::string("checks.") + cs.key) && !cs.modes.count(mode))
            throw SchemaError(std::string("checks.") + cs.key + " does not apply to " + mode +
                              " mode");
    if (c.explicitly_set("checks.expect_windings") && mode != "topology_check")
        throw SchemaError("checks.expect_windings does not apply to " + mode + " mode");
}

RunResult run_scenario(const Config& c, const RunOptions& opt) {
    check_scenario(c);
    const std::string mode = c.str("scenario.mode");
    Setup s = make_setup(c);
    const fs::path root = opt.out_root ? *opt.out_root : c.path("scenario.output_dir");
    Output out(root / c.str("scenario.name"));

    json metrics = json::object();
    if (mode == "geometry_check")
        run_geometry(s, out, metrics);
    else if (mode == "topology_check")
        run_topology(c, s, out, metrics);
    else
        run_dynamics(c, s, out, metrics);

    RunResult res;
    res.dir = out.dir;
    for (const CheckSpec& cs : check_specs()) {
        const std::string key = std::string("checks.") + cs.key;
        if (!c.explicitly_set(key)) continue;
        const double value = metrics.at(cs.metric).get<double>();
        const double limit = c.real(key);
        res.checks.push_back({cs.key, value, limit, value <= limit});
    }
    if (c.explicitly_set("checks.expect_windings")) {
        const auto want = c.integers("checks.expect_windings");
        const auto got = metrics.at("windings").get<std::vector<long>>();
        res.checks.push_back({"expect_windings", got, want, got == want});
    }

    json checks = json::array();
    for (const Check& ch : res.checks)
        checks.push_back({{"name", ch.name}, {"value", ch.value}, {"limit", ch.limit},
                          {"pass", ch.pass}});
    json config = json::object();
    for (const auto& [k, v] : c.explicit_values()) config[k] = v;
    res.summary = {{"scenario", c.str("scenario.name")},
                   {"mode", mode},
                   {"version", WEYLWORLDS_VERSION},
                   {"config", config},
                   {"metrics", metrics},
                   {"checks", checks},
                   {"passed", res.passed()}};
    std::ofstream f(out.dir / "summary.json");
    f << res.summary.dump(2) << '\n';
    if (!f) throw IoError("cannot write " + (out.dir / "summary.json").string());
    return res;
}

}  // namespace weylworlds::cli
