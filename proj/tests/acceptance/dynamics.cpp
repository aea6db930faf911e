#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <weylworlds/dynamics.hpp>
#include <weylworlds/ensemble.hpp>
#include <weylworlds/oracle.hpp>

#include "../support/reference.hpp"
#include "acceptance.hpp"

using namespace weylworlds;
using std::numbers::pi;

namespace {

Grid periodic_line(double half, std::size_t count) {
    return Grid({Axis{-half, half, count, true}});
}

// Runs guided worlds from t = 0 to t_end, calling probe(e) at t = 0 and
// every `every` steps.
template <class Probe>
void run_guided(WorldEnsemble& e, OracleMomentumSource& src, const Metric& g, double dt,
                std::size_t steps, std::size_t every, Probe&& probe) {
    MomentumSource p = [&src](double t) { return src(t); };
    probe(e);
    for (std::size_t s = 1; s <= steps; ++s) {
        step_guided(e, p, g, dt);
        if (s % every == 0) probe(e);
    }
}

double max_displacement(const WorldEnsemble& e) {
    double d = 0.0;
    for (std::size_t k = 0; k < e.size(); ++k)
        for (std::size_t a = 0; a < e.dim(); ++a)
            d = std::max(d, std::abs(e.position(k)[a] - e.label(k)[a]));
    return d;
}

}  // namespace

Outcome stationary_balance() {
    // Q + V over the ground-state density, n = 3
    AnalyticState s3;
    s3.kind = StateKind::ho_ground;
    s3.dim = 3;
    s3.mass = 1.3;
    s3.omega = 0.9;
    const Grid g3 = Grid::cube(3, -4.2, 4.2, 64);
    const Metric m3 = state_metric(s3);
    const ScalarField mu3 = analytic_density(s3, g3, 0.0);
    const ScalarField q3 = quantum_potential(mu3, m3, s3.hbar, kDefaultNodeFloor, 6);
    const ScalarField v3 = analytic_potential(s3, g3);
    const double energy = 1.5 * s3.hbar * s3.omega;
    const Mask region = evaluation_region(mu3, 1e-6, 6, q3.mask());
    double balance = 0.0;
    for (std::size_t i = 0; i < g3.size(); ++i)
        if (region[i]) balance = std::max(balance, std::abs(q3[i] + v3[i] - energy) / energy);

    // worlds over one period, n = 1
    AnalyticState s;
    s.kind = StateKind::ho_ground;
    s.mass = 1.3;
    s.omega = 0.9;
    const double sigma = std::sqrt(s.hbar / (2 * s.mass * s.omega));
    const double period = 2 * pi / s.omega;
    const Metric g = state_metric(s);
    const std::size_t N = 1000;

    const Grid pg = periodic_line(14 * sigma, 512);
    const std::size_t gsteps = 500;
    const double gdt = period / gsteps;
    OracleMomentumSource src(analytic_state(s, pg, 0.0), analytic_potential(s, pg), 0.5 * gdt);
    WorldEnsemble guided = quantile_ensemble_1d(analytic_density(s, pg, 0.0), N);
    run_guided(guided, src, g, gdt, gsteps, gsteps, [](const WorldEnsemble&) {});
    const double guided_drift = max_displacement(guided) / sigma;

    const Grid sg({Axis{-10 * sigma, 10 * sigma, 801}});
    IntegratorConfig cfg;
    cfg.estimator = DensityMethod::spacing1d;
    cfg.order = 4;
    WorldEnsemble self = quantile_ensemble_1d(analytic_density(s, sg, 0.0), N);
    SelfContainedIntegrator probe(sg, g, harmonic_potential(g, s.omega, s.hbar), cfg);
    const std::size_t ssteps =
        static_cast<std::size_t>(std::ceil(period / (0.99 * probe.stable_dt(self))));
    cfg.dt = period / static_cast<double>(ssteps);
    SelfContainedIntegrator integ(sg, g, harmonic_potential(g, s.omega, s.hbar), cfg);
    integ.run(self, ssteps);
    const double self_drift = max_displacement(self) / sigma;

    return {balance < 1e-4 && guided_drift < 1e-2 && self_drift < 1e-2,
            format("|Q+V-E|/E = %.2e (n=3); drift/sigma over one period: guided %.2e, "
                   "self-contained %.2e (%zu steps, spacing estimator)",
                   balance, guided_drift, self_drift, ssteps)};
}

Outcome free_spreading() {
    AnalyticState s;
    s.kind = StateKind::free_gaussian;
    s.sigma = 1.0;
    const Metric g = state_metric(s);
    const double t_end = 4 * s.mass * s.sigma * s.sigma / s.hbar;
    const std::size_t N = 10000;

    double guided_err = 0.0;
    {
        const Grid grid = periodic_line(30.0, 2048);
        const double dt = 0.01;
        const std::size_t steps = static_cast<std::size_t>(std::lround(t_end / dt));
        OracleMomentumSource src(analytic_state(s, grid, 0.0), ScalarField(grid, 0.0), 0.5 * dt);
        WorldEnsemble e = quantile_ensemble_1d(analytic_density(s, grid, 0.0), N);
        run_guided(e, src, g, dt, steps, 50, [&](const WorldEnsemble& w) {
            const double want = ref::free_sigma(s.sigma, s.mass, s.hbar, w.t());
            guided_err = std::max(guided_err, std::abs(w.stddev(0) / want - 1.0));
        });
    }

    double self_err = 0.0;
    std::size_t self_steps = 0;
    {
        const Grid grid({Axis{-15.0, 15.0, 1201}});
        IntegratorConfig cfg;
        cfg.estimator = DensityMethod::spacing1d;
        cfg.order = 4;
        WorldEnsemble e = quantile_ensemble_1d(analytic_density(s, grid, 0.0), N);
        const PotentialSpec free{{}, {}, s.hbar, {}};
        SelfContainedIntegrator probe(grid, g, free, cfg);
        self_steps = static_cast<std::size_t>(std::ceil(t_end / (0.99 * probe.stable_dt(e))));
        self_steps = (self_steps + 7) / 8 * 8;
        cfg.dt = t_end / static_cast<double>(self_steps);
        SelfContainedIntegrator integ(grid, g, free, cfg);
        for (std::size_t k = 0; k <= self_steps; ++k) {
            if (k % (self_steps / 8) == 0) {
                const double want = ref::free_sigma(s.sigma, s.mass, s.hbar, e.t());
                self_err = std::max(self_err, std::abs(e.stddev(0) / want - 1.0));
            }
            if (k < self_steps) integ.step(e);
        }
    }
    return {guided_err < 0.02 && self_err < 0.02,
            format("max |std/sigma(t) - 1| to t = %.0f: guided %.2e, self-contained %.2e "
                   "(N = %zu, %zu steps)",
                   t_end, guided_err, self_err, N, self_steps)};
}

Outcome born_rule() {
    struct Case {
        const char* name;
        AnalyticState state;
        double half;
        std::size_t count;
        double t_end, dt;
    };
    std::vector<Case> cases;
    {
        AnalyticState s;
        s.kind = StateKind::free_gaussian;
        s.momentum = {1.0};
        cases.push_back({"free", s, 35.0, 2048, 4.0, 0.01});
    }
    {
        AnalyticState s;
        s.kind = StateKind::ho_ground;
        s.center = {2.0};
        cases.push_back({"coherent", s, 12.0, 512, 2 * pi, 2 * pi / 600});
    }
    {
        AnalyticState s;
        s.kind = StateKind::double_gaussian;
        s.center = {4.0};
        s.momentum = {2.0};
        cases.push_back({"collision", s, 35.0, 2048, 4.0, 0.002});
    }
    std::string detail;
    bool ok = true;
    for (const Case& c : cases) {
        const Grid grid = periodic_line(c.half, c.count);
        const Metric g = state_metric(c.state);
        OracleMomentumSource src(analytic_state(c.state, grid, 0.0),
                                 analytic_potential(c.state, grid), 0.5 * c.dt);
        WorldEnsemble e = sample_from_density(analytic_density(c.state, grid, 0.0), 10000, 7);
        const std::size_t steps = static_cast<std::size_t>(std::lround(c.t_end / c.dt));
        double worst = 0.0;
        run_guided(e, src, g, c.dt, steps, steps / 8, [&](const WorldEnsemble& w) {
            worst = std::max(worst, marginal_ks(w, src.density(w.t()), 0));
        });
        ok = ok && worst < 0.05;
        detail += format("%s%s KS %.4f", detail.empty() ? "" : ", ", c.name, worst);
    }
    return {ok, detail + " (max over 9 output times, N = 10000)"};
}

Outcome residual_convergence() {
    AnalyticState s;
    s.kind = StateKind::free_gaussian;
    s.sigma = 1.0;
    s.momentum = {0.5};
    const Metric g = state_metric(s);
    const PotentialSpec free{{}, {}, s.hbar, {}};
    ResidualOptions opt;
    opt.order = 2;
    opt.region_floor = 1e-6;

    std::vector<double> ce, hj;
    for (int level = 0; level < 3; ++level) {
        const double h = 0.1 / (1 << level), dt = 0.01 / (1 << level);
        const Grid grid = periodic_line(20.0, static_cast<std::size_t>(std::lround(40.0 / h)));
        const std::size_t steps = static_cast<std::size_t>(std::lround(1.0 / dt));
        SplitStepPropagator prop(analytic_state(s, grid, 0.0), ScalarField(grid, 0.0), dt);
        prop.step(steps - 1);
        const WaveFunction before = prop.state();
        prop.step();
        const WaveFunction now = prop.state();
        prop.step();
        const WaveFunction after = prop.state();

        const std::vector<ScalarField> mu = {before.density(), now.density(), after.density()};
        const Hydrodynamic hd = decompose(now, kDefaultNodeFloor, opt.order);
        ce.push_back(continuity_residual(mu, raise(hd.p, g), g, dt, opt));

        std::vector<double> ds(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i)
            ds[i] = s.hbar * std::arg(after[i] * std::conj(before[i])) / (2 * dt);
        hj.push_back(hamilton_jacobi_residual(ScalarField(grid, std::move(ds)), hd.p, hd.mu, free, g,
                                              opt));
    }
    const double ce1 = std::log2(ce[0] / ce[1]), ce2 = std::log2(ce[1] / ce[2]);
    const double hj1 = std::log2(hj[0] / hj[1]), hj2 = std::log2(hj[1] / hj[2]);
    return {std::min({ce1, ce2, hj1, hj2}) >= 1.9,
            format("continuity %.2e %.2e %.2e (orders %.3f, %.3f); HJ %.2e %.2e %.2e (orders "
                   "%.3f, %.3f)",
                   ce[0], ce[1], ce[2], ce1, ce2, hj[0], hj[1], hj[2], hj1, hj2)};
}

namespace {

// Dust on x'' = -x with x(0) = x0, v(0) = 0.3 sin x0, density N(0, 1) at t = 0.
struct Dust {
    double amp = 0.3;

    double label(double x, double t) const {
        double x0 = x;
        for (int it = 0; it < 60; ++it) {
            const double f = x0 * std::cos(t) + amp * std::sin(x0) * std::sin(t) - x;
            const double df = std::cos(t) + amp * std::cos(x0) * std::sin(t);
            const double step = f / df;
            x0 -= step;
            if (std::abs(step) < 1e-15) break;
        }
        return x0;
    }
    double density(double x, double t) const {
        const double x0 = label(x, t);
        const double j = std::cos(t) + amp * std::cos(x0) * std::sin(t);
        return std::exp(-0.5 * x0 * x0) / std::sqrt(2 * pi) / j;
    }
    double velocity(double x, double t) const {
        const double x0 = label(x, t);
        return ref::ho_velocity(x0, amp * std::sin(x0), 1.0, t);
    }
};

}  // namespace

Outcome classical_limit() {
    // trajectories over 10 periods
    const double omega = 1.0;
    const Metric g({1.0});
    const Grid grid({Axis{-8.0, 8.0, 41}});
    std::vector<double> x0, v0;
    Rng rng(99);
    for (int k = 0; k < 200; ++k) {
        x0.push_back(3.0 * (2 * rng.uniform() - 1));
        v0.push_back(2.0 * (2 * rng.uniform() - 1));
    }
    WorldEnsemble e(1, x0, v0);
    IntegratorConfig cfg;
    const double period = 2 * pi / omega;
    const std::size_t per = 1257;  // dt ~ 0.005
    cfg.dt = period / per;
    SelfContainedIntegrator integ(grid, g, harmonic_potential(g, omega, 0.0), cfg);
    double traj_err = 0.0;
    for (std::size_t s = 1; s <= 10 * per; ++s) {
        integ.step(e);
        if (s % (per / 4) != 0 && s != 10 * per) continue;
        for (std::size_t k = 0; k < e.size(); ++k) {
            const double a = std::hypot(x0[k], v0[k] / omega);
            const double want = ref::ho_position(x0[k], v0[k], omega, e.t());
            traj_err = std::max(traj_err, std::abs(e.position(k)[0] - want) / a);
        }
    }

    // continuity of the dust solution
    const Dust dust;
    const double t = 0.5;
    ResidualOptions opt;
    opt.order = 2;
    opt.region_floor = 1e-6;
    std::vector<double> res;
    for (int level = 0; level < 3; ++level) {
        const double h = 0.1 / (1 << level), dt = 0.02 / (1 << level);
        const Grid dg({Axis{-6.0, 6.0, static_cast<std::size_t>(std::lround(12.0 / h)) + 1}});
        std::vector<ScalarField> mu;
        for (double tt : {t - dt, t, t + dt})
            mu.push_back(ScalarField::sample(
                dg, [&](std::span<const double> x) { return dust.density(x[0], tt); }));
        std::vector<std::vector<double>> v(1, std::vector<double>(dg.size()));
        for (std::size_t i = 0; i < dg.size(); ++i) v[0][i] = dust.velocity(dg.coord(i, 0), t);
        res.push_back(continuity_residual(mu, VectorField(dg, std::move(v), Variance::contravariant),
                                          g, dt, opt));
    }
    const double o1 = std::log2(res[0] / res[1]), o2 = std::log2(res[1] / res[2]);
    return {traj_err < 1e-4 && std::min(o1, o2) >= 1.9,
            format("max relative trajectory error %.2e over 10 periods (dt = %.4f); dust continuity "
                   "%.2e %.2e %.2e (orders %.3f, %.3f)",
                   traj_err, cfg.dt, res[0], res[1], res[2], o1, o2)};
}
