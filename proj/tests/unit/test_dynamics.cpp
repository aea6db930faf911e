#include <doctest.h>

#include <cmath>
#include <numbers>

#include <weylworlds/dynamics.hpp>
#include <weylworlds/error.hpp>
#include <weylworlds/oracle.hpp>

#include "../support/reference.hpp"

using namespace weylworlds;
using std::numbers::pi;

namespace {

ScalarField gaussian_1d(const Grid& grid, double s, double c = 0.0) {
    return ScalarField::sample(grid, [=](std::span<const double> x) {
        return std::exp(-(x[0] - c) * (x[0] - c) / (2 * s * s)) / (s * std::sqrt(2 * pi));
    });
}

double max_in(const ScalarField& f, const Mask& region, auto&& fn) {
    double worst = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
        if (region[i] && !f.masked(i)) worst = std::max(worst, fn(i));
    return worst;
}

Mask bulk(const ScalarField& mu, std::size_t margin, double floor = 1e-6) {
    Mask m = interior_cells(mu.grid(), margin, mu.mask());
    const double top = mu.max();
    for (std::size_t i = 0; i < m.size(); ++i)
        if (mu[i] < floor * top) m[i] = 0;
    return m;
}

const PotentialSpec kFree{{}, {}, 1.0, {}};

}  // namespace

TEST_SUITE("dynamics") {

TEST_CASE("quantum potential") {
    const Grid grid({Axis{-8.0, 8.0, 641}});
    SUBCASE("constant density") {
        const ScalarField q = quantum_potential(ScalarField(grid, 0.2), Metric({1.0}), 1.0);
        for (std::size_t i = 0; i < q.size(); ++i)
            if (!q.masked(i)) CHECK(q[i] == doctest::Approx(0.0).scale(1.0));
    }
    SUBCASE("oscillator ground state balances V") {
        const double m = 1.7, w = 0.8, hbar = 1.0;
        const double s = std::sqrt(hbar / (2 * m * w));
        const ScalarField mu = gaussian_1d(grid, s);
        const ScalarField q = quantum_potential(mu, Metric({m}), hbar, kDefaultNodeFloor, 6);
        const double e = 0.5 * hbar * w;
        CHECK(max_in(q, bulk(mu, 6), [&](std::size_t i) {
                  const double x = grid.coord(i, 0);
                  return std::abs(q[i] + 0.5 * m * w * w * x * x - e) / e;
              }) < 1e-4);
    }
    SUBCASE("free Gaussian closed form") {
        const double m = 1.3, s = 1.1, hbar = 0.7;
        const ScalarField mu = gaussian_1d(grid, s);
        const ScalarField q = quantum_potential(mu, Metric({m}), hbar, kDefaultNodeFloor, 4);
        const double top = hbar * hbar / (4 * m * s * s);
        CHECK(max_in(q, bulk(mu, 4), [&](std::size_t i) {
                  const double x = grid.coord(i, 0);
                  return std::abs(q[i] - top * (1 - x * x / (2 * s * s)));
              }) < 1e-5 * top * 16);
    }
    SUBCASE("lambda = 0 and negative lambda") {
        const ScalarField mu = gaussian_1d(grid, 1.0);
        const ScalarField q = quantum_potential(mu, Metric({1.0}), 0.0);
        for (double v : q.values()) CHECK(v == 0.0);
        CHECK_THROWS_AS(quantum_potential(mu, Metric({1.0}), -1.0), InvalidArgument);
    }
}

TEST_CASE("total force") {
    const Grid grid({Axis{-6.0, 6.0, 241}});
    SUBCASE("classical oscillator") {
        const double m = 2.0, w = 1.5;
        const Metric g({m});
        const VectorField f = total_force(harmonic_potential(g, w, 0.0), gaussian_1d(grid, 1.0), g);
        CHECK(f.variance() == Variance::contravariant);
        const double k = m * w * w;
        for (std::size_t i = 10; i + 10 < grid.size(); i += 10)
            CHECK(f(0, i) == doctest::Approx(-k * grid.coord(i, 0) / m).scale(1.0));
    }
    SUBCASE("ground state feels no net force") {
        const double m = 1.0, w = 1.0;
        const Metric g({m});
        const ScalarField mu = gaussian_1d(grid, std::sqrt(0.5 / (m * w)));
        const VectorField f = total_force(harmonic_potential(g, w, 1.0), mu, g, kDefaultNodeFloor, 6);
        const Mask region = bulk(mu, 6, 1e-4);
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (region[i]) CHECK(std::abs(f(0, i)) < 1e-3);
    }
    SUBCASE("free packet spreads") {
        const Metric g({1.0});
        const ScalarField mu = gaussian_1d(grid, 1.0);
        const VectorField f = total_force(kFree, mu, g, kDefaultNodeFloor, 4);
        const Mask region = bulk(mu, 4, 1e-4);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double x = grid.coord(i, 0);
            if (!region[i] || std::abs(x) < 0.1) continue;
            CHECK(f(0, i) * x > 0.0);
        }
    }
}

TEST_CASE("self-contained integration") {
    SUBCASE("lambda = 0 and V = 0 is free flight") {
        const Grid grid({Axis{-10.0, 10.0, 41}});
        WorldEnsemble e(1, {-1.0, 0.0, 2.0}, {0.5, -0.25, 1.0});
        IntegratorConfig cfg;
        cfg.dt = 0.1;
        SelfContainedIntegrator integ(grid, Metric({1.0}), PotentialSpec{{}, {}, 0.0, {}}, cfg);
        integ.run(e, 10);
        CHECK(e.t() == doctest::Approx(1.0));
        CHECK(e.position(0)[0] == doctest::Approx(-0.5));
        CHECK(e.position(1)[0] == doctest::Approx(-0.25));
        CHECK(e.position(2)[0] == doctest::Approx(3.0));
        CHECK(e.label(2)[0] == 2.0);
    }
    SUBCASE("ground state with the exact density stays put") {
        AnalyticState s;
        s.kind = StateKind::ho_ground;
        const Grid grid({Axis{-6.0, 6.0, 241}});
        const Metric g = state_metric(s);
        const double sigma = std::sqrt(0.5);
        IntegratorConfig cfg;
        cfg.refresh = DensityRefresh::exact_oracle;
        cfg.estimator = DensityMethod::exact;
        cfg.order = 4;
        const std::size_t steps = 1400;
        cfg.dt = 2 * pi / steps;
        WorldEnsemble e = quantile_ensemble_1d(analytic_density(s, grid, 0.0), 200);
        SelfContainedIntegrator integ(grid, g, harmonic_potential(g, 1.0, 1.0), cfg,
                                      [&](double t) { return analytic_density(s, grid, t); });
        integ.run(e, steps);
        double drift = 0.0;
        for (std::size_t k = 0; k < e.size(); ++k)
            drift = std::max(drift, std::abs(e.position(k)[0] - e.label(k)[0]));
        CHECK(drift < 1e-2 * sigma);
    }
    SUBCASE("free Gaussian spreads at the analytic rate") {
        const Grid grid({Axis{-15.0, 15.0, 1201}});
        const Metric g({1.0});
        IntegratorConfig cfg;
        cfg.estimator = DensityMethod::spacing1d;
        cfg.order = 4;
        WorldEnsemble e = quantile_ensemble_1d(gaussian_1d(grid, 1.0), 2000);
        SelfContainedIntegrator probe(grid, g, kFree, cfg);
        const double t_end = 4.0;
        const auto steps = static_cast<std::size_t>(std::ceil(t_end / (0.99 * probe.stable_dt(e))));
        cfg.dt = t_end / static_cast<double>(steps);
        SelfContainedIntegrator integ(grid, g, kFree, cfg);
        double worst = 0.0;
        for (std::size_t k = 1; k <= steps; ++k) {
            integ.step(e);
            if (k % (steps / 4) == 0 || k == steps)
                worst = std::max(worst, std::abs(e.stddev(0) / ref::free_sigma(1.0, 1.0, 1.0, e.t()) - 1));
        }
        CHECK(worst < 0.02);
    }
    SUBCASE("stability gate") {
        const Grid grid({Axis{-6.0, 6.0, 241}});
        const Metric g({1.0});
        IntegratorConfig cfg;
        cfg.dt = 1.0;
        WorldEnsemble e = sample_from_density(gaussian_1d(grid, 1.0), 500, 1);
        SelfContainedIntegrator integ(grid, g, harmonic_potential(g, 1.0, 1.0), cfg);
        CHECK(integ.stable_dt(e) < 1.0);
        CHECK_THROWS_AS(integ.step(e), InvalidArgument);
    }
    SUBCASE("configuration errors") {
        const Grid grid({Axis{-6.0, 6.0, 241}});
        IntegratorConfig cfg;
        cfg.refresh = DensityRefresh::exact_oracle;
        CHECK_THROWS_AS(SelfContainedIntegrator(grid, Metric({1.0}), kFree, cfg), InvalidArgument);
        cfg = IntegratorConfig{};
        cfg.scheme = Scheme::euler_guided;
        CHECK_THROWS_AS(SelfContainedIntegrator(grid, Metric({1.0}), kFree, cfg), InvalidArgument);
        cfg = IntegratorConfig{};
        cfg.dt = -1;
        CHECK_THROWS_AS(SelfContainedIntegrator(grid, Metric({1.0}), kFree, cfg), InvalidArgument);
        cfg = IntegratorConfig{};
        cfg.estimator = DensityMethod::spacing1d;
        CHECK_THROWS_AS(
            SelfContainedIntegrator(Grid::cube(2, -1, 1, 9), Metric::identity(2), kFree, cfg),
            InvalidArgument);
    }
}

TEST_CASE("guided steps") {
    const Grid grid({Axis{-5.0, 5.0, 101, true}});
    const Metric g({2.0});
    WorldEnsemble e(1, {-1.0, 0.0, 1.5});
    SUBCASE("constant phase leaves worlds at rest") {
        const MomentumSource p = [&](double) { return VectorField(grid, Variance::covariant); };
        for (int k = 0; k < 10; ++k) step_guided(e, p, g, 0.1);
        CHECK(e.position(0)[0] == -1.0);
        CHECK(e.position(2)[0] == 1.5);
    }
    SUBCASE("plane-wave phase translates worlds") {
        const double m = 2.0, v = 0.3;
        const MomentumSource p = [&](double) {
            return VectorField(grid, {std::vector<double>(grid.size(), m * v)}, Variance::covariant);
        };
        for (int k = 0; k < 10; ++k) step_guided(e, p, g, 0.1);
        CHECK(e.position(0)[0] == doctest::Approx(-1.0 + v));
        CHECK(e.position(2)[0] == doctest::Approx(1.5 + v));
        CHECK(e.velocity(1)[0] == doctest::Approx(v));
    }
    SUBCASE("contravariant sources are rejected") {
        const MomentumSource p = [&](double) { return VectorField(grid, Variance::contravariant); };
        CHECK_THROWS_AS(step_guided(e, p, g, 0.1), InvalidArgument);
    }
}

TEST_CASE("guided worlds circulate around a vortex") {
    AnalyticState s;
    s.kind = StateKind::angular_eigenstate;
    s.dim = 2;
    s.winding = 1;
    const Grid grid = Grid::cube(2, -4, 4, 161);
    const Metric g = state_metric(s);
    const VectorField p = analytic_momentum(s, grid, 0.0);
    const MomentumSource src = [&](double) { return p; };
    WorldEnsemble e(2, {1.0, 0.0, 0.0, 1.5, -0.7, -0.7});
    std::vector<double> r0;
    for (std::size_t k = 0; k < e.size(); ++k) r0.push_back(std::hypot(e.position(k)[0], e.position(k)[1]));
    // angular speed hbar / (m r^2): slowest world sets one revolution
    const double period = 2 * pi * 1.5 * 1.5;
    const std::size_t steps = 2000;
    for (std::size_t k = 0; k < steps; ++k) step_guided(e, src, g, period / steps);
    for (std::size_t k = 0; k < e.size(); ++k) {
        const double r = std::hypot(e.position(k)[0], e.position(k)[1]);
        CHECK(std::abs(r / r0[k] - 1) < 0.01);
    }
}

TEST_CASE("continuity residual") {
    const Grid grid({Axis{-8.0, 8.0, 321}});
    const Metric g({1.0});
    ResidualOptions opt;
    opt.region_floor = 1e-6;
    SUBCASE("static density at rest") {
        const ScalarField mu = gaussian_1d(grid, 1.0);
        const std::vector<ScalarField> series = {mu, mu, mu};
        CHECK(continuity_residual(series, VectorField(grid, Variance::contravariant), g, 0.1, opt) ==
              doctest::Approx(0.0).scale(1.0));
    }
    SUBCASE("uniform advection converges at second order") {
        const double v = 0.7;
        std::vector<double> res;
        for (int level = 0; level < 2; ++level) {
            const double h = 0.1 / (1 << level), dt = 0.05 / (1 << level);
            const Grid fine({Axis{-8.0, 8.0, static_cast<std::size_t>(std::lround(16 / h)) + 1}});
            std::vector<ScalarField> mu;
            for (double t : {-dt, 0.0, dt}) mu.push_back(gaussian_1d(fine, 1.0, v * t));
            const VectorField vel(fine, {std::vector<double>(fine.size(), v)}, Variance::contravariant);
            res.push_back(continuity_residual(mu, vel, g, dt, opt));
        }
        CHECK(res[0] < 1e-2);
        CHECK(std::log2(res[0] / res[1]) >= 1.9);
    }
    SUBCASE("input checks") {
        const ScalarField mu = gaussian_1d(grid, 1.0);
        const std::vector<ScalarField> one = {mu};
        CHECK_THROWS_AS(continuity_residual(one, VectorField(grid, Variance::contravariant), g, 0.1),
                        InvalidArgument);
        const std::vector<ScalarField> two = {mu, mu};
        CHECK_THROWS_AS(continuity_residual(two, VectorField(grid, Variance::covariant), g, 0.1),
                        InvalidArgument);
    }
}

TEST_CASE("Hamilton-Jacobi residual") {
    const Grid grid({Axis{-8.0, 8.0, 641}});
    ResidualOptions opt;
    opt.order = 6;
    opt.region_floor = 1e-6;
    SUBCASE("ground state with S = -E t") {
        const double m = 1.0, w = 1.0, e = 0.5 * w;
        const Metric g({m});
        const ScalarField mu = gaussian_1d(grid, std::sqrt(0.5 / (m * w)));
        const double dt = 0.01;
        std::vector<ScalarField> S;
        for (double t : {-dt, 0.0, dt}) S.emplace_back(grid, -e * t);
        CHECK(hamilton_jacobi_residual(S, mu, harmonic_potential(g, w, 1.0), g, dt, opt) <= 1e-4 * e);
    }
    SUBCASE("classical free particle") {
        const double m = 1.5, v = 0.4, dt = 0.01;
        const Metric g({m});
        std::vector<ScalarField> S;
        for (double t : {-dt, 0.0, dt})
            S.push_back(ScalarField::sample(grid, [&](std::span<const double> x) {
                return m * v * x[0] - 0.5 * m * v * v * t;
            }));
        const ScalarField mu = gaussian_1d(grid, 1.0);
        CHECK(hamilton_jacobi_residual(S, mu, PotentialSpec{{}, {}, 0.0, {}}, g, dt, opt) < 1e-10);
    }
}

TEST_CASE("enum names round-trip") {
    for (Scheme s : {Scheme::velocity_verlet, Scheme::euler_guided}) CHECK(parse_scheme(to_string(s)) == s);
    for (DensityRefresh r : {DensityRefresh::every_step, DensityRefresh::exact_oracle})
        CHECK(parse_density_refresh(to_string(r)) == r);
    for (NodePolicy p : {NodePolicy::error, NodePolicy::extrapolate})
        CHECK(parse_node_policy(to_string(p)) == p);
    CHECK_THROWS_AS(parse_scheme("leapfrog"), InvalidArgument);
}

}
