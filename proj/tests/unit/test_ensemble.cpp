#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include <weylworlds/ensemble.hpp>
#include <weylworlds/error.hpp>

#include "../support/reference.hpp"

using namespace weylworlds;
using std::numbers::pi;

namespace {

ScalarField normal_density(const Grid& grid, double s = 1.0, double c = 0.0) {
    return ScalarField::sample(grid, [=](std::span<const double> x) {
        return std::exp(-(x[0] - c) * (x[0] - c) / (2 * s * s)) / (s * std::sqrt(2 * pi));
    });
}

// KS statistic of sorted samples against the standard normal.
double ks_normal(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = ref::normal_cdf(xs[i]);
        d = std::max({d, std::abs(f - i / n), std::abs(f - (i + 1) / n)});
    }
    return d;
}

}  // namespace

TEST_SUITE("ensemble") {

TEST_CASE("ensemble construction") {
    WorldEnsemble e(2, {0, 1, 2, 3, 4, 5});
    CHECK(e.size() == 3);
    CHECK(e.position(1)[1] == 3.0);
    CHECK(e.label(2)[0] == 4.0);
    CHECK(e.velocity(0)[0] == 0.0);
    e.position(1)[1] = 7.0;
    CHECK(e.label(1)[1] == 3.0);
    CHECK_THROWS_AS(WorldEnsemble(2, {0, 1, 2}), InvalidArgument);
    CHECK_THROWS_AS(WorldEnsemble(1, {0.0}), InvalidArgument);
    CHECK_THROWS_AS(WorldEnsemble(1, {0.0, NAN}), InvalidArgument);
    CHECK_THROWS_AS(WorldEnsemble(1, {0.0, 1.0}, {1.0}), InvalidArgument);
}

TEST_CASE("crossing detection") {
    WorldEnsemble e(1, {0.0, 1.0, 2.0});
    CHECK_FALSE(find_crossing(e).has_value());
    e.position(0)[0] = 1.5;
    CHECK(find_crossing(e).has_value());
}

TEST_CASE("sampling") {
    SUBCASE("uniform density") {
        const Grid grid({Axis{0.0, 1.0, 101}});
        const WorldEnsemble e = sample_from_density(ScalarField(grid, 1.0), 10000, 42);
        std::vector<double> xs(e.positions().begin(), e.positions().end());
        std::sort(xs.begin(), xs.end());
        double d = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i)
            d = std::max({d, std::abs(xs[i] - i / 1e4), std::abs(xs[i] - (i + 1) / 1e4)});
        CHECK(d < 0.02);
    }
    SUBCASE("one hot cell") {
        const Grid grid({Axis{0.0, 1.0, 11}});
        ScalarField mu(grid, 0.0);
        mu[4] = 1.0;
        const WorldEnsemble e = sample_from_density(mu, 500, 1);
        for (double x : e.positions()) {
            CHECK(x >= 0.35 - 1e-12);
            CHECK(x <= 0.45 + 1e-12);
        }
    }
    SUBCASE("Gaussian mean and KS") {
        const Grid grid({Axis{-8.0, 8.0, 1601}});
        const WorldEnsemble e = sample_from_density(normal_density(grid), 10000, 7);
        CHECK(std::abs(e.mean(0)) < 4.0 / 100.0);
        CHECK(ks_normal({e.positions().begin(), e.positions().end()}) < 0.02);
    }
    SUBCASE("deterministic in the seed") {
        const Grid grid({Axis{-4.0, 4.0, 81}});
        const auto a = sample_from_density(normal_density(grid), 100, 5);
        const auto b = sample_from_density(normal_density(grid), 100, 5);
        const auto c = sample_from_density(normal_density(grid), 100, 6);
        CHECK(std::equal(a.positions().begin(), a.positions().end(), b.positions().begin()));
        CHECK_FALSE(std::equal(a.positions().begin(), a.positions().end(), c.positions().begin()));
    }
    SUBCASE("labels equal the initial positions") {
        const Grid grid = Grid::cube(2, -3, 3, 31);
        const auto e = sample_from_density(ScalarField(grid, 1.0), 50, 3);
        CHECK(std::equal(e.labels().begin(), e.labels().end(), e.positions().begin()));
    }
    SUBCASE("bad reference") {
        const Grid grid({Axis{0.0, 1.0, 11}});
        CHECK_THROWS_AS(sample_from_density(ScalarField(grid, 0.0), 10, 1), InvalidArgument);
        CHECK_THROWS_AS(sample_from_density(ScalarField(grid, -1.0), 10, 1), InvalidArgument);
    }
}

TEST_CASE("quantile ensemble") {
    const Grid grid({Axis{-8.0, 8.0, 1601}});
    const std::size_t n = 1000;
    const WorldEnsemble e = quantile_ensemble_1d(normal_density(grid), n);
    const double d = marginal_ks(e, normal_density(grid), 0);
    CHECK(d <= 1.0 / n + 1e-6);
    CHECK(ks_normal({e.positions().begin(), e.positions().end()}) <= 1.0 / n + 1e-4);
}

TEST_CASE("KDE") {
    const Grid grid({Axis{-8.0, 8.0, 801}});
    const Metric g({1.0});
    SUBCASE("large sample") {
        const WorldEnsemble e = sample_from_density(normal_density(grid), 100000, 3);
        const DensityEstimate est = estimate_density_kde(e, grid, silverman_bandwidth(e), g);
        CHECK(est.method == DensityMethod::kde);
        CHECK(integrate(est.mu, g) == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(l1_distance(est.mu, normal_density(grid), g) < 0.05);
    }
    SUBCASE("two kernels are symmetric about their midpoint") {
        const WorldEnsemble e(1, {-1.0, 2.0});
        const DensityEstimate est = estimate_density_kde(e, grid, 0.7, g);
        for (double x : {0.1, 0.9, 2.3}) {
            const double mid = 0.5;
            const std::size_t i = static_cast<std::size_t>(std::lround((mid + x + 8.0) / 0.02));
            const std::size_t j = static_cast<std::size_t>(std::lround((mid - x + 8.0) / 0.02));
            CHECK(est.mu[i] == doctest::Approx(est.mu[j]).epsilon(1e-10));
        }
    }
    SUBCASE("too small a bandwidth overfits") {
        const WorldEnsemble e = sample_from_density(normal_density(grid), 2000, 9);
        double prev = 0.0;
        for (double h : {0.3, 0.1, 0.04}) {
            const double l1 = l1_distance(estimate_density_kde(e, grid, h, g).mu, normal_density(grid), g);
            CHECK(l1 > prev);
            prev = l1;
        }
    }
    SUBCASE("metric weight is honored") {
        const Metric heavy({4.0});
        const WorldEnsemble e = sample_from_density(normal_density(grid), 1000, 9);
        const DensityEstimate est = estimate_density_kde(e, grid, 0.3, heavy);
        CHECK(integrate(est.mu, heavy) == doctest::Approx(1.0).epsilon(1e-6));
    }
    SUBCASE("bandwidth below the spacing is rejected") {
        const WorldEnsemble e(1, {-1.0, 2.0});
        CHECK_THROWS_AS(estimate_density_kde(e, grid, 0.001, g), InvalidArgument);
    }
}

TEST_CASE("silverman bandwidth") {
    std::vector<double> xs;
    for (int i = 0; i < 1000; ++i) xs.push_back(std::sin(i * 1.7) * 2);
    const WorldEnsemble e(1, xs);
    const double sd = e.stddev(0);
    CHECK(silverman_bandwidth(e)[0] ==
          doctest::Approx(std::pow(4.0 / 3.0, 0.2) * sd * std::pow(1000.0, -0.2)));
}

TEST_CASE("spacing estimator") {
    const Metric g({1.0});
    SUBCASE("equally spaced worlds are flat") {
        const Grid grid({Axis{-0.5, 1.5, 401}});
        std::vector<double> xs;
        for (int k = 0; k < 500; ++k) xs.push_back((k + 0.5) / 500.0);
        const DensityEstimate est = estimate_density_spacing_1d(WorldEnsemble(1, xs), grid, g, 1);
        CHECK(est.method == DensityMethod::spacing1d);
        CHECK(integrate(est.mu, g) == doctest::Approx(1.0).epsilon(1e-9));
        const double inside = est.mu[200];
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double x = grid.coord(i, 0);
            if (x > 0.1 && x < 0.9) CHECK(est.mu[i] == doctest::Approx(inside).epsilon(1e-6));
            // tails reach a fixed number of cells past the outer worlds
            if (x < -0.1 || x > 1.1) CHECK(est.mu[i] == 0.0);
        }
    }
    SUBCASE("Gaussian quantiles") {
        const Grid grid({Axis{-8.0, 8.0, 801}});
        const WorldEnsemble e = quantile_ensemble_1d(normal_density(grid), 1000);
        for (std::size_t stride : {std::size_t{1}, std::size_t{0}}) {
            const DensityEstimate est = estimate_density_spacing_1d(e, grid, g, stride);
            CHECK(integrate(est.mu, g) == doctest::Approx(1.0).epsilon(1e-6));
            CHECK(l1_distance(est.mu, normal_density(grid), g) < 0.05);
        }
    }
    SUBCASE("coincident worlds") {
        const Grid grid({Axis{-2.0, 2.0, 101}});
        const WorldEnsemble e = WorldEnsemble::restore(1, {0.0, 0.4, 0.6, 1.0}, {0.0, 0.5, 0.5, 1.0}, {}, 0.0);
        CHECK_THROWS_AS(estimate_density_spacing_1d(e, grid, g, 1),
                        DegenerateSpacing);
    }
    SUBCASE("1D only") {
        const Grid grid = Grid::cube(2, -2, 2, 11);
        CHECK_THROWS(estimate_density_spacing_1d(WorldEnsemble(2, {0, 0, 1, 1, 2, 2}), grid,
                                                 Metric::identity(2)));
    }
    CHECK(default_spacing_stride(1) == 1);
    CHECK(default_spacing_stride(1000) == 40);
}

TEST_CASE("distribution distance") {
    const Grid grid({Axis{-8.0, 8.0, 801}});
    const Metric g({1.0});
    SUBCASE("sampled from the reference") {
        const WorldEnsemble e = sample_from_density(normal_density(grid), 10000, 21);
        const DistributionDistance d = distribution_distance(e, normal_density(grid), g);
        CHECK(d.ks < 0.02);
        CHECK(d.l1 < 0.1);
        CHECK(distribution_distance(e, normal_density(grid), g, false).l1 < 0.0);
    }
    SUBCASE("disjoint support") {
        const WorldEnsemble e = sample_from_density(normal_density(grid, 0.5, -5.0), 5000, 21);
        const DistributionDistance d = distribution_distance(e, normal_density(grid, 0.5, 5.0), g);
        CHECK(d.l1 == doctest::Approx(2.0).epsilon(0.01));
        CHECK(d.ks > 0.99);
    }
}

TEST_CASE("estimator names") {
    CHECK(parse_density_method("kde") == DensityMethod::kde);
    CHECK(parse_density_method("spacing1d") == DensityMethod::spacing1d);
    CHECK(parse_density_method("exact-oracle") == DensityMethod::exact);
    CHECK(to_string(DensityMethod::spacing1d) == "spacing1d");
    CHECK_THROWS_AS(parse_density_method("histogram"), InvalidArgument);
}

}
