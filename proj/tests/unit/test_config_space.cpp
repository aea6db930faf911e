#include <doctest.h>

#include <cmath>
#include <numbers>

#include <weylworlds/config_space.hpp>
#include <weylworlds/error.hpp>
#include <weylworlds/interpolation.hpp>

using namespace weylworlds;
using std::numbers::pi;

namespace {

double max_interior_error(const ScalarField& f, std::size_t margin, auto&& exact) {
    const Mask in = interior_cells(f.grid(), margin);
    double err = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
        if (in[i] && !f.masked(i)) err = std::max(err, std::abs(f[i] - exact(f.grid().point(i))));
    return err;
}

}  // namespace

TEST_SUITE("config_space") {

TEST_CASE("mass metric repeats each mass per spatial axis") {
    const std::vector<double> m = {2.0, 5.0};
    const Metric g = build_mass_metric(m, 3);
    REQUIRE(g.dim() == 6);
    const std::vector<double> want = {2, 2, 2, 5, 5, 5};
    for (std::size_t a = 0; a < 6; ++a) CHECK(g.lower(a) == want[a]);
    CHECK(g.sqrt_g() == doctest::Approx(std::sqrt(8.0 * 125.0)));

    const Metric one = build_mass_metric(std::vector<double>{1.0}, 1);
    CHECK(one.dim() == 1);
    CHECK(one.sqrt_g() == 1.0);

    CHECK(build_mass_metric(std::vector<double>{2.0, 3.0}, 1).sqrt_g() ==
          doctest::Approx(std::sqrt(6.0)));
}

TEST_CASE("metric rejects bad input") {
    CHECK_THROWS_AS(build_mass_metric(std::vector<double>{1.0, -2.0}, 3), InvalidArgument);
    CHECK_THROWS_AS(build_mass_metric(std::vector<double>{}, 3), InvalidArgument);
    CHECK_THROWS_AS(build_mass_metric(std::vector<double>{1.0}, 0), InvalidArgument);
    CHECK_THROWS_AS(Metric(std::vector<double>{1.0, 0.0}), InvalidArgument);
    CHECK_THROWS_AS(Metric(std::vector<double>{}), InvalidArgument);
}

TEST_CASE("metric norms") {
    const Metric g({2.0, 4.0});
    const std::vector<double> v = {1.0, 3.0};
    CHECK(g.norm_sq_contravariant(v) == doctest::Approx(2.0 + 36.0));
    CHECK(g.norm_sq_covariant(v) == doctest::Approx(0.5 + 9.0 / 4.0));
}

TEST_CASE("grid layout and quadrature") {
    const Grid grid({Axis{-1.0, 1.0, 11}, Axis{0.0, 2.0, 8, true}});
    CHECK(grid.size() == 88);
    CHECK(grid.spacing(0) == doctest::Approx(0.2));
    CHECK(grid.spacing(1) == doctest::Approx(0.25));
    CHECK(grid.stride(1) == 1);
    CHECK(grid.stride(0) == 8);
    std::vector<std::size_t> idx = {3, 5};
    const std::size_t flat = grid.flat(idx);
    CHECK(grid.index(flat, 0) == 3);
    CHECK(grid.index(flat, 1) == 5);
    CHECK(grid.coord(flat, 0) == doctest::Approx(-0.4));
    CHECK(grid.coord(flat, 1) == doctest::Approx(1.25));
    double vol = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) vol += grid.quadrature_weight(i);
    CHECK(vol == doctest::Approx(4.0));
    CHECK_THROWS_AS(Grid({Axis{0.0, 1.0, 4}}), InvalidArgument);
    CHECK_THROWS_AS(Grid({Axis{1.0, 1.0, 16}}), InvalidArgument);
}

TEST_CASE("gradient of simple fields") {
    SUBCASE("constant field") {
        const Grid grid = Grid::cube(2, -1, 1, 21);
        const VectorField d = gradient(ScalarField(grid, 3.5));
        for (std::size_t a = 0; a < 2; ++a)
            for (double v : d.component(a)) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(d.variance() == Variance::covariant);
    }
    SUBCASE("x^2 converges at second order") {
        double err[2];
        for (int level = 0; level < 2; ++level) {
            const Grid grid({Axis{-1.0, 1.0, static_cast<std::size_t>(40 << level) + 1}});
            const ScalarField f =
                ScalarField::sample(grid, [](std::span<const double> x) { return x[0] * x[0] * x[0]; });
            const VectorField d = gradient(f, 2);
            ScalarField dx(grid, std::vector<double>(d.component(0).begin(), d.component(0).end()));
            err[level] = max_interior_error(dx, 1, [](const Point& x) { return 3 * x[0] * x[0]; });
        }
        CHECK(std::log2(err[0] / err[1]) == doctest::Approx(2.0).epsilon(0.05));

        const Grid grid({Axis{-1.0, 1.0, 41}});
        const ScalarField f =
            ScalarField::sample(grid, [](std::span<const double> x) { return x[0] * x[0]; });
        const VectorField d = gradient(f, 2);
        for (std::size_t i = 1; i + 1 < grid.size(); ++i)
            CHECK(d(0, i) == doctest::Approx(2 * grid.coord(i, 0)).epsilon(1e-12).scale(1.0));
    }
    SUBCASE("xy gives (y, x)") {
        const Grid grid = Grid::cube(2, -1, 1, 17);
        const ScalarField f =
            ScalarField::sample(grid, [](std::span<const double> x) { return x[0] * x[1]; });
        const VectorField d = gradient(f, 4);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            CHECK(d(0, i) == doctest::Approx(grid.coord(i, 1)).scale(1.0));
            CHECK(d(1, i) == doctest::Approx(grid.coord(i, 0)).scale(1.0));
        }
    }
}

TEST_CASE("higher orders are more accurate") {
    const Grid grid({Axis{0.0, 2 * pi, 64, true}});
    const ScalarField f = ScalarField::sample(grid, [](std::span<const double> x) { return std::sin(x[0]); });
    double prev = INFINITY;
    for (int order : {2, 4, 6}) {
        const ScalarField d = partial(f, 0, order);
        const double err = max_interior_error(d, 0, [](const Point& x) { return std::cos(x[0]); });
        CHECK(err < prev);
        prev = err;
    }
    CHECK(prev < 1e-7);
    CHECK_THROWS_AS(partial(f, 0, 3), InvalidArgument);
    CHECK_THROWS_AS(partial(f, 1, 2), InvalidArgument);
}

TEST_CASE("stencils avoid masked cells") {
    const Grid grid({Axis{-1.0, 1.0, 21}});
    ScalarField f = ScalarField::sample(grid, [](std::span<const double> x) { return 2 * x[0] + 1; });
    Mask m(grid.size(), 0);
    m[10] = 1;
    f[10] = 1e30;  // must never be read
    f.set_mask(m);
    const ScalarField d = partial(f, 0, 6);
    CHECK(d.masked(10));
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (!d.masked(i)) CHECK(d[i] == doctest::Approx(2.0));
}

TEST_CASE("weighted divergence") {
    const Grid grid = Grid::cube(2, -1, 1, 17);
    SUBCASE("constant field") {
        VectorField x(grid, {std::vector<double>(grid.size(), 1.5), std::vector<double>(grid.size(), -2.0)},
                      Variance::contravariant);
        const ScalarField d = weighted_divergence(x, Metric::identity(2));
        for (double v : d.values()) CHECK(v == doctest::Approx(0.0).scale(1.0));
    }
    SUBCASE("(x, y) has divergence 2") {
        std::vector<std::vector<double>> c(2, std::vector<double>(grid.size()));
        for (std::size_t i = 0; i < grid.size(); ++i)
            for (std::size_t a = 0; a < 2; ++a) c[a][i] = grid.coord(i, a);
        const ScalarField d =
            weighted_divergence(VectorField(grid, c, Variance::contravariant), Metric::identity(2));
        for (double v : d.values()) CHECK(v == doctest::Approx(2.0));
    }
    SUBCASE("constant sqrt g cancels") {
        const Grid line({Axis{-1.0, 1.0, 21}});
        std::vector<std::vector<double>> c(1, std::vector<double>(line.size()));
        for (std::size_t i = 0; i < line.size(); ++i) c[0][i] = line.coord(i, 0);
        for (double m : {0.5, 3.0}) {
            const ScalarField d =
                weighted_divergence(VectorField(line, c, Variance::contravariant), Metric({m}));
            for (double v : d.values()) CHECK(v == doctest::Approx(1.0));
        }
    }
    SUBCASE("covariant input is rejected") {
        VectorField p(grid, Variance::covariant);
        CHECK_THROWS_AS(weighted_divergence(p, Metric::identity(2)), InvalidArgument);
    }
}

TEST_CASE("laplace-beltrami") {
    const Grid line({Axis{-2.0, 2.0, 41}});
    CHECK(max_interior_error(laplace_beltrami(ScalarField(line, 7.0), Metric({2.0})), 0,
                             [](const Point&) { return 0.0; }) < 1e-10);
    const ScalarField sq = ScalarField::sample(line, [](std::span<const double> x) { return x[0] * x[0]; });
    for (double m : {1.0, 4.0}) {
        const ScalarField lap = laplace_beltrami(sq, Metric({m}), 2);
        CHECK(max_interior_error(lap, 1, [&](const Point&) { return 2.0 / m; }) < 1e-9);
    }
    double err[2];
    for (int level = 0; level < 2; ++level) {
        const Grid grid({Axis{0.0, 2 * pi, static_cast<std::size_t>(32 << level), true}});
        const ScalarField f =
            ScalarField::sample(grid, [](std::span<const double> x) { return std::sin(x[0]); });
        err[level] = max_interior_error(laplace_beltrami(f, Metric({1.0})), 0,
                                        [](const Point& x) { return -std::sin(x[0]); });
    }
    CHECK(err[0] < 1e-2);
    CHECK(std::log2(err[0] / err[1]) == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("raise and lower are inverse") {
    const Grid grid = Grid::cube(2, -1, 1, 9);
    const Metric g({2.0, 0.5});
    VectorField p(grid, Variance::covariant);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        p(0, i) = grid.coord(i, 0);
        p(1, i) = 1.0;
    }
    const VectorField v = raise(p, g);
    CHECK(v.variance() == Variance::contravariant);
    CHECK(v(1, 3) == doctest::Approx(2.0));
    const VectorField back = lower(v, g);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(back(0, i) == doctest::Approx(p(0, i)));
    CHECK_THROWS_AS(raise(v, g), InvalidArgument);
}

TEST_CASE("integrate a Gaussian") {
    const Grid grid = Grid::cube(2, -8, 8, 161);
    const Metric g({1.0, 4.0});
    const ScalarField f = ScalarField::sample(grid, [](std::span<const double> x) {
        return std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1]));
    });
    CHECK(integrate(f, g) == doctest::Approx(2.0 * 2 * pi).epsilon(1e-8));
}

TEST_CASE("interior cells") {
    const Grid grid({Axis{0.0, 1.0, 10}, Axis{0.0, 1.0, 10, true}});
    const Mask m = interior_cells(grid, 2);
    std::size_t count = 0;
    for (auto v : m) count += v;
    CHECK(count == 6 * 10);
    Mask avoid(grid.size(), 0);
    avoid[5 * 10 + 5] = 1;
    const Mask m2 = interior_cells(grid, 1, avoid);
    std::size_t count2 = 0;
    for (auto v : m2) count2 += v;
    CHECK(count2 == 8 * 10 - 9);
}

TEST_CASE("interpolation") {
    const Grid grid = Grid::cube(2, -1, 1, 21);
    const ScalarField f = ScalarField::sample(
        grid, [](std::span<const double> x) { return 1 + 2 * x[0] - x[1] + x[0] * x[1] * x[1]; });
    const std::vector<double> x = {0.33, -0.71};
    const double want = 1 + 2 * x[0] - x[1] + x[0] * x[1] * x[1];
    CHECK(interpolate(f, x, Interpolation::cubic) == doctest::Approx(want).epsilon(1e-12));
    CHECK(interpolate(f, x, Interpolation::linear) == doctest::Approx(want).epsilon(1e-2));
    CHECK_THROWS_AS(interpolate(f, std::vector<double>{1.5, 0.0}), InvalidArgument);
}

}
