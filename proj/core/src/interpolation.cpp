#include "weylworlds/interpolation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <vector>

#include "weylworlds/error.hpp"

namespace weylworlds {

namespace {

struct AxisStencil {
    std::array<std::size_t, 4> index{};
    std::array<double, 4> weight{};
    int points = 0;
};

AxisStencil axis_stencil(const Axis& ax, double h, double x, Interpolation scheme) {
    const long count = static_cast<long>(ax.count);
    double t = (x - ax.min) / h;
    if (!ax.periodic) {
        // tolerate round-off just outside the closed interval
        const double eps = 1e-9;
        if (t < -eps || t > static_cast<double>(count - 1) + eps) {
            std::ostringstream msg;
            msg << "interpolation point " << x << " outside grid axis [" << ax.min << ", "
                << ax.max << "]";
            throw InvalidArgument(msg.str());
        }
        t = std::clamp(t, 0.0, static_cast<double>(count - 1));
    }
    AxisStencil s;
    const int npts = scheme == Interpolation::linear ? 2 : 4;
    long start = static_cast<long>(std::floor(t)) - (npts == 4 ? 1 : 0);
    if (!ax.periodic) start = std::clamp(start, 0L, count - npts);
    const double u = t - static_cast<double>(start);
    s.points = npts;
    for (int k = 0; k < npts; ++k) {
        double w = 1.0;
        for (int m = 0; m < npts; ++m)
            if (m != k) w *= (u - m) / static_cast<double>(k - m);
        long j = start + k;
        if (ax.periodic) {
            j %= count;
            if (j < 0) j += count;
        }
        s.index[k] = static_cast<std::size_t>(j);
        s.weight[k] = w;
    }
    return s;
}

// Calls visit(flat, weight) for every point of the tensor stencil.
template <class Visit>
void for_each_stencil_point(const Grid& grid, std::span<const double> x, Interpolation scheme,
                            Visit&& visit) {
    const std::size_t n = grid.dim();
    if (x.size() != n) throw InvalidArgument("interpolation point has wrong dimension");
    std::vector<AxisStencil> st(n);
    for (std::size_t a = 0; a < n; ++a)
        st[a] = axis_stencil(grid.axis(a), grid.spacing(a), x[a], scheme);
    std::vector<int> k(n, 0);
    while (true) {
        std::size_t flat = 0;
        double w = 1.0;
        for (std::size_t a = 0; a < n; ++a) {
            flat += st[a].index[k[a]] * grid.stride(a);
            w *= st[a].weight[k[a]];
        }
        visit(flat, w);
        std::size_t a = n;
        while (a-- > 0) {
            if (++k[a] < st[a].points) break;
            k[a] = 0;
            if (a == 0) return;
        }
    }
}

[[noreturn]] void throw_masked(std::span<const double> x) {
    std::ostringstream msg;
    msg << "interpolation stencil at (";
    for (std::size_t a = 0; a < x.size(); ++a) msg << (a ? ", " : "") << x[a];
    msg << ") touches a masked node cell";
    throw NodeProximityError(msg.str());
}

}  // namespace

double interpolate(const ScalarField& f, std::span<const double> x, Interpolation scheme) {
    double acc = 0.0;
    for_each_stencil_point(f.grid(), x, scheme, [&](std::size_t flat, double w) {
        if (f.masked(flat)) throw_masked(x);
        acc += w * f[flat];
    });
    return acc;
}

void interpolate(const VectorField& field, std::span<const double> x, std::span<double> out,
                 Interpolation scheme) {
    const std::size_t n = field.dim();
    for (std::size_t a = 0; a < n; ++a) out[a] = 0.0;
    for_each_stencil_point(field.grid(), x, scheme, [&](std::size_t flat, double w) {
        if (field.masked(flat)) throw_masked(x);
        for (std::size_t a = 0; a < n; ++a) out[a] += w * field(a, flat);
    });
}

}  // namespace weylworlds
