#include "weylworlds/config_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "stencil.hpp"
#include "weylworlds/error.hpp"
#include "weylworlds/parallel.hpp"

namespace weylworlds {

Metric::Metric(std::vector<double> diag) : diag_(std::move(diag)) {
    if (diag_.empty()) throw InvalidArgument("metric needs at least one dimension");
    double prod = 1.0;
    for (double d : diag_) {
        if (!(d > 0.0) || !std::isfinite(d))
            throw InvalidArgument("metric diagonal entries must be positive and finite");
        prod *= d;
    }
    sqrt_g_ = std::sqrt(prod);
}

Metric Metric::identity(std::size_t n) { return Metric(std::vector<double>(n, 1.0)); }

double Metric::norm_sq_covariant(std::span<const double> p) const {
    double s = 0.0;
    for (std::size_t a = 0; a < diag_.size(); ++a) s += p[a] * p[a] / diag_[a];
    return s;
}

double Metric::norm_sq_contravariant(std::span<const double> v) const {
    double s = 0.0;
    for (std::size_t a = 0; a < diag_.size(); ++a) s += diag_[a] * v[a] * v[a];
    return s;
}

Metric build_mass_metric(std::span<const double> masses, int space_dim) {
    if (masses.empty()) throw InvalidArgument("at least one particle mass is required");
    if (space_dim < 1) throw InvalidArgument("space dimension must be >= 1");
    std::vector<double> diag;
    diag.reserve(masses.size() * static_cast<std::size_t>(space_dim));
    for (double m : masses) {
        if (!(m > 0.0)) throw InvalidArgument("particle masses must be positive");
        for (int k = 0; k < space_dim; ++k) diag.push_back(m);
    }
    return Metric(std::move(diag));
}

Grid::Grid(std::vector<Axis> axes) : axes_(std::move(axes)) {
    if (axes_.empty()) throw InvalidArgument("grid needs at least one axis");
    spacing_.resize(axes_.size());
    strides_.resize(axes_.size());
    size_ = 1;
    for (std::size_t a = axes_.size(); a-- > 0;) {
        const Axis& ax = axes_[a];
        if (ax.count < 8) throw InvalidArgument("each grid axis needs at least 8 points");
        if (!(ax.max > ax.min) || !std::isfinite(ax.min) || !std::isfinite(ax.max))
            throw InvalidArgument("grid axis requires finite min < max");
        spacing_[a] = ax.spacing();
        strides_[a] = size_;
        size_ *= ax.count;
        cell_volume_ *= spacing_[a];
    }
}

Grid Grid::cube(std::size_t dim, double min, double max, std::size_t count, bool periodic) {
    return Grid(std::vector<Axis>(dim, Axis{min, max, count, periodic}));
}

double Grid::max_spacing() const { return *std::max_element(spacing_.begin(), spacing_.end()); }

void Grid::indices(std::size_t flat, std::span<std::size_t> out) const {
    for (std::size_t a = 0; a < axes_.size(); ++a) out[a] = index(flat, a);
}

std::size_t Grid::flat(std::span<const std::size_t> idx) const {
    std::size_t f = 0;
    for (std::size_t a = 0; a < axes_.size(); ++a) f += idx[a] * strides_[a];
    return f;
}

Point Grid::point(std::size_t flat) const {
    Point x(axes_.size());
    for (std::size_t a = 0; a < axes_.size(); ++a) x[a] = coord(flat, a);
    return x;
}

double Grid::quadrature_weight(std::size_t flat) const {
    double w = cell_volume_;
    for (std::size_t a = 0; a < axes_.size(); ++a) {
        if (axes_[a].periodic) continue;
        const std::size_t i = index(flat, a);
        if (i == 0 || i + 1 == axes_[a].count) w *= 0.5;
    }
    return w;
}

std::size_t Grid::boundary_distance(std::size_t flat) const {
    std::size_t d = std::numeric_limits<std::size_t>::max();
    for (std::size_t a = 0; a < axes_.size(); ++a) {
        if (axes_[a].periodic) continue;
        const std::size_t i = index(flat, a);
        d = std::min({d, i, axes_[a].count - 1 - i});
    }
    return d;
}

bool Grid::contains(std::span<const double> x) const {
    for (std::size_t a = 0; a < axes_.size(); ++a) {
        if (axes_[a].periodic) continue;
        if (x[a] < axes_[a].min || x[a] > axes_[a].max) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------

ScalarField::ScalarField(Grid grid, double fill, std::string name)
    : grid_(std::move(grid)), values_(grid_.size(), fill), name_(std::move(name)) {}

ScalarField::ScalarField(Grid grid, std::vector<double> values, std::string name)
    : grid_(std::move(grid)), values_(std::move(values)), name_(std::move(name)) {
    if (values_.size() != grid_.size())
        throw InvalidArgument("scalar field value count does not match grid");
}

void ScalarField::set_mask(Mask mask) {
    if (!mask.empty() && mask.size() != values_.size())
        throw InvalidArgument("mask size does not match grid");
    mask_ = std::move(mask);
    if (std::none_of(mask_.begin(), mask_.end(), [](std::uint8_t m) { return m != 0; }))
        mask_.clear();
    for (std::size_t i = 0; i < mask_.size(); ++i)
        if (mask_[i]) values_[i] = 0.0;
}

std::size_t ScalarField::masked_count() const {
    return static_cast<std::size_t>(std::count_if(mask_.begin(), mask_.end(),
                                                  [](std::uint8_t m) { return m != 0; }));
}

double ScalarField::max() const {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < values_.size(); ++i)
        if (!masked(i)) m = std::max(m, values_[i]);
    return m;
}

double ScalarField::min() const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < values_.size(); ++i)
        if (!masked(i)) m = std::min(m, values_[i]);
    return m;
}

bool ScalarField::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

VectorField::VectorField(Grid grid, Variance variance, std::string name)
    : grid_(std::move(grid)),
      components_(grid_.dim(), std::vector<double>(grid_.size(), 0.0)),
      variance_(variance),
      name_(std::move(name)) {}

VectorField::VectorField(Grid grid, std::vector<std::vector<double>> components,
                         Variance variance, std::string name)
    : grid_(std::move(grid)),
      components_(std::move(components)),
      variance_(variance),
      name_(std::move(name)) {
    if (components_.size() != grid_.dim())
        throw InvalidArgument("vector field needs one component per dimension");
    for (const auto& c : components_)
        if (c.size() != grid_.size())
            throw InvalidArgument("vector field component size does not match grid");
}

void VectorField::at(std::size_t i, std::span<double> out) const {
    for (std::size_t a = 0; a < components_.size(); ++a) out[a] = components_[a][i];
}

void VectorField::set_mask(Mask mask) {
    if (!mask.empty() && mask.size() != grid_.size())
        throw InvalidArgument("mask size does not match grid");
    mask_ = std::move(mask);
    if (std::none_of(mask_.begin(), mask_.end(), [](std::uint8_t m) { return m != 0; }))
        mask_.clear();
    for (std::size_t i = 0; i < mask_.size(); ++i)
        if (mask_[i])
            for (auto& c : components_) c[i] = 0.0;
}

bool VectorField::all_finite() const {
    for (const auto& c : components_)
        if (!std::all_of(c.begin(), c.end(), [](double v) { return std::isfinite(v); }))
            return false;
    return true;
}

Mask merge_masks(const Mask& a, const Mask& b) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    Mask m(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) m[i] = (a[i] || b[i]) ? 1 : 0;
    return m;
}

int stencil_radius(int order) { return detail::checked_radius(order); }

// ---------------------------------------------------------------------------

namespace {

template <bool Second>
ScalarField derivative(const ScalarField& f, std::size_t axis, int order) {
    if (axis >= f.grid().dim()) throw InvalidArgument("axis out of range");
    const int radius = detail::checked_radius(order);
    const Grid& grid = f.grid();
    const detail::AxisLine line(grid, f.mask(), axis);
    const double h = grid.spacing(axis);
    std::vector<double> out(grid.size(), 0.0);
    Mask bad(grid.size(), 0);
    const auto v = f.values();
    parallel_for(grid.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            double d = 0.0;
            const bool ok = Second ? detail::second_derivative_at<double>(v, line, i, radius, h, d)
                                   : detail::first_derivative_at<double>(v, line, i, radius, h, d);
            if (ok)
                out[i] = d;
            else
                bad[i] = 1;
        }
    });
    ScalarField r(grid, std::move(out), f.name());
    r.set_mask(std::move(bad));
    return r;
}

}  // namespace

ScalarField partial(const ScalarField& f, std::size_t axis, int order) {
    return derivative<false>(f, axis, order);
}

ScalarField second_partial(const ScalarField& f, std::size_t axis, int order) {
    return derivative<true>(f, axis, order);
}

VectorField gradient(const ScalarField& f, int order) {
    const Grid& grid = f.grid();
    std::vector<std::vector<double>> comps;
    comps.reserve(grid.dim());
    Mask mask;
    for (std::size_t a = 0; a < grid.dim(); ++a) {
        ScalarField d = partial(f, a, order);
        mask = merge_masks(mask, d.mask());
        comps.emplace_back(d.values().begin(), d.values().end());
    }
    VectorField g(grid, std::move(comps), Variance::covariant, "d" + f.name());
    g.set_mask(std::move(mask));
    return g;
}

ScalarField weighted_divergence(const VectorField& x, const Metric& g, int order) {
    if (x.variance() != Variance::contravariant)
        throw InvalidArgument("weighted_divergence expects a contravariant field");
    if (g.dim() != x.dim()) throw InvalidArgument("metric dimension does not match field");
    const Grid& grid = x.grid();
    // sqrt(g) is constant for the diagonal mass metric, so it cancels.
    ScalarField div(grid, 0.0, "div");
    Mask mask = x.mask();
    for (std::size_t a = 0; a < grid.dim(); ++a) {
        ScalarField comp(grid, std::vector<double>(x.component(a).begin(), x.component(a).end()));
        comp.set_mask(x.mask());
        ScalarField d = partial(comp, a, order);
        mask = merge_masks(mask, d.mask());
        for (std::size_t i = 0; i < grid.size(); ++i) div[i] += d[i];
    }
    div.set_mask(std::move(mask));
    return div;
}

ScalarField laplace_beltrami(const ScalarField& f, const Metric& g, int order) {
    const Grid& grid = f.grid();
    if (g.dim() != grid.dim()) throw InvalidArgument("metric dimension does not match grid");
    ScalarField lap(grid, 0.0, "lap");
    Mask mask = f.mask();
    for (std::size_t a = 0; a < grid.dim(); ++a) {
        ScalarField d = second_partial(f, a, order);
        mask = merge_masks(mask, d.mask());
        const double ginv = g.upper(a);
        for (std::size_t i = 0; i < grid.size(); ++i) lap[i] += ginv * d[i];
    }
    lap.set_mask(std::move(mask));
    return lap;
}

VectorField raise(const VectorField& x, const Metric& g) {
    if (x.variance() != Variance::covariant) throw InvalidArgument("raise expects a covariant field");
    std::vector<std::vector<double>> c;
    for (std::size_t a = 0; a < x.dim(); ++a) {
        c.emplace_back(x.component(a).begin(), x.component(a).end());
        for (double& v : c.back()) v *= g.upper(a);
    }
    VectorField r(x.grid(), std::move(c), Variance::contravariant, x.name());
    r.set_mask(x.mask());
    return r;
}

VectorField lower(const VectorField& x, const Metric& g) {
    if (x.variance() != Variance::contravariant)
        throw InvalidArgument("lower expects a contravariant field");
    std::vector<std::vector<double>> c;
    for (std::size_t a = 0; a < x.dim(); ++a) {
        c.emplace_back(x.component(a).begin(), x.component(a).end());
        for (double& v : c.back()) v *= g.lower(a);
    }
    VectorField r(x.grid(), std::move(c), Variance::covariant, x.name());
    r.set_mask(x.mask());
    return r;
}

double integrate(const ScalarField& f, const Metric& g) {
    const Grid& grid = f.grid();
    double s = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (!f.masked(i)) s += f[i] * grid.quadrature_weight(i);
    return s * g.sqrt_g();
}

Mask interior_cells(const Grid& grid, std::size_t margin, const Mask& avoid) {
    Mask keep(grid.size(), 0);
    for (std::size_t i = 0; i < grid.size(); ++i)
        keep[i] = grid.boundary_distance(i) >= margin ? 1 : 0;
    if (avoid.empty() || margin == 0) {
        for (std::size_t i = 0; i < avoid.size(); ++i)
            if (avoid[i]) keep[i] = 0;
        return keep;
    }
    // Dilate the avoided set by `margin` cells along each axis in turn
    // (separable max filter gives the Chebyshev ball).
    Mask grown = avoid;
    const Mask none;
    for (std::size_t a = 0; a < grid.dim(); ++a) {
        Mask next = grown;
        const detail::AxisLine line(grid, none, a);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (!grown[i]) continue;
            const std::size_t idx = grid.index(i, a);
            for (long k = -static_cast<long>(margin); k <= static_cast<long>(margin); ++k) {
                std::size_t q;
                if (line.neighbour(i, idx, k, q)) next[q] = 1;
            }
        }
        grown = std::move(next);
    }
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (grown[i]) keep[i] = 0;
    return keep;
}

}  // namespace weylworlds
