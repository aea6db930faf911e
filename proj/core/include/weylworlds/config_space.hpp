#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace weylworlds {

using Point = std::vector<double>;
using Mask = std::vector<std::uint8_t>;

// Diagonal configuration-space metric. Particle masses live here, so kinetic
// terms read 1/2 g_ij v^i v^j and 1/2 g^ij p_i p_j with no explicit masses.
class Metric {
public:
    explicit Metric(std::vector<double> diag);

    static Metric identity(std::size_t n);

    std::size_t dim() const { return diag_.size(); }
    std::span<const double> diag() const { return diag_; }
    double lower(std::size_t a) const { return diag_[a]; }
    double upper(std::size_t a) const { return 1.0 / diag_[a]; }
    double sqrt_g() const { return sqrt_g_; }

    // g^ij p_i p_j for a covariant vector.
    double norm_sq_covariant(std::span<const double> p) const;
    // g_ij v^i v^j for a contravariant vector.
    double norm_sq_contravariant(std::span<const double> v) const;

    bool operator==(const Metric&) const = default;

private:
    std::vector<double> diag_;
    double sqrt_g_;
};

// diag(m_1 x space_dim, m_2 x space_dim, ...), particles in order.
Metric build_mass_metric(std::span<const double> masses, int space_dim);

struct Axis {
    double min = 0.0;
    double max = 1.0;
    std::size_t count = 8;
    // Periodic axes exclude the right endpoint: x_i = min + i (max - min) / count.
    bool periodic = false;

    double spacing() const {
        return periodic ? (max - min) / static_cast<double>(count)
                        : (max - min) / static_cast<double>(count - 1);
    }
    double coord(std::size_t i) const { return min + spacing() * static_cast<double>(i); }

    bool operator==(const Axis&) const = default;
};

// Rectilinear grid, row-major: the last axis varies fastest.
class Grid {
public:
    explicit Grid(std::vector<Axis> axes);

    static Grid cube(std::size_t dim, double min, double max, std::size_t count,
                     bool periodic = false);

    std::size_t dim() const { return axes_.size(); }
    std::size_t size() const { return size_; }
    const Axis& axis(std::size_t a) const { return axes_[a]; }
    const std::vector<Axis>& axes() const { return axes_; }
    double spacing(std::size_t a) const { return spacing_[a]; }
    double max_spacing() const;
    std::size_t stride(std::size_t a) const { return strides_[a]; }
    double cell_volume() const { return cell_volume_; }

    // Index along axis a of the flat point.
    std::size_t index(std::size_t flat, std::size_t a) const {
        return (flat / strides_[a]) % axes_[a].count;
    }
    void indices(std::size_t flat, std::span<std::size_t> out) const;
    std::size_t flat(std::span<const std::size_t> idx) const;

    double coord(std::size_t flat, std::size_t a) const {
        return axes_[a].min + spacing_[a] * static_cast<double>(index(flat, a));
    }
    Point point(std::size_t flat) const;

    // Trapezoid weight: cell volume, halved per non-periodic endpoint index.
    double quadrature_weight(std::size_t flat) const;

    // Smallest index distance to a non-periodic boundary (SIZE_MAX when all
    // axes are periodic).
    std::size_t boundary_distance(std::size_t flat) const;

    // True when x lies inside the closed bounding box (periodic axes always).
    bool contains(std::span<const double> x) const;

    bool operator==(const Grid& other) const { return axes_ == other.axes_; }

private:
    std::vector<Axis> axes_;
    std::vector<double> spacing_;
    std::vector<std::size_t> strides_;
    std::size_t size_ = 0;
    double cell_volume_ = 1.0;
};

// Grid-sampled scalar. Cells listed in the mask are undefined (typically the
// density is below the node floor there); their stored value is zero.
class ScalarField {
public:
    explicit ScalarField(Grid grid, double fill = 0.0, std::string name = {});
    ScalarField(Grid grid, std::vector<double> values, std::string name = {});

    template <class F>
    static ScalarField sample(const Grid& grid, F&& f, std::string name = {}) {
        std::vector<double> v(grid.size());
        Point x(grid.dim());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            for (std::size_t a = 0; a < grid.dim(); ++a) x[a] = grid.coord(i, a);
            v[i] = f(std::span<const double>(x));
        }
        return ScalarField(grid, std::move(v), std::move(name));
    }

    const Grid& grid() const { return grid_; }
    std::size_t size() const { return values_.size(); }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }

    const std::string& name() const { return name_; }
    void set_name(std::string name) { name_ = std::move(name); }

    bool has_mask() const { return !mask_.empty(); }
    bool masked(std::size_t i) const { return !mask_.empty() && mask_[i] != 0; }
    const Mask& mask() const { return mask_; }
    void set_mask(Mask mask);
    std::size_t masked_count() const;

    // Maximum over unmasked cells.
    double max() const;
    double min() const;
    bool all_finite() const;

private:
    Grid grid_;
    std::vector<double> values_;
    std::string name_;
    Mask mask_;
};

enum class Variance { covariant, contravariant };

class VectorField {
public:
    VectorField(Grid grid, Variance variance, std::string name = {});
    VectorField(Grid grid, std::vector<std::vector<double>> components, Variance variance,
                std::string name = {});

    const Grid& grid() const { return grid_; }
    std::size_t dim() const { return components_.size(); }
    std::size_t size() const { return grid_.size(); }
    Variance variance() const { return variance_; }

    std::span<const double> component(std::size_t a) const { return components_[a]; }
    std::span<double> component(std::size_t a) { return components_[a]; }
    double operator()(std::size_t a, std::size_t i) const { return components_[a][i]; }
    double& operator()(std::size_t a, std::size_t i) { return components_[a][i]; }
    void at(std::size_t i, std::span<double> out) const;

    const std::string& name() const { return name_; }
    void set_name(std::string name) { name_ = std::move(name); }

    bool has_mask() const { return !mask_.empty(); }
    bool masked(std::size_t i) const { return !mask_.empty() && mask_[i] != 0; }
    const Mask& mask() const { return mask_; }
    void set_mask(Mask mask);

    bool all_finite() const;

private:
    Grid grid_;
    std::vector<std::vector<double>> components_;
    Variance variance_;
    std::string name_;
    Mask mask_;
};

// Union of two masks (either may be empty).
Mask merge_masks(const Mask& a, const Mask& b);

// Half-width of the central first/second-derivative stencil of this order.
int stencil_radius(int order);

// Derivative along one axis. Interior points use the central stencil of the
// requested order (2, 4 or 6); where that stencil leaves the grid or touches
// a masked cell the widest central stencil that fits is used, then a
// one-sided first-order difference. Cells with no usable stencil, and masked
// input cells, are masked in the result.
ScalarField partial(const ScalarField& f, std::size_t axis, int order = 2);
ScalarField second_partial(const ScalarField& f, std::size_t axis, int order = 2);

// Covariant gradient d_i f.
VectorField gradient(const ScalarField& f, int order = 2);

// (1/sqrt g) d_i (sqrt g X^i) for a contravariant field.
ScalarField weighted_divergence(const VectorField& x, const Metric& g, int order = 2);

// (1/sqrt g) d_i (sqrt g g^ij d_j f). For the constant diagonal metric this
// is sum_a g^aa d_a^2 f, evaluated with the second-derivative stencil.
ScalarField laplace_beltrami(const ScalarField& f, const Metric& g, int order = 2);

VectorField raise(const VectorField& x, const Metric& g);
VectorField lower(const VectorField& x, const Metric& g);

// sum_cells f sqrt(g) w over unmasked cells (trapezoid weights).
double integrate(const ScalarField& f, const Metric& g);

// Cells at least `margin` indices from every non-periodic boundary and not
// within `margin` cells (Chebyshev distance) of a masked cell.
Mask interior_cells(const Grid& grid, std::size_t margin, const Mask& avoid = {});

}  // namespace weylworlds
