#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "weylworlds/config_space.hpp"
#include "weylworlds/interpolation.hpp"

namespace weylworlds {

// One connected set of sub-floor cells.
struct NodeRegion {
    std::vector<std::size_t> cells;
    Point centroid;
    std::size_t codimension = 0;
    // Unit vectors spanning the region (tangent) and its normal space, from
    // the principal axes of the cell coordinates.
    std::vector<Point> tangent;
    std::vector<Point> normal;
    // Fitted exponent in mu ~ r^(2m) (NaN when too few samples).
    double order = 0.0;
    std::size_t fit_samples = 0;
};

struct NodeSet {
    std::vector<NodeRegion> regions;
    // Full-dimensional sub-floor blobs (vacuum tails of the density) are not
    // nodes; they are only counted.
    std::size_t vacuum_regions = 0;
    Mask mask;  // all sub-floor cells, vacuum included
};

// Connected-component labelling (face neighbours) of cells with
// mu <= floor * max(mu).
NodeSet detect_nodes(const ScalarField& mu, double floor = 1e-12);

struct Loop {
    std::vector<Point> points;  // closed: points.front() == points.back()
};

// Closed circle c + r (cos t e1 + sin t e2), t from 0 to 2 pi, `segments` edges.
Loop circle_loop(std::span<const double> center, std::span<const double> e1,
                 std::span<const double> e2, double radius, std::size_t segments = 1024);
// Closes the polyline if needed.
Loop polyline_loop(std::vector<Point> points);

// Signed number of times the loop winds around each codimension-2 region
// (0 for other regions), measured in the region's normal plane.
std::vector<long> enclosed_nodes(const Loop& loop, const NodeSet& nodes);

// Trapezoid quadrature of the closed line integral of a covariant field.
double loop_circulation(const VectorField& p, const Loop& loop,
                        Interpolation scheme = Interpolation::cubic);

struct Winding {
    long z = 0;
    double defect = 0.0;
};

// z = round(circulation / h); throws NonQuantizedCirculation when the
// defect exceeds kWindingHardLimit.
inline constexpr double kWindingHardLimit = 0.2;
Winding winding_number(double circulation, double h);

struct DecomposeOptions {
    double loop_radius = 0.0;  // 0: chosen per node from the grid extent
    std::size_t loop_segments = 1024;
    int order = 2;
    Interpolation interpolation = Interpolation::cubic;
    double solver_tolerance = 1e-8;  // relative residual of the Poisson solve
};

struct PhaseDecomposition {
    ScalarField U;
    VectorField dU;  // covariant
    VectorField dW;  // quantized vortex model, covariant
    std::vector<long> windings;   // per node region (0 for non-loop regions)
    std::vector<double> defects;  // per node region
    std::vector<double> loop_radii;
    double h = 0.0;
    double residual = 0.0;  // max |p - dU - dW| over interior cells (metric norm)
    double max_defect = 0.0;
    double solver_residual = 0.0;
};

// p = dU + dW: windings from loop circulations, dW the superposed vortex
// fields z h / (2 pi) around each codimension-2 node, U from the
// finite-volume Poisson problem div(g^-1 dU) = div(g^-1 (p - dW)) with
// zero-flux boundaries (one pinned cell per connected component).
PhaseDecomposition decompose_momentum(const VectorField& p, const Metric& g,
                                      const NodeSet& nodes, double h,
                                      const DecomposeOptions& opt = {});

}  // namespace weylworlds
