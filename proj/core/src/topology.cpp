#include "weylworlds/topology.hpp"

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <sstream>

#include "weylworlds/error.hpp"
#include "weylworlds/weyl.hpp"

namespace weylworlds {

using std::numbers::pi;

namespace {

// Face neighbours of a cell (periodic wrap; none across open boundaries).
template <class Visit>
void for_each_neighbour(const Grid& grid, std::size_t flat, Visit&& visit) {
    for (std::size_t a = 0; a < grid.dim(); ++a) {
        const std::size_t i = grid.index(flat, a);
        const std::size_t cnt = grid.axis(a).count;
        const std::size_t st = grid.stride(a);
        const std::size_t base = flat - i * st;
        if (i + 1 < cnt)
            visit(base + (i + 1) * st, a, +1);
        else if (grid.axis(a).periodic)
            visit(base, a, +1);
        if (i > 0)
            visit(base + (i - 1) * st, a, -1);
        else if (grid.axis(a).periodic)
            visit(base + (cnt - 1) * st, a, -1);
    }
}

// Number of face neighbours that exist inside the grid.
std::size_t neighbour_slots(const Grid& grid, std::size_t flat) {
    std::size_t s = 0;
    for_each_neighbour(grid, flat, [&](std::size_t, std::size_t, int) { ++s; });
    return s;
}

std::vector<std::vector<std::size_t>> components(const Grid& grid, const Mask& member) {
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::uint8_t> seen(grid.size(), 0);
    for (std::size_t s = 0; s < grid.size(); ++s) {
        if (!member[s] || seen[s]) continue;
        std::vector<std::size_t> comp;
        std::deque<std::size_t> queue{s};
        seen[s] = 1;
        while (!queue.empty()) {
            const std::size_t c = queue.front();
            queue.pop_front();
            comp.push_back(c);
            for_each_neighbour(grid, c, [&](std::size_t nb, std::size_t, int) {
                if (member[nb] && !seen[nb]) {
                    seen[nb] = 1;
                    queue.push_back(nb);
                }
            });
        }
        std::sort(comp.begin(), comp.end());
        out.push_back(std::move(comp));
    }
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

Point unit_axis(std::size_t n, std::size_t a) {
    Point e(n, 0.0);
    e[a] = 1.0;
    return e;
}

// Orthonormal (e1, e2) perpendicular to the unit tangent t with e2 = t x e1.
std::pair<Point, Point> plane_basis(const Point& t) {
    std::size_t least = 0;
    for (std::size_t a = 1; a < 3; ++a)
        if (std::abs(t[a]) < std::abs(t[least])) least = a;
    Point e1 = unit_axis(3, least);
    const double d = dot(e1, t);
    for (std::size_t a = 0; a < 3; ++a) e1[a] -= d * t[a];
    const double nrm = std::sqrt(dot(e1, e1));
    for (double& v : e1) v /= nrm;
    Point e2 = {t[1] * e1[2] - t[2] * e1[1], t[2] * e1[0] - t[0] * e1[2],
                t[0] * e1[1] - t[1] * e1[0]};
    return {e1, e2};
}

void fit_order(const ScalarField& mu, NodeRegion& r, double top) {
    const Grid& grid = mu.grid();
    const std::size_t n = grid.dim();
    const double hmax = grid.max_spacing();
    double hmin = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < n; ++a) hmin = std::min(hmin, grid.spacing(a));
    std::vector<double> rs, ys;
    Point d(n);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (mu.masked(i) || !(mu[i] > 1e-10 * top)) continue;
        for (std::size_t a = 0; a < n; ++a) d[a] = grid.coord(i, a) - r.centroid[a];
        double along = 0.0;
        for (const Point& t : r.tangent) along += dot(d, t) * dot(d, t);
        if (std::sqrt(along) > 0.5 * hmax + 1e-12) continue;
        double rr = 0.0;
        for (const Point& v : r.normal) rr += dot(d, v) * dot(d, v);
        rr = std::sqrt(rr);
        if (rr < 0.5 * hmin) continue;
        rs.push_back(rr);
        ys.push_back(std::log(mu[i]));
    }
    r.fit_samples = rs.size();
    if (rs.size() < 4) {
        r.order = std::numeric_limits<double>::quiet_NaN();
        return;
    }
    // ln mu = a + 2m ln r + c r^2
    Eigen::MatrixXd A(rs.size(), 3);
    Eigen::VectorXd y(rs.size());
    for (std::size_t k = 0; k < rs.size(); ++k) {
        A(k, 0) = 1.0;
        A(k, 1) = 2.0 * std::log(rs[k]);
        A(k, 2) = rs[k] * rs[k];
        y(k) = ys[k];
    }
    const Eigen::VectorXd c = A.colPivHouseholderQr().solve(y);
    r.order = c(1);
}

}  // namespace

NodeSet detect_nodes(const ScalarField& mu, double floor) {
    if (!(floor > 0.0)) throw InvalidArgument("node floor must be positive");
    const Grid& grid = mu.grid();
    const std::size_t n = grid.dim();
    NodeSet set;
    set.mask = node_mask(mu, floor);
    std::size_t masked = 0;
    for (auto m : set.mask) masked += m;
    if (masked == grid.size()) throw InvalidArgument("the whole grid is below the node floor");
    const double top = mu.max();
    const double hmax = grid.max_spacing();

    ScalarField unmasked(mu);
    unmasked.set_mask(set.mask);

    for (auto& cells : components(grid, set.mask)) {
        // A cell whose every face neighbour is also sub-floor makes the
        // region full-dimensional; missing neighbours past an open boundary
        // count as sub-floor.
        bool full = false;
        for (std::size_t c : cells) {
            std::size_t inside = 0;
            for_each_neighbour(grid, c, [&](std::size_t nb, std::size_t, int) {
                inside += set.mask[nb];
            });
            if (inside + (2 * n - neighbour_slots(grid, c)) == 2 * n) {
                full = true;
                break;
            }
        }
        if (full) {
            ++set.vacuum_regions;
            continue;
        }
        NodeRegion r;
        r.centroid.assign(n, 0.0);
        for (std::size_t c : cells)
            for (std::size_t a = 0; a < n; ++a) r.centroid[a] += grid.coord(c, a);
        for (double& v : r.centroid) v /= static_cast<double>(cells.size());

        Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
        for (std::size_t c : cells)
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = 0; b < n; ++b)
                    cov(a, b) += (grid.coord(c, a) - r.centroid[a]) * (grid.coord(c, b) - r.centroid[b]);
        cov /= static_cast<double>(cells.size());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
        std::vector<Point> ext, flat;
        for (std::size_t k = n; k-- > 0;) {  // descending eigenvalues
            Point v(n);
            for (std::size_t a = 0; a < n; ++a) v[a] = eig.eigenvectors()(a, k);
            std::size_t big = 0;
            for (std::size_t a = 1; a < n; ++a)
                if (std::abs(v[a]) > std::abs(v[big])) big = a;
            if (v[big] < 0.0)
                for (double& x : v) x = -x;
            // extent of a uniform segment with this variance
            const double extent = std::sqrt(12.0 * std::max(eig.eigenvalues()(k), 0.0));
            (extent > 3.0 * hmax ? ext : flat).push_back(v);
        }
        r.codimension = flat.size();
        r.tangent = ext;
        if (r.codimension == 2 && n == 3) {
            auto [e1, e2] = plane_basis(r.tangent.at(0));
            r.normal = {e1, e2};
        } else if (r.codimension == n) {
            for (std::size_t a = 0; a < n; ++a) r.normal.push_back(unit_axis(n, a));
        } else {
            r.normal = flat;
        }
        r.cells = std::move(cells);
        fit_order(unmasked, r, top);
        set.regions.push_back(std::move(r));
    }
    return set;
}

Loop circle_loop(std::span<const double> center, std::span<const double> e1,
                 std::span<const double> e2, double radius, std::size_t segments) {
    if (!(radius > 0.0)) throw InvalidArgument("loop radius must be positive");
    if (segments < 3) throw InvalidArgument("a loop needs at least three segments");
    const std::size_t n = center.size();
    if (e1.size() != n || e2.size() != n) throw InvalidArgument("loop basis has wrong dimension");
    Loop l;
    l.points.reserve(segments + 1);
    for (std::size_t k = 0; k < segments; ++k) {
        const double t = 2.0 * pi * static_cast<double>(k) / static_cast<double>(segments);
        Point x(n);
        for (std::size_t a = 0; a < n; ++a)
            x[a] = center[a] + radius * (std::cos(t) * e1[a] + std::sin(t) * e2[a]);
        l.points.push_back(std::move(x));
    }
    l.points.push_back(l.points.front());
    return l;
}

Loop polyline_loop(std::vector<Point> points) {
    if (points.size() < 3) throw InvalidArgument("a loop needs at least three points");
    if (points.front() != points.back()) points.push_back(points.front());
    return Loop{std::move(points)};
}

std::vector<long> enclosed_nodes(const Loop& loop, const NodeSet& nodes) {
    std::vector<long> out(nodes.regions.size(), 0);
    for (std::size_t r = 0; r < nodes.regions.size(); ++r) {
        const NodeRegion& reg = nodes.regions[r];
        if (reg.codimension != 2 || reg.normal.size() != 2) continue;
        double total = 0.0;
        double pa = 0.0, pb = 0.0;
        for (std::size_t k = 0; k < loop.points.size(); ++k) {
            Point d(reg.centroid.size());
            for (std::size_t a = 0; a < d.size(); ++a) d[a] = loop.points[k][a] - reg.centroid[a];
            const double a = dot(d, reg.normal[0]), b = dot(d, reg.normal[1]);
            if (k > 0) {
                double dth = std::atan2(b, a) - std::atan2(pb, pa);
                if (dth > pi) dth -= 2.0 * pi;
                if (dth < -pi) dth += 2.0 * pi;
                total += dth;
            }
            pa = a;
            pb = b;
        }
        out[r] = std::lround(total / (2.0 * pi));
    }
    return out;
}

double loop_circulation(const VectorField& p, const Loop& loop, Interpolation scheme) {
    if (p.variance() != Variance::covariant)
        throw InvalidArgument("circulation needs a covariant field");
    if (loop.points.size() < 4) throw InvalidArgument("a closed loop needs at least three segments");
    const std::size_t n = p.dim();
    const Point& first = loop.points.front();
    const Point& last = loop.points.back();
    double gap = 0.0, scale = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
        gap = std::max(gap, std::abs(first[a] - last[a]));
        scale = std::max(scale, std::abs(first[a]));
    }
    if (gap > 1e-12 * (1.0 + scale)) throw InvalidArgument("loop is not closed");
    std::vector<double> u(n), v(n);
    interpolate(p, loop.points[0], u, scheme);
    double s = 0.0;
    for (std::size_t k = 1; k < loop.points.size(); ++k) {
        if (loop.points[k].size() != n) throw InvalidArgument("loop point has wrong dimension");
        interpolate(p, loop.points[k], v, scheme);
        for (std::size_t a = 0; a < n; ++a)
            s += 0.5 * (u[a] + v[a]) * (loop.points[k][a] - loop.points[k - 1][a]);
        std::swap(u, v);
    }
    return s;
}

Winding winding_number(double circulation, double h) {
    if (!(h > 0.0)) throw InvalidArgument("circulation quantum h must be positive");
    if (!std::isfinite(circulation)) throw InvalidArgument("circulation is not finite");
    const double q = circulation / h;
    Winding w;
    w.z = std::lround(q);
    w.defect = std::abs(q - static_cast<double>(w.z));
    if (w.defect > kWindingHardLimit) {
        std::ostringstream msg;
        msg << "circulation " << circulation << " is " << q << " quanta of " << h
            << "; defect " << w.defect << " exceeds " << kWindingHardLimit;
        throw NonQuantizedCirculation(msg.str(), w.defect);
    }
    return w;
}

namespace {

struct LoopNode {
    std::size_t region;
    Point center, e1, e2;
    double radius;
};

// Largest circle radius around c in the (e1, e2) plane that stays inside
// the non-periodic extent of the grid.
double box_radius(const Grid& grid, const Point& c, const Point& e1, const Point& e2) {
    double r = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < grid.dim(); ++a) {
        if (grid.axis(a).periodic) continue;
        const double reach = std::sqrt(e1[a] * e1[a] + e2[a] * e2[a]);
        if (reach < 1e-12) continue;
        r = std::min(r, std::min(c[a] - grid.axis(a).min, grid.axis(a).max - c[a]) / reach);
    }
    return r;
}

double circulation_of(const VectorField& f, const LoopNode& ln, const DecomposeOptions& opt) {
    const Loop l = circle_loop(ln.center, ln.e1, ln.e2, ln.radius, opt.loop_segments);
    return loop_circulation(f, l, opt.interpolation);
}

VectorField difference(const VectorField& a, const VectorField& b) {
    std::vector<std::vector<double>> c(a.dim());
    for (std::size_t k = 0; k < a.dim(); ++k) {
        c[k].resize(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) c[k][i] = a(k, i) - b(k, i);
    }
    VectorField out(a.grid(), std::move(c), Variance::covariant);
    out.set_mask(merge_masks(a.mask(), b.mask()));
    return out;
}

}  // namespace

PhaseDecomposition decompose_momentum(const VectorField& p, const Metric& g,
                                      const NodeSet& nodes, double h,
                                      const DecomposeOptions& opt) {
    if (p.variance() != Variance::covariant) throw InvalidArgument("p must be covariant");
    if (!(h > 0.0)) throw InvalidArgument("circulation quantum h must be positive");
    const Grid& grid = p.grid();
    const std::size_t n = grid.dim();
    if (g.dim() != n) throw InvalidArgument("metric dimension does not match grid");
    stencil_radius(opt.order);

    Mask mask = p.mask();
    if (!nodes.mask.empty()) mask = merge_masks(mask, nodes.mask);

    // loops around every codimension-2 node
    std::vector<LoopNode> loops;
    for (std::size_t r = 0; r < nodes.regions.size(); ++r) {
        const NodeRegion& reg = nodes.regions[r];
        if (reg.codimension != 2 || reg.normal.size() != 2) continue;
        LoopNode ln{r, reg.centroid, reg.normal[0], reg.normal[1], opt.loop_radius};
        if (!(ln.radius > 0.0)) {
            double limit = box_radius(grid, ln.center, ln.e1, ln.e2);
            for (std::size_t s = 0; s < nodes.regions.size(); ++s) {
                if (s == r) continue;
                double d2 = 0.0;
                for (std::size_t a = 0; a < n; ++a) {
                    const double d = nodes.regions[s].centroid[a] - reg.centroid[a];
                    d2 += d * d;
                }
                limit = std::min(limit, 0.5 * std::sqrt(d2));
            }
            if (!std::isfinite(limit)) limit = 0.25 * (grid.axis(0).max - grid.axis(0).min);
            ln.radius = 0.5 * limit;
        }
        loops.push_back(ln);
    }

    PhaseDecomposition out{ScalarField(grid, 0.0, "U"), VectorField(grid, Variance::covariant, "dU"),
                           VectorField(grid, Variance::covariant, "dW"), {}, {}, {}, h};
    out.windings.assign(nodes.regions.size(), 0);
    out.defects.assign(nodes.regions.size(), 0.0);
    out.loop_radii.assign(nodes.regions.size(), 0.0);

    // first pass: windings from the raw field
    for (LoopNode& ln : loops) {
        double c = 0.0;
        bool ok = false;
        for (int attempt = 0; attempt < 10 && !ok; ++attempt) {
            try {
                c = circulation_of(p, ln, opt);
                ok = true;
            } catch (const NodeProximityError&) {
                ln.radius *= 0.8;
            }
        }
        if (!ok) throw NodeProximityError("no node-free loop found around a node region");
        const Winding w = winding_number(c, h);
        out.windings[ln.region] = w.z;
        out.loop_radii[ln.region] = ln.radius;
    }

    // quantized vortex model
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (mask[i]) continue;
        for (const LoopNode& ln : loops) {
            const long z = out.windings[ln.region];
            if (z == 0) continue;
            double a = 0.0, b = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                const double d = grid.coord(i, k) - ln.center[k];
                a += d * ln.e1[k];
                b += d * ln.e2[k];
            }
            const double r2 = a * a + b * b;
            if (r2 == 0.0) continue;
            const double f = static_cast<double>(z) * h / (2.0 * pi * r2);
            for (std::size_t k = 0; k < n; ++k) out.dW(k, i) += f * (a * ln.e2[k] - b * ln.e1[k]);
        }
    }
    out.dW.set_mask(mask);

    // finite-volume Poisson problem for U on the unmasked cells
    const VectorField q = difference(p, out.dW);
    std::vector<long> unknown(grid.size(), -1);
    std::vector<std::uint8_t> pinned(grid.size(), 0);
    Mask member(grid.size(), 0);
    for (std::size_t i = 0; i < grid.size(); ++i) member[i] = mask[i] ? 0 : 1;
    for (const auto& comp : components(grid, member)) pinned[comp.front()] = 1;
    long count = 0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (member[i] && !pinned[i]) unknown[i] = count++;

    std::vector<double> coef(n);
    for (std::size_t a = 0; a < n; ++a) {
        const double hs = grid.spacing(a);
        // sqrt(g) g^aa (face area / spacing), face area = cell volume / h_a
        coef[a] = g.sqrt_g() * g.upper(a) * grid.cell_volume() / (hs * hs);
    }
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(count);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!member[i] || unknown[i] < 0) continue;
        const long row = unknown[i];
        double diag = 0.0;
        for_each_neighbour(grid, i, [&](std::size_t j, std::size_t a, int dir) {
            if (!member[j]) return;
            diag += coef[a];
            if (unknown[j] >= 0) trip.emplace_back(row, unknown[j], -coef[a]);
            // flux of q through the face, oriented from i to j
            const double qf = 0.5 * (q(a, i) + q(a, j));
            rhs(row) -= coef[a] * grid.spacing(a) * qf * dir;
        });
        trip.emplace_back(row, row, diag);
    }
    Eigen::SparseMatrix<double> A(count, count);
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::VectorXd x = Eigen::VectorXd::Zero(count);
    const double bnorm = rhs.norm();
    if (count > 0 && bnorm > 0.0) {
        Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
        cg.setTolerance(0.1 * opt.solver_tolerance);
        cg.setMaxIterations(std::max<Eigen::Index>(1000, 20 * count));
        cg.compute(A);
        x = cg.solve(rhs);
        out.solver_residual = (rhs - A * x).norm() / bnorm;
        if (!(out.solver_residual < opt.solver_tolerance)) {
            std::ostringstream msg;
            msg << "Poisson solve for U stalled at relative residual " << out.solver_residual
                << " after " << cg.iterations() << " iterations";
            throw NumericalError(msg.str());
        }
    }
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (unknown[i] >= 0) out.U[i] = x(unknown[i]);
    out.U.set_mask(mask);
    out.dU = gradient(out.U, opt.order);
    out.dU.set_name("dU");

    // second pass: the quantized part is what remains after removing dU
    const VectorField rest = difference(p, out.dU);
    for (const LoopNode& ln : loops) {
        const Winding w = winding_number(circulation_of(rest, ln, opt), h);
        if (w.z != out.windings[ln.region]) {
            std::ostringstream msg;
            msg << "winding of node region " << ln.region << " changed from "
                << out.windings[ln.region] << " to " << w.z << " after removing dU";
            throw NumericalError(msg.str());
        }
        out.defects[ln.region] = w.defect;
        out.max_defect = std::max(out.max_defect, w.defect);
    }

    // reconstruction residual on interior cells
    const Mask inner =
        interior_cells(grid, 2 * static_cast<std::size_t>(stencil_radius(opt.order)),
                       merge_masks(mask, out.dU.mask()));
    std::vector<double> d(n);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!inner[i]) continue;
        for (std::size_t a = 0; a < n; ++a) d[a] = p(a, i) - out.dU(a, i) - out.dW(a, i);
        out.residual = std::max(out.residual, std::sqrt(g.norm_sq_covariant(d)));
    }
    return out;
}

}  // namespace weylworlds
