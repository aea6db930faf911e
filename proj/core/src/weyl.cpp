#include "weylworlds/weyl.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "weylworlds/error.hpp"

namespace weylworlds {

Mask node_mask(const ScalarField& mu, double eps_node) {
    if (!(eps_node >= 0.0)) throw InvalidArgument("node floor must be nonnegative");
    double top = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i)
        if (!mu.masked(i)) top = std::max(top, mu[i]);
    if (!(top > 0.0)) throw InvalidArgument("density has no positive values");
    const double floor = eps_node * top;
    Mask m(mu.size(), 0);
    for (std::size_t i = 0; i < mu.size(); ++i)
        m[i] = (mu.masked(i) || !(mu[i] > floor)) ? 1 : 0;
    return m;
}

double ConnectionCoefficients::evaluate(const Metric& g, std::span<const double> phi,
                                        std::size_t k, std::size_t i, std::size_t j) {
    // diagonal metric: only l = k survives the contraction
    const double gki = k == i ? g.lower(k) : 0.0;
    const double gkj = k == j ? g.lower(k) : 0.0;
    const double gij = i == j ? g.lower(i) : 0.0;
    return 0.5 * g.upper(k) * (gki * phi[j] + gkj * phi[i] - gij * phi[k]);
}

double ConnectionCoefficients::operator()(std::size_t k, std::size_t i, std::size_t j,
                                          std::size_t flat) const {
    const VectorField& phi = weyl_->phi;
    if (phi.masked(flat)) throw NodeProximityError("connection requested at a node cell");
    const std::size_t n = phi.dim();
    std::vector<double> p(n);
    phi.at(flat, p);
    return evaluate(weyl_->metric, p, k, i, j);
}

ConnectionCoefficients connection(const WeylStructure& w) {
    if (w.phi.variance() != Variance::covariant)
        throw InvalidArgument("Weyl one-form must be covariant");
    if (w.phi.dim() != w.metric.dim()) throw InvalidArgument("one-form and metric disagree on n");
    return ConnectionCoefficients(w);
}

double metric_covariant_derivative(const WeylStructure& w, std::size_t k, std::size_t i,
                                   std::size_t j, std::size_t flat) {
    const Metric& g = w.metric;
    const std::size_t n = g.dim();
    if (k >= n || i >= n || j >= n) throw InvalidArgument("index out of range");
    // d_k g_ij = 0: the metric is constant
    const ConnectionCoefficients gamma = connection(w);
    double s = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
        if (l == j) s += gamma(l, k, i, flat) * g.lower(j);
        if (l == i) s += gamma(l, k, j, flat) * g.lower(i);
    }
    return s;
}

ScalarField scalar_curvature(const WeylStructure& w, int order) {
    const std::size_t n = w.metric.dim();
    if (n < 2) throw InvalidArgument("scalar curvature needs n >= 2");
    if (w.phi.dim() != n) throw InvalidArgument("one-form and metric disagree on n");
    if (w.phi.variance() != Variance::covariant)
        throw InvalidArgument("Weyl one-form must be covariant");
    const Grid& grid = w.phi.grid();
    const double nn = static_cast<double>(n);

    const VectorField up = raise(w.phi, w.metric);
    const ScalarField div = weighted_divergence(up, w.metric, order);

    std::vector<double> r(grid.size(), 0.0);
    std::vector<double> p(n);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        w.phi.at(i, p);
        const double sq = w.metric.norm_sq_covariant(p);
        r[i] = w.riemann_scalar + (nn - 1.0) * (nn - 2.0) * sq - 2.0 * (nn - 1.0) * div[i];
    }
    ScalarField out(grid, std::move(r), "R");
    out.set_mask(merge_masks(w.phi.mask(), div.mask()));
    return out;
}

double weyl_coupling(std::size_t n) {
    if (n < 2) throw InvalidArgument("coupling needs n >= 2");
    const double nn = static_cast<double>(n);
    return (nn - 2.0) / (8.0 * (nn - 1.0));
}

VectorField phi_from_density(const ScalarField& mu, const Metric& g, double eps_node,
                             int order) {
    const std::size_t n = mu.grid().dim();
    if (g.dim() != n) throw InvalidArgument("metric dimension does not match grid");
    if (n <= 2) throw UnsupportedDimension("Weyl one-form from density needs n >= 3");
    const Mask nodes = node_mask(mu, eps_node);

    std::vector<double> lnmu(mu.size(), 0.0);
    for (std::size_t i = 0; i < mu.size(); ++i)
        if (!nodes[i]) lnmu[i] = std::log(mu[i]);
    ScalarField ln(mu.grid(), std::move(lnmu), "ln_mu");
    ln.set_mask(nodes);

    VectorField phi = gradient(ln, order);
    const double scale = -1.0 / (static_cast<double>(n) - 2.0);
    for (std::size_t a = 0; a < n; ++a)
        for (double& v : phi.component(a)) v *= scale;
    phi.set_name("phi");
    return phi;
}

ScalarField curvature_from_density(const ScalarField& mu, const Metric& g, double gamma,
                                   double eps_node, int order) {
    if (gamma == 0.0 || !std::isfinite(gamma))
        throw InvalidArgument("coupling gamma must be nonzero and finite");
    if (g.dim() != mu.grid().dim()) throw InvalidArgument("metric dimension does not match grid");
    const Mask nodes = node_mask(mu, eps_node);
    std::vector<double> amp(mu.size(), 0.0);
    for (std::size_t i = 0; i < mu.size(); ++i)
        if (!nodes[i]) amp[i] = std::sqrt(mu[i]);
    ScalarField root(mu.grid(), amp, "sqrt_mu");
    root.set_mask(nodes);

    ScalarField lap = laplace_beltrami(root, g, order);
    std::vector<double> r(mu.size(), 0.0);
    for (std::size_t i = 0; i < mu.size(); ++i)
        if (!lap.masked(i)) r[i] = lap[i] / (2.0 * gamma * amp[i]);
    ScalarField out(mu.grid(), std::move(r), "R");
    out.set_mask(lap.mask());
    return out;
}

ScalarField curvature_from_density(const ScalarField& mu, const Metric& g, double eps_node,
                                   int order) {
    return curvature_from_density(mu, g, weyl_coupling(g.dim()), eps_node, order);
}

double transport_length(const WeylStructure& w, std::span<const Point> path, double l0,
                        Interpolation scheme) {
    if (!(l0 > 0.0)) throw InvalidArgument("initial length must be positive");
    if (path.empty()) return l0;
    const std::size_t n = w.phi.dim();
    std::vector<double> a(n), b(n);
    interpolate(w.phi, path[0], a, scheme);
    double integral = 0.0;
    for (std::size_t k = 1; k < path.size(); ++k) {
        if (path[k].size() != n) throw InvalidArgument("path point has wrong dimension");
        interpolate(w.phi, path[k], b, scheme);
        for (std::size_t c = 0; c < n; ++c)
            integral += 0.5 * (a[c] + b[c]) * (path[k][c] - path[k - 1][c]);
        std::swap(a, b);
    }
    return l0 * std::exp(integral);
}

double weyl_action_functional(const ScalarField& mu, const VectorField& phi, const Metric& g,
                              int order) {
    const Grid& grid = mu.grid();
    const std::size_t n = grid.dim();
    if (phi.dim() != n || g.dim() != n) throw InvalidArgument("dimension mismatch");
    if (phi.variance() != Variance::covariant) throw InvalidArgument("phi must be covariant");
    const VectorField dmu = gradient(mu, order);
    const double nn = static_cast<double>(n);
    std::vector<double> p(n), d(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (mu.masked(i) || phi.masked(i) || dmu.masked(i)) continue;
        phi.at(i, p);
        dmu.at(i, d);
        double cross = 0.0;
        for (std::size_t a = 0; a < n; ++a) cross += g.upper(a) * p[a] * d[a];
        const double cell = mu[i] * (nn - 2.0) * g.norm_sq_covariant(p) + 2.0 * cross;
        sum += cell * grid.quadrature_weight(i);
    }
    return (nn - 1.0) * g.sqrt_g() * sum;
}

double integrability_check(const VectorField& phi, int order) {
    const Grid& grid = phi.grid();
    const std::size_t n = phi.dim();
    const Mask inner =
        interior_cells(grid, static_cast<std::size_t>(stencil_radius(order)), phi.mask());
    std::vector<ScalarField> comp;
    for (std::size_t a = 0; a < n; ++a) {
        comp.emplace_back(grid, std::vector<double>(phi.component(a).begin(),
                                                    phi.component(a).end()));
        comp.back().set_mask(phi.mask());
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const ScalarField dij = partial(comp[j], i, order);
            const ScalarField dji = partial(comp[i], j, order);
            for (std::size_t c = 0; c < grid.size(); ++c) {
                if (!inner[c] || dij.masked(c) || dji.masked(c)) continue;
                worst = std::max(worst, std::abs(dij[c] - dji[c]));
            }
        }
    return worst;
}

}  // namespace weylworlds
