#pragma once

#include <cstddef>
#include <span>

#include "weylworlds/config_space.hpp"
#include "weylworlds/interpolation.hpp"

namespace weylworlds {

// Cells with mu below eps_node * max(mu) are nodes: the Weyl one-form and
// everything derived from it are undefined there.
inline constexpr double kDefaultNodeFloor = 1e-12;

Mask node_mask(const ScalarField& mu, double eps_node = kDefaultNodeFloor);

// Weyl geometry (g_ij, phi_k). The Riemannian curvature of the flat,
// constant-metric configuration space is carried explicitly (zero unless a
// caller overrides it).
struct WeylStructure {
    Metric metric;
    VectorField phi;  // covariant, units 1/length
    double riemann_scalar = 0.0;
};

// Connection coefficients of a Weyl geometry over a constant diagonal metric
// (the Christoffel part vanishes):
//   Gamma^k_ij = 1/2 g^kl (g_li phi_j + g_lj phi_i - g_ij phi_l).
class ConnectionCoefficients {
public:
    explicit ConnectionCoefficients(const WeylStructure& w) : weyl_(&w) {}

    // Gamma^k_ij at grid point `flat`.
    double operator()(std::size_t k, std::size_t i, std::size_t j, std::size_t flat) const;
    // Same, for an explicit one-form value.
    static double evaluate(const Metric& g, std::span<const double> phi, std::size_t k,
                           std::size_t i, std::size_t j);

private:
    const WeylStructure* weyl_;
};

ConnectionCoefficients connection(const WeylStructure& w);

// nabla_k g_ij = d_k g_ij + Gamma^l_ki g_lj + Gamma^l_kj g_il. The plus signs
// match the transport convention dA^k = +Gamma^k_ij dx^i A^j; with it the
// non-metricity comes out as +g_ij phi_k.
double metric_covariant_derivative(const WeylStructure& w, std::size_t k, std::size_t i,
                                   std::size_t j, std::size_t flat);

// R = R_Riem + (n-1)(n-2) phi_k phi^k - 2(n-1) (1/sqrt g) d_k(sqrt g phi^k).
ScalarField scalar_curvature(const WeylStructure& w, int order = 2);

// gamma(n) = (n-2) / (8 (n-1)).
double weyl_coupling(std::size_t n);

// Minimiser of the curvature action: phi_i = -d_i(ln mu) / (n - 2). Masked
// below the node floor. Requires n >= 3.
VectorField phi_from_density(const ScalarField& mu, const Metric& g,
                             double eps_node = kDefaultNodeFloor, int order = 2);

// Curvature with the one-form eliminated: R = laplace_beltrami(sqrt mu) / (2 gamma sqrt mu).
ScalarField curvature_from_density(const ScalarField& mu, const Metric& g, double gamma,
                                   double eps_node = kDefaultNodeFloor, int order = 2);
ScalarField curvature_from_density(const ScalarField& mu, const Metric& g,
                                   double eps_node = kDefaultNodeFloor, int order = 2);

// Length after Weyl transport along a polyline: l0 exp(int phi_k dx^k), with
// the line integral evaluated by the trapezoid rule on the path vertices.
double transport_length(const WeylStructure& w, std::span<const Point> path, double l0,
                        Interpolation scheme = Interpolation::cubic);

// The phi-dependent part of the curvature action after partial integration,
//   (n-1) sum_cells [mu sqrt g (n-2) phi_i phi^i + sqrt g phi^i 2 d_i mu] w.
// Masked cells of mu or phi are skipped.
double weyl_action_functional(const ScalarField& mu, const VectorField& phi, const Metric& g,
                              int order = 2);

// max over interior cells of |d_i phi_j - d_j phi_i|.
double integrability_check(const VectorField& phi, int order = 2);

}  // namespace weylworlds
