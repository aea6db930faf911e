#pragma once

// Closed-form results used as oracles by the tests. Nothing here calls the
// library; formulas are written out directly.

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace ref {

// Gaussian density prod_a exp(-(x_a - c_a)^2 / (2 s_a^2)) with metric diag(m_a):
// Q = -(lambda^2 / 2) sum_a (1/m_a) [ (x_a - c_a)^2 / (4 s_a^4) - 1 / (2 s_a^2) ].
inline double gaussian_quantum_potential(std::span<const double> x, std::span<const double> c,
                                         std::span<const double> s, std::span<const double> m,
                                         double lambda) {
    double lap = 0.0;
    for (std::size_t a = 0; a < x.size(); ++a) {
        const double d = x[a] - c[a];
        lap += (d * d / (4.0 * std::pow(s[a], 4)) - 1.0 / (2.0 * s[a] * s[a])) / m[a];
    }
    return -0.5 * lambda * lambda * lap;
}

// Width of a spreading free packet.
inline double free_sigma(double sigma0, double mass, double hbar, double t) {
    const double tau = hbar * t / (2.0 * mass * sigma0 * sigma0);
    return sigma0 * std::sqrt(1.0 + tau * tau);
}

// Classical oscillator x'' = -omega^2 x.
inline double ho_position(double x0, double v0, double omega, double t) {
    return x0 * std::cos(omega * t) + v0 / omega * std::sin(omega * t);
}
inline double ho_velocity(double x0, double v0, double omega, double t) {
    return -x0 * omega * std::sin(omega * t) + v0 * std::cos(omega * t);
}

// Standard normal CDF.
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Least-squares slope of y against x.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace ref
