#pragma once

// Mask-aware central-difference kernels shared by the real-valued field
// operators and the complex wavefunction gradient.

#include <array>
#include <cstddef>
#include <span>

#include "weylworlds/config_space.hpp"
#include "weylworlds/error.hpp"

namespace weylworlds::detail {

inline constexpr std::array<std::array<double, 3>, 3> kFirst = {{
    {0.5, 0.0, 0.0},
    {2.0 / 3.0, -1.0 / 12.0, 0.0},
    {3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0},
}};

inline constexpr std::array<double, 3> kSecondCenter = {-2.0, -5.0 / 2.0, -49.0 / 18.0};
inline constexpr std::array<std::array<double, 3>, 3> kSecond = {{
    {1.0, 0.0, 0.0},
    {4.0 / 3.0, -1.0 / 12.0, 0.0},
    {3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0},
}};

inline int checked_radius(int order) {
    if (order != 2 && order != 4 && order != 6)
        throw InvalidArgument("finite-difference order must be 2, 4 or 6");
    return order / 2;
}

// Walks a single axis line through `flat` and tells whether the neighbour at
// signed offset k exists and is unmasked; returns its flat index.
struct AxisLine {
    const Grid& grid;
    const Mask& mask;
    std::size_t axis;
    std::size_t count;
    std::size_t stride;
    bool periodic;

    AxisLine(const Grid& g, const Mask& m, std::size_t a)
        : grid(g), mask(m), axis(a), count(g.axis(a).count), stride(g.stride(a)),
          periodic(g.axis(a).periodic) {}

    bool neighbour(std::size_t flat, std::size_t i, long k, std::size_t& out) const {
        long j = static_cast<long>(i) + k;
        const long c = static_cast<long>(count);
        if (periodic) {
            j %= c;
            if (j < 0) j += c;
        } else if (j < 0 || j >= c) {
            return false;
        }
        out = flat - i * stride + static_cast<std::size_t>(j) * stride;
        return mask.empty() || mask[out] == 0;
    }
};

// First derivative at `flat` along `line`. Returns false when no stencil fits.
template <class T>
bool first_derivative_at(std::span<const T> v, const AxisLine& line, std::size_t flat,
                         int radius, double h, T& out) {
    if (!line.mask.empty() && line.mask[flat]) return false;
    const std::size_t i = line.grid.index(flat, line.axis);
    std::size_t p[3], m[3];
    for (int r = radius; r >= 1; --r) {
        bool ok = true;
        for (int k = 1; k <= r && ok; ++k)
            ok = line.neighbour(flat, i, k, p[k - 1]) && line.neighbour(flat, i, -k, m[k - 1]);
        if (!ok) continue;
        T acc{};
        for (int k = 0; k < r; ++k) acc += kFirst[r - 1][k] * (v[p[k]] - v[m[k]]);
        out = acc / h;
        return true;
    }
    std::size_t q;
    if (line.neighbour(flat, i, 1, q)) {
        out = (v[q] - v[flat]) / h;
        return true;
    }
    if (line.neighbour(flat, i, -1, q)) {
        out = (v[flat] - v[q]) / h;
        return true;
    }
    return false;
}

template <class T>
bool second_derivative_at(std::span<const T> v, const AxisLine& line, std::size_t flat,
                          int radius, double h, T& out) {
    if (!line.mask.empty() && line.mask[flat]) return false;
    const std::size_t i = line.grid.index(flat, line.axis);
    std::size_t p[3], m[3];
    for (int r = radius; r >= 1; --r) {
        bool ok = true;
        for (int k = 1; k <= r && ok; ++k)
            ok = line.neighbour(flat, i, k, p[k - 1]) && line.neighbour(flat, i, -k, m[k - 1]);
        if (!ok) continue;
        T acc = kSecondCenter[r - 1] * v[flat];
        for (int k = 0; k < r; ++k) acc += kSecond[r - 1][k] * (v[p[k]] + v[m[k]]);
        out = acc / (h * h);
        return true;
    }
    std::size_t q1, q2;
    if (line.neighbour(flat, i, 1, q1) && line.neighbour(flat, i, 2, q2)) {
        out = (v[flat] - 2.0 * v[q1] + v[q2]) / (h * h);
        return true;
    }
    if (line.neighbour(flat, i, -1, q1) && line.neighbour(flat, i, -2, q2)) {
        out = (v[flat] - 2.0 * v[q1] + v[q2]) / (h * h);
        return true;
    }
    return false;
}

}  // namespace weylworlds::detail
