#pragma once

#include <span>

#include "weylworlds/config_space.hpp"

namespace weylworlds {

enum class Interpolation {
    linear,  // tensor-product multilinear, 2^n points
    cubic,   // tensor-product 4-point Lagrange, 4^n points
};

// Value of f at an arbitrary point. Throws InvalidArgument outside a
// non-periodic grid and NodeProximityError when the stencil touches a
// masked cell.
double interpolate(const ScalarField& f, std::span<const double> x,
                   Interpolation scheme = Interpolation::cubic);

// All components of X at x, written to out (size dim).
void interpolate(const VectorField& field, std::span<const double> x, std::span<double> out,
                 Interpolation scheme = Interpolation::cubic);

}  // namespace weylworlds
