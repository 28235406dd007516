#pragma once

#include <vector>

#include "mel/field.hpp"

namespace mel {

enum class GradientScheme { spectral, central_difference };

// Per-point Jacobian/gradient of a scalar or vector3 field. Periodic grids
// accept either scheme; box grids use 2nd-order central differences with
// one-sided 2nd-order closures at the boundary. Output component (i, j)
// holds d f_i / d x_j.
Field gradient(const Field& f, GradientScheme scheme);

// Trilinear interpolation on a box grid. Points may leave the box by at most
// one cell (clamped stencil, linear extrapolation near the rim); farther out
// raises DomainError. Exact for affine fields.
std::vector<double> interpolate(const Field& f, const std::vector<Vec3>& points);
Vec3 interpolate_vec3(const Field& f, const Vec3& point);

}  // namespace mel
