#include "mel/gradient.hpp"

#include <cmath>

#include "mel/spectral.hpp"

namespace mel {

namespace {

// d/dx along one axis of one component on a periodic lattice, 2nd order.
void central_periodic(const double* f, double* out, std::array<int, 3> n, int axis,
                      double h) {
  const std::int64_t nx = n[0], ny = n[1], nz = n[2];
  const double inv2h = 1.0 / (2.0 * h);
  const std::int64_t stride = axis == 0 ? 1 : (axis == 1 ? nx : nx * ny);
  const std::int64_t extent = n[axis];
  for (std::int64_t iz = 0; iz < nz; ++iz)
    for (std::int64_t iy = 0; iy < ny; ++iy)
      for (std::int64_t ix = 0; ix < nx; ++ix) {
        const std::int64_t p = (iz * ny + iy) * nx + ix;
        const std::int64_t i = axis == 0 ? ix : (axis == 1 ? iy : iz);
        const std::int64_t ip = p + (i + 1 == extent ? stride * (1 - extent) : stride);
        const std::int64_t im = p - (i == 0 ? stride * (1 - extent) : stride);
        out[p] = (f[ip] - f[im]) * inv2h;
      }
}

// Same on a box: one-sided 2nd-order stencils at the two boundary layers.
void central_box(const double* f, double* out, std::array<int, 3> n, int axis, double h) {
  const std::int64_t nx = n[0], ny = n[1], nz = n[2];
  const double inv2h = 1.0 / (2.0 * h);
  const std::int64_t stride = axis == 0 ? 1 : (axis == 1 ? nx : nx * ny);
  const std::int64_t extent = n[axis];
  for (std::int64_t iz = 0; iz < nz; ++iz)
    for (std::int64_t iy = 0; iy < ny; ++iy)
      for (std::int64_t ix = 0; ix < nx; ++ix) {
        const std::int64_t p = (iz * ny + iy) * nx + ix;
        const std::int64_t i = axis == 0 ? ix : (axis == 1 ? iy : iz);
        if (i == 0)
          out[p] = (-3.0 * f[p] + 4.0 * f[p + stride] - f[p + 2 * stride]) * inv2h;
        else if (i == extent - 1)
          out[p] = (3.0 * f[p] - 4.0 * f[p - stride] + f[p - 2 * stride]) * inv2h;
        else
          out[p] = (f[p + stride] - f[p - stride]) * inv2h;
      }
}

}  // namespace

Field gradient(const Field& f, GradientScheme scheme) {
  if (f.rank() == Rank::matrix3x3)
    throw std::invalid_argument("gradient: rank must be scalar or vector3");
  if (!f.all_finite()) throw std::invalid_argument("gradient: non-finite samples");

  const int ncomp_in = f.components();
  const Rank out_rank = (f.rank() == Rank::scalar) ? Rank::vector3 : Rank::matrix3x3;
  Field out(f.grid(), out_rank);

  if (const CellGrid* cg = f.cell_grid()) {
    const std::array<int, 3> dims = {cg->n, cg->n, cg->n};
    if (scheme == GradientScheme::spectral) {
      SpectralWorkspace ws(dims, Vec3::Ones());
      for (int c = 0; c < ncomp_in; ++c) {
        std::array<double*, 3> g = {out.component(3 * c + 0), out.component(3 * c + 1),
                                    out.component(3 * c + 2)};
        ws.gradient(f.component(c), g);
      }
    } else {
      for (int c = 0; c < ncomp_in; ++c)
        for (int d = 0; d < 3; ++d)
          central_periodic(f.component(c), out.component(3 * c + d), dims, d,
                           cg->spacing());
    }
    return out;
  }

  const BoxGrid& bg = *f.box_grid();
  if (scheme == GradientScheme::spectral)
    throw std::invalid_argument("gradient: box grids use the central-difference scheme");
  const Vec3 h = bg.h();
  for (int c = 0; c < ncomp_in; ++c)
    for (int d = 0; d < 3; ++d)
      central_box(f.component(c), out.component(3 * c + d), bg.n, d, h[d]);
  return out;
}

namespace {

double trilinear_component(const Field& f, int c, const Vec3& point) {
  const BoxGrid& g = *f.box_grid();
  const Vec3 h = g.h();
  int base[3];
  double w[3];
  for (int d = 0; d < 3; ++d) {
    const double t = (point[d] - g.origin[d]) / h[d] - 0.5;
    if (t < -1.0 || t > g.n[d])  // more than one cell outside
      throw DomainError("interpolate: point outside box beyond the one-cell margin");
    int b = int(std::floor(t));
    if (b < 0) b = 0;
    if (b > g.n[d] - 2) b = g.n[d] - 2;
    base[d] = b;
    w[d] = t - b;  // may leave [0,1] near the rim: linear extrapolation
  }
  const double* fc = f.component(c);
  double v = 0.0;
  for (int dz = 0; dz < 2; ++dz)
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx) {
        const double weight = (dx ? w[0] : 1 - w[0]) * (dy ? w[1] : 1 - w[1]) *
                              (dz ? w[2] : 1 - w[2]);
        v += weight * fc[g.index(base[0] + dx, base[1] + dy, base[2] + dz)];
      }
  return v;
}

}  // namespace

std::vector<double> interpolate(const Field& f, const std::vector<Vec3>& points) {
  if (!f.box_grid()) throw std::invalid_argument("interpolate: box-grid fields only");
  const int nc = f.components();
  std::vector<double> out;
  out.reserve(points.size() * std::size_t(nc));
  for (const Vec3& p : points)
    for (int c = 0; c < nc; ++c) out.push_back(trilinear_component(f, c, p));
  return out;
}

Vec3 interpolate_vec3(const Field& f, const Vec3& point) {
  if (f.rank() != Rank::vector3)
    throw std::invalid_argument("interpolate_vec3: vector3 field expected");
  return {trilinear_component(f, 0, point), trilinear_component(f, 1, point),
          trilinear_component(f, 2, point)};
}

}  // namespace mel
