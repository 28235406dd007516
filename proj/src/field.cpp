#include "mel/field.hpp"

#include <cmath>

namespace mel {

bool Field::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

DomainMask DomainMask::all(const BoxGrid& g) {
  return DomainMask(g, std::vector<std::uint8_t>(g.points(), 1));
}

DomainMask DomainMask::sub_box(const BoxGrid& g, const Vec3& lo, const Vec3& hi) {
  std::vector<std::uint8_t> in(g.points(), 0);
  for (int iz = 0; iz < g.n[2]; ++iz)
    for (int iy = 0; iy < g.n[1]; ++iy)
      for (int ix = 0; ix < g.n[0]; ++ix) {
        const Vec3 x = g.node(ix, iy, iz);
        bool ok = true;
        for (int d = 0; d < 3; ++d) ok = ok && x[d] >= lo[d] && x[d] < hi[d];
        in[g.index(ix, iy, iz)] = ok ? 1 : 0;
      }
  return DomainMask(g, std::move(in));
}

DomainMask DomainMask::ball(const BoxGrid& g, const Vec3& center, double radius) {
  std::vector<std::uint8_t> in(g.points(), 0);
  const double r2 = radius * radius;
  for (int iz = 0; iz < g.n[2]; ++iz)
    for (int iy = 0; iy < g.n[1]; ++iy)
      for (int ix = 0; ix < g.n[0]; ++ix) {
        const Vec3 x = g.node(ix, iy, iz);
        in[g.index(ix, iy, iz)] = ((x - center).squaredNorm() <= r2) ? 1 : 0;
      }
  return DomainMask(g, std::move(in));
}

bool DomainMask::strictly_interior() const {
  for (int iz = 0; iz < grid.n[2]; ++iz)
    for (int iy = 0; iy < grid.n[1]; ++iy)
      for (int ix = 0; ix < grid.n[0]; ++ix) {
        const bool rim = ix == 0 || iy == 0 || iz == 0 || ix == grid.n[0] - 1 ||
                         iy == grid.n[1] - 1 || iz == grid.n[2] - 1;
        if (rim && inside[grid.index(ix, iy, iz)]) return false;
      }
  return true;
}

Vec3 project_sphere(const Vec3& v, double delta_floor) {
  if (!is_finite(v)) throw DomainError("project_sphere: non-finite input");
  const double r = v.norm();
  if (r < delta_floor)
    throw DomainError("project_sphere: input outside the tubular neighborhood (|v| = " +
                      std::to_string(r) + " < " + std::to_string(delta_floor) + ")");
  return v / r;
}

Magnetization::Magnetization(Field f, double delta_floor) : field_(std::move(f)) {
  if (field_.rank() != Rank::vector3)
    throw std::invalid_argument("Magnetization: field must be vector3");
  const std::int64_t np = field_.points();
  for (std::int64_t p = 0; p < np; ++p) {
    const Vec3 v = field_.vec3_at(p);
    field_.set_vec3(p, project_sphere(v, delta_floor));
  }
}

Field extend_by_zero(const Field& f, const DomainMask& mask) {
  const BoxGrid* bg = f.box_grid();
  if (!bg || !(*bg == mask.grid))
    throw std::invalid_argument("extend_by_zero: mask grid must equal field grid");
  Field out = f;
  const std::int64_t np = f.points();
  for (int c = 0; c < f.components(); ++c) {
    double* oc = out.component(c);
    for (std::int64_t p = 0; p < np; ++p)
      if (!mask.inside[p]) oc[p] = 0.0;
  }
  return out;
}

}  // namespace mel
