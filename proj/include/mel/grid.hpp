#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <variant>

#include "mel/linalg.hpp"

namespace mel {

// Uniform periodic grid on the unit cell Y = [0,1)^3. Collocation points sit
// at cell midpoints (l + 1/2)/n, so that box-grid points x = (j + 1/2) h map
// exactly onto cell points under x -> x/eps for eps = 1/K with K | n_box.
struct CellGrid {
  int n = 0;  // samples per axis, >= 2

  explicit CellGrid(int n_per_axis) : n(n_per_axis) {
    if (n < 2) throw std::invalid_argument("CellGrid: n_per_axis must be >= 2");
  }

  double spacing() const { return 1.0 / n; }
  std::int64_t points() const { return std::int64_t(n) * n * n; }

  double coord1d(int l) const { return (l + 0.5) / n; }
  Vec3 node(int ix, int iy, int iz) const {
    return {coord1d(ix), coord1d(iy), coord1d(iz)};
  }
  std::int64_t index(int ix, int iy, int iz) const {
    return (std::int64_t(iz) * n + iy) * n + ix;
  }

  bool operator==(const CellGrid& o) const { return n == o.n; }
};

// Uniform grid on an axis-aligned box. Nodes are cell midpoints, matching the
// midpoint quadrature rule used by all energy integrals.
struct BoxGrid {
  Vec3 origin = Vec3::Zero();
  Vec3 side = Vec3::Ones();
  std::array<int, 3> n = {0, 0, 0};

  BoxGrid() = default;
  BoxGrid(const Vec3& origin_, const Vec3& side_, std::array<int, 3> n_)
      : origin(origin_), side(side_), n(n_) {
    for (int d = 0; d < 3; ++d) {
      if (n[d] < 1) throw std::invalid_argument("BoxGrid: n_per_axis must be >= 1");
      if (!(side[d] > 0)) throw std::invalid_argument("BoxGrid: side_lengths must be > 0");
    }
  }

  static BoxGrid unit_cube(int n_per_axis) {
    return BoxGrid(Vec3::Zero(), Vec3::Ones(), {n_per_axis, n_per_axis, n_per_axis});
  }

  Vec3 h() const { return {side[0] / n[0], side[1] / n[1], side[2] / n[2]}; }
  double cell_volume() const {
    const Vec3 hh = h();
    return hh[0] * hh[1] * hh[2];
  }
  std::int64_t points() const { return std::int64_t(n[0]) * n[1] * n[2]; }

  Vec3 node(int ix, int iy, int iz) const {
    const Vec3 hh = h();
    return {origin[0] + (ix + 0.5) * hh[0], origin[1] + (iy + 0.5) * hh[1],
            origin[2] + (iz + 0.5) * hh[2]};
  }
  std::int64_t index(int ix, int iy, int iz) const {
    return (std::int64_t(iz) * n[1] + iy) * n[0] + ix;
  }

  bool operator==(const BoxGrid& o) const {
    return origin == o.origin && side == o.side && n == o.n;
  }
};

using GridVariant = std::variant<CellGrid, BoxGrid>;

inline std::int64_t grid_points(const GridVariant& g) {
  return std::visit([](const auto& gr) { return gr.points(); }, g);
}

}  // namespace mel
