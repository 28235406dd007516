#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mel/grid.hpp"
#include "mel/linalg.hpp"

namespace mel {

enum class Rank : std::uint32_t { scalar = 0, vector3 = 1, matrix3x3 = 2 };

inline int rank_components(Rank r) {
  switch (r) {
    case Rank::scalar: return 1;
    case Rank::vector3: return 3;
    case Rank::matrix3x3: return 9;
  }
  throw std::invalid_argument("unknown rank");
}

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Sample array attached to a grid. Storage is component-major (all samples of
// component 0 first, x fastest within a component), matching both the field
// file layout and per-component FFTs. Fields are immutable once built; every
// operation below returns a new field.
class Field {
 public:
  Field(GridVariant grid, Rank rank)
      : grid_(std::move(grid)),
        rank_(rank),
        npts_(grid_points(grid_)),
        data_(std::size_t(npts_) * rank_components(rank), 0.0) {}

  const GridVariant& grid() const { return grid_; }
  const CellGrid* cell_grid() const { return std::get_if<CellGrid>(&grid_); }
  const BoxGrid* box_grid() const { return std::get_if<BoxGrid>(&grid_); }
  Rank rank() const { return rank_; }
  int components() const { return rank_components(rank_); }
  std::int64_t points() const { return npts_; }

  double& at(std::int64_t point, int comp) { return data_[std::size_t(comp) * npts_ + point]; }
  double at(std::int64_t point, int comp) const { return data_[std::size_t(comp) * npts_ + point]; }

  // Contiguous view of one component.
  double* component(int c) { return data_.data() + std::size_t(c) * npts_; }
  const double* component(int c) const { return data_.data() + std::size_t(c) * npts_; }

  Vec3 vec3_at(std::int64_t p) const {
    return {at(p, 0), at(p, 1), at(p, 2)};
  }
  void set_vec3(std::int64_t p, const Vec3& v) {
    at(p, 0) = v[0];
    at(p, 1) = v[1];
    at(p, 2) = v[2];
  }
  Mat3 mat3_at(std::int64_t p) const {
    Mat3 g;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) g(i, j) = at(p, 3 * i + j);
    return g;
  }
  void set_mat3(std::int64_t p, const Mat3& g) {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) at(p, 3 * i + j) = g(i, j);
  }

  const std::vector<double>& raw() const { return data_; }
  std::vector<double>& raw() { return data_; }

  bool all_finite() const;

 private:
  GridVariant grid_;
  Rank rank_;
  std::int64_t npts_;
  std::vector<double> data_;
};

// Marks the grid points belonging to the sample Omega inside its bounding box.
struct DomainMask {
  BoxGrid grid;
  std::vector<std::uint8_t> inside;

  DomainMask(const BoxGrid& g, std::vector<std::uint8_t> in)
      : grid(g), inside(std::move(in)) {
    if (std::int64_t(inside.size()) != grid.points())
      throw std::invalid_argument("DomainMask: size mismatch");
    if (count() == 0) throw std::invalid_argument("DomainMask: empty mask");
  }

  std::int64_t count() const {
    std::int64_t c = 0;
    for (auto v : inside) c += (v != 0);
    return c;
  }
  double volume() const { return double(count()) * grid.cell_volume(); }

  static DomainMask all(const BoxGrid& g);
  // Axis-aligned sub-box [lo, hi); a point belongs iff its midpoint does.
  static DomainMask sub_box(const BoxGrid& g, const Vec3& lo, const Vec3& hi);
  static DomainMask ball(const BoxGrid& g, const Vec3& center, double radius);
  // True when no inside point touches the outermost cell layer of the box.
  bool strictly_interior() const;
};

// Default size of the tubular neighborhood of S^2 on which the nearest-point
// projection is accepted. The radius is configurable; 0.5 keeps the
// projection single-valued with margin.
inline constexpr double kDeltaFloorDefault = 0.5;

// Nearest-point projection onto the unit sphere.
Vec3 project_sphere(const Vec3& v, double delta_floor = kDeltaFloorDefault);

// Jacobian of v -> v/|v|; used when differentiating projected fields.
inline Mat3 project_sphere_jacobian(const Vec3& v) {
  const double r = v.norm();
  const Vec3 nrm = v / r;
  return (Mat3::Identity() - nrm * nrm.transpose()) / r;
}

// Sphere-valued field: samples are renormalized on construction and kept
// within 1e-12 of unit length.
class Magnetization {
 public:
  explicit Magnetization(Field f, double delta_floor = kDeltaFloorDefault);

  const Field& field() const { return field_; }
  Vec3 at(std::int64_t p) const { return field_.vec3_at(p); }

 private:
  Field field_;
};

// chi_Omega m: zero outside the mask, unchanged inside.
Field extend_by_zero(const Field& f, const DomainMask& mask);

}  // namespace mel
