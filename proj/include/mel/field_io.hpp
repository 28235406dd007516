#pragma once

#include <string>

#include "mel/field.hpp"

namespace mel {

// Binary field file, little endian:
//   magic "MGH1"
//   u32 rank code   (0 scalar, 1 vector3, 2 matrix3x3)
//   u32 grid kind   (0 cell, 1 box)
//   u32 dims[3]
//   box grids only: f64 origin[3], f64 side_lengths[3]
//   f64 samples, component-major, x fastest within a component
void write_field(const std::string& path, const Field& f);
Field read_field(const std::string& path);

}  // namespace mel
