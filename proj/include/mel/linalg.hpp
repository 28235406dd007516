#pragma once

#include <Eigen/Core>
#include <Eigen/LU>
#include <Eigen/SVD>

#include <array>
#include <cmath>

namespace mel {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat9 = Eigen::Matrix<double, 9, 9>;
using Vec9 = Eigen::Matrix<double, 9, 1>;

// Flattening convention for 3x3 matrices: flat index a = 3*i + j for entry
// (i, j). Used by the 9x9 tensor representations and the field file format.
inline Vec9 flatten(const Mat3& g) {
  Vec9 v;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) v[3 * i + j] = g(i, j);
  return v;
}

inline Mat3 unflatten(const Vec9& v) {
  Mat3 g;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) g(i, j) = v[3 * i + j];
  return g;
}

inline Mat3 sym(const Mat3& g) { return 0.5 * (g + g.transpose()); }

// Transposed cofactor matrix; adj(F) * F = det(F) * Id.
inline Mat3 adjugate(const Mat3& f) {
  Mat3 a;
  a(0, 0) = f(1, 1) * f(2, 2) - f(1, 2) * f(2, 1);
  a(0, 1) = f(0, 2) * f(2, 1) - f(0, 1) * f(2, 2);
  a(0, 2) = f(0, 1) * f(1, 2) - f(0, 2) * f(1, 1);
  a(1, 0) = f(1, 2) * f(2, 0) - f(1, 0) * f(2, 2);
  a(1, 1) = f(0, 0) * f(2, 2) - f(0, 2) * f(2, 0);
  a(1, 2) = f(0, 2) * f(1, 0) - f(0, 0) * f(1, 2);
  a(2, 0) = f(1, 0) * f(2, 1) - f(1, 1) * f(2, 0);
  a(2, 1) = f(0, 1) * f(2, 0) - f(0, 0) * f(2, 1);
  a(2, 2) = f(0, 0) * f(1, 1) - f(0, 1) * f(1, 0);
  return a;
}

// Largest singular value. Cheap enough for per-point admissibility scans.
inline double operator_norm(const Mat3& g) {
  return g.jacobiSvd().singularValues()[0];
}

inline bool is_finite(const Mat3& g) { return g.allFinite(); }
inline bool is_finite(const Vec3& v) { return v.allFinite(); }

// Compensated accumulator for long quadrature sums.
struct KahanSum {
  double s = 0.0;
  double c = 0.0;
  void add(double v) {
    const double y = v - c;
    const double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  double get() const { return s; }
};

}  // namespace mel
