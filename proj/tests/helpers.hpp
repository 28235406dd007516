#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mel/field.hpp"
#include "mel/material.hpp"

namespace melt {

using mel::Mat3;
using mel::Vec3;

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1e-300, std::abs(want));
}

inline Mat3 random_mat3(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Mat3 g;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) g(i, j) = scale * nd(rng);
  return g;
}

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Vec3 v(nd(rng), nd(rng), nd(rng));
  while (v.norm() < 1e-8) v = Vec3(nd(rng), nd(rng), nd(rng));
  return v.normalized();
}

inline Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::Quaterniond q(nd(rng), nd(rng), nd(rng), nd(rng));
  q.normalize();
  return q.toRotationMatrix();
}

// 1-D spectral differentiation matrix on n midpoint lattice points of the
// unit circle, assembled directly from the DFT definition (independent of the
// library's FFT path). The Nyquist symbol is zero for even n.
inline Eigen::MatrixXd spectral_diff_matrix(int n) {
  using cd = std::complex<double>;
  const cd I(0.0, 1.0);
  Eigen::MatrixXcd W(n, n), D(n, n);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l)
      W(k, l) = std::exp(-2.0 * std::numbers::pi * I * double(k * l) / double(n));
  Eigen::VectorXcd sym(n);
  for (int k = 0; k < n; ++k) {
    int freq = (k <= n / 2) ? k : k - n;
    if (n % 2 == 0 && k == n / 2) freq = 0;
    sym(k) = 2.0 * std::numbers::pi * I * double(freq);
  }
  D = W.adjoint() * sym.asDiagonal() * W / double(n);
  return D.real();
}

// Dense minimization of (1/n) sum_j a_j (r + (D phi)_j)^2 over periodic phi;
// the oracle for the 1-D laminate exchange value.
inline double dense_exchange_1d(const std::vector<double>& a, double r) {
  const int n = int(a.size());
  const Eigen::MatrixXd D = spectral_diff_matrix(n);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) A(j, j) = a[std::size_t(j)] / n;
  const Eigen::MatrixXd K = D.transpose() * A * D;
  const Eigen::VectorXd b = -D.transpose() * A * Eigen::VectorXd::Constant(n, r);
  const Eigen::VectorXd phi = K.completeOrthogonalDecomposition().solve(b);
  const Eigen::VectorXd g = Eigen::VectorXd::Constant(n, r) + D * phi;
  double v = 0.0;
  for (int j = 0; j < n; ++j) v += a[std::size_t(j)] * g(j) * g(j);
  return v / n;
}

// Dense minimization of the 3-D elastic cell functional on an n^3 lattice:
// assembles the full gradient operator from Kronecker products of the 1-D
// differentiation matrix and solves the normal equations directly.
inline double dense_elastic_cell(const mel::DensitySpec& spec, int n, const Mat3& A,
                                 const Vec3& nu) {
  const int N = n * n * n;
  const Eigen::MatrixXd D = spectral_diff_matrix(n);
  const auto node = [&](int l) { return (l + 0.5) / n; };

  // grad[(c,d)] row p: derivative along axis d of component c at point p.
  // Points are indexed p = (iz*n + iy)*n + ix.
  const int dofs = 3 * N;
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(9 * N, dofs);
  for (int c = 0; c < 3; ++c)
    for (int iz = 0; iz < n; ++iz)
      for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) {
          const int p = (iz * n + iy) * n + ix;
          for (int l = 0; l < n; ++l) {
            // d = 0: differentiate along x.
            G((3 * c + 0) * N + p, c * N + (iz * n + iy) * n + l) += D(ix, l);
            G((3 * c + 1) * N + p, c * N + (iz * n + l) * n + ix) += D(iy, l);
            G((3 * c + 2) * N + p, c * N + (l * n + iy) * n + ix) += D(iz, l);
          }
        }

  // Pointwise 9x9 stiffness via polarization of Q.
  Eigen::MatrixXd CG = Eigen::MatrixXd::Zero(9 * N, dofs);
  Eigen::VectorXd CA = Eigen::VectorXd::Zero(9 * N);
  for (int iz = 0; iz < n; ++iz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        const int p = (iz * n + iy) * n + ix;
        const Vec3 y(node(ix), node(iy), node(iz));
        Eigen::Matrix<double, 9, 9> C;
        std::array<Mat3, 9> basis;
        std::array<double, 9> diag;
        for (int a = 0; a < 9; ++a) {
          Mat3 e = Mat3::Zero();
          e(a / 3, a % 3) = 1.0;
          basis[std::size_t(a)] = e;
          diag[std::size_t(a)] = spec.Q(y, e, nu);
          C(a, a) = diag[std::size_t(a)];
        }
        for (int a = 0; a < 9; ++a)
          for (int b = a + 1; b < 9; ++b) {
            const double q = spec.Q(y, basis[std::size_t(a)] + basis[std::size_t(b)], nu);
            C(a, b) = C(b, a) = 0.5 * (q - diag[std::size_t(a)] - diag[std::size_t(b)]);
          }
        // Rows of this point in the flattened (c,d) layout: index 3c+d at p.
        Eigen::Matrix<double, 9, 1> avec;
        for (int a = 0; a < 9; ++a) avec(a) = A(a / 3, a % 3);
        const Eigen::Matrix<double, 9, 1> ca = C * avec;
        Eigen::MatrixXd rows(9, dofs);
        for (int b = 0; b < 9; ++b) rows.row(b) = G.row(b * N + p);
        const Eigen::MatrixXd crows = C * rows;
        for (int a = 0; a < 9; ++a) {
          CG.row(a * N + p) = crows.row(a);
          CA(a * N + p) = ca(a);
        }
      }

  const Eigen::MatrixXd K = G.transpose() * CG / double(N);
  const Eigen::VectorXd b = -G.transpose() * CA / double(N);
  const Eigen::VectorXd phi = K.completeOrthogonalDecomposition().solve(b);

  // Value of the full functional at the dense minimizer.
  const Eigen::VectorXd g = G * phi;
  double v = 0.0;
  for (int iz = 0; iz < n; ++iz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        const int p = (iz * n + iy) * n + ix;
        Mat3 gm;
        for (int c = 0; c < 3; ++c)
          for (int d = 0; d < 3; ++d) gm(c, d) = g((3 * c + d) * N + p);
        v += spec.Q(Vec3(node(ix), node(iy), node(iz)), A + gm, nu);
      }
  return v / N;
}

}  // namespace melt
