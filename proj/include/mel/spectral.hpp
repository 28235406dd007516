#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <vector>

#include "mel/linalg.hpp"

namespace mel {

// Real-to-complex 3-D FFT workspace on an (nx, ny, nz) lattice with physical
// box lengths (Lx, Ly, Lz). Wraps FFTW plans; plan creation is serialized
// internally (FFTW planning is not thread safe), execution is private to the
// workspace. One workspace per concurrent solve.
//
// Conventions: arrays are indexed [z][y][x] with x fastest; the half-spectrum
// has x-extent nx/2 + 1. Wavenumber k_d = 2*pi*freq_d / L_d with integer
// frequencies in [-n/2, n/2); the Nyquist frequency (even n) is treated as
// zero in every derivative symbol, so gradient and divergence stay exact
// adjoints of each other on the lattice.
class SpectralWorkspace {
 public:
  SpectralWorkspace(std::array<int, 3> dims, Vec3 lengths);
  ~SpectralWorkspace();

  SpectralWorkspace(const SpectralWorkspace&) = delete;
  SpectralWorkspace& operator=(const SpectralWorkspace&) = delete;

  std::int64_t real_size() const { return nreal_; }
  std::int64_t spec_size() const { return nspec_; }
  const std::array<int, 3>& dims() const { return dims_; }

  // Forward transform of `in` (length real_size()) into `out`
  // (length spec_size()). Unnormalized, like FFTW; `in` is preserved.
  void forward(const double* in, std::complex<double>* out);
  // Inverse transform; divides by the point count so forward+inverse is id.
  // The input spectrum is preserved (FFTW's c2r would otherwise destroy it),
  // at the price of one lazily allocated scratch spectrum.
  void inverse(const std::complex<double>* in, double* out);

  // Derivative symbol i*k_d at half-spectrum index s (Nyquist zeroed).
  std::complex<double> ik(int axis, std::int64_t s) const {
    return {0.0, kvec_[axis][axis_index(axis, s)]};
  }
  double k_component(int axis, std::int64_t s) const {
    return kvec_[axis][axis_index(axis, s)];
  }
  double k_squared(std::int64_t s) const {
    const double kx = kvec_[0][axis_index(0, s)];
    const double ky = kvec_[1][axis_index(1, s)];
    const double kz = kvec_[2][axis_index(2, s)];
    return kx * kx + ky * ky + kz * kz;
  }
  // Parseval weight: 1 for modes on the x-axis boundary planes of the
  // half-spectrum that are their own conjugate, 2 for interior kx.
  double hermitian_weight(std::int64_t s) const {
    const int jx = int(s % sx_);
    return (jx == 0 || (nx_even_ && jx == sx_ - 1)) ? 1.0 : 2.0;
  }

  // out_d = samples of d/dx_axis of the field whose spectrum is `spec`.
  void derivative(const std::complex<double>* spec, int axis, double* out);

  // Convenience: gradient of a scalar component. grad[d] must be
  // preallocated real buffers.
  void gradient(const double* in, std::array<double*, 3> grad);

 private:
  int axis_index(int axis, std::int64_t s) const {
    const std::int64_t jx = s % sx_;
    const std::int64_t jy = (s / sx_) % dims_[1];
    const std::int64_t jz = s / (sx_ * dims_[1]);
    return int(axis == 0 ? jx : (axis == 1 ? jy : jz));
  }

  std::array<int, 3> dims_;
  std::int64_t nreal_;
  std::int64_t nspec_;
  std::int64_t sx_;
  bool nx_even_;
  std::array<std::vector<double>, 3> kvec_;
  void* plan_fwd_ = nullptr;
  void* plan_inv_ = nullptr;
  std::vector<std::complex<double>> cbuf_;
};

}  // namespace mel
