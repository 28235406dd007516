#include "mel/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace mel {

namespace {
// FFTW plan creation/destruction is not thread safe.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

SpectralWorkspace::SpectralWorkspace(std::array<int, 3> dims, Vec3 lengths)
    : dims_(dims) {
  for (int d = 0; d < 3; ++d)
    if (dims_[d] < 2) throw std::invalid_argument("SpectralWorkspace: dims must be >= 2");
  nreal_ = std::int64_t(dims_[0]) * dims_[1] * dims_[2];
  sx_ = dims_[0] / 2 + 1;
  nspec_ = sx_ * dims_[1] * dims_[2];
  nx_even_ = (dims_[0] % 2 == 0);

  // Wavenumber tables per axis; the Nyquist mode carries a zero symbol so
  // gradient and divergence remain exact adjoints.
  for (int d = 0; d < 3; ++d) {
    kvec_[d].resize(std::size_t(dims_[d]));
    for (int j = 0; j < dims_[d]; ++j) {
      int freq = (j <= dims_[d] / 2) ? j : j - dims_[d];
      if (dims_[d] % 2 == 0 && j == dims_[d] / 2) freq = 0;
      kvec_[d][std::size_t(j)] = 2.0 * std::numbers::pi * freq / lengths[d];
    }
  }

  // Plans are created against throwaway storage and executed on caller
  // buffers; FFTW_UNALIGNED keeps them alignment agnostic. Large transforms
  // would otherwise double their memory footprint through private scratch.
  {
    std::vector<double> r(std::size_t(nreal_), 0.0);
    std::vector<std::complex<double>> c(std::size_t(nspec_), std::complex<double>{});
    std::lock_guard<std::mutex> lock(plan_mutex());
    // FFTW uses row-major (n0, n1, n2) with n2 fastest; our x axis is fastest.
    plan_fwd_ = fftw_plan_dft_r2c_3d(dims_[2], dims_[1], dims_[0], r.data(),
                                     reinterpret_cast<fftw_complex*>(c.data()),
                                     FFTW_ESTIMATE | FFTW_UNALIGNED);
    plan_inv_ = fftw_plan_dft_c2r_3d(dims_[2], dims_[1], dims_[0],
                                     reinterpret_cast<fftw_complex*>(c.data()), r.data(),
                                     FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  if (!plan_fwd_ || !plan_inv_) throw std::runtime_error("FFTW plan creation failed");
}

SpectralWorkspace::~SpectralWorkspace() {
  std::lock_guard<std::mutex> lock(plan_mutex());
  if (plan_fwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  if (plan_inv_) fftw_destroy_plan(static_cast<fftw_plan>(plan_inv_));
}

void SpectralWorkspace::forward(const double* in, std::complex<double>* out) {
  // Out-of-place r2c preserves its input; safe to run on the caller's array.
  fftw_execute_dft_r2c(static_cast<fftw_plan>(plan_fwd_), const_cast<double*>(in),
                       reinterpret_cast<fftw_complex*>(out));
}

void SpectralWorkspace::inverse(const std::complex<double>* in, double* out) {
  if (cbuf_.size() != std::size_t(nspec_))
    cbuf_.resize(std::size_t(nspec_));  // c2r destroys its input: work on a copy
  std::copy(in, in + nspec_, cbuf_.data());
  fftw_execute_dft_c2r(static_cast<fftw_plan>(plan_inv_),
                       reinterpret_cast<fftw_complex*>(cbuf_.data()), out);
  const double inv_n = 1.0 / double(nreal_);
  for (std::int64_t i = 0; i < nreal_; ++i) out[i] *= inv_n;
}

void SpectralWorkspace::derivative(const std::complex<double>* spec, int axis, double* out) {
  std::vector<std::complex<double>> tmp(std::size_t(nspec_), std::complex<double>{});
  for (std::int64_t s = 0; s < nspec_; ++s) tmp[std::size_t(s)] = ik(axis, s) * spec[s];
  inverse(tmp.data(), out);
}

void SpectralWorkspace::gradient(const double* in, std::array<double*, 3> grad) {
  std::vector<std::complex<double>> spec(std::size_t(nspec_), std::complex<double>{});
  forward(in, spec.data());
  for (int d = 0; d < 3; ++d) derivative(spec.data(), d, grad[d]);
}

}  // namespace mel
