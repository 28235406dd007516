#include "mel/strayfield.hpp"

#include <cmath>
#include <complex>

#include "mel/cell.hpp"  // SolverError
#include "mel/spectral.hpp"

namespace mel {

StrayFieldSolution solve_stray_field(const Field& m_ext, const StrayFieldOptions& opt) {
  const BoxGrid* bg = m_ext.box_grid();
  if (!bg || m_ext.rank() != Rank::vector3)
    throw std::invalid_argument("solve_stray_field: vector3 box-grid field expected");
  if (!(opt.pad_factor >= 2.0))
    throw std::invalid_argument("solve_stray_field: pad_factor must be >= 2");
  if (!(opt.mu0 > 0.0)) throw std::invalid_argument("solve_stray_field: mu0 must be > 0");

  const std::array<int, 3> n = bg->n;
  // Support touching the unpadded boundary invalidates the truncation: the
  // box is supposed to strictly contain the magnetized sample.
  for (int iz = 0; iz < n[2]; ++iz)
    for (int iy = 0; iy < n[1]; ++iy)
      for (int ix = 0; ix < n[0]; ++ix) {
        const bool rim = ix == 0 || iy == 0 || iz == 0 || ix == n[0] - 1 ||
                         iy == n[1] - 1 || iz == n[2] - 1;
        if (!rim) continue;
        const std::int64_t p = bg->index(ix, iy, iz);
        for (int c = 0; c < 3; ++c)
          if (m_ext.at(p, c) != 0.0)
            throw SolverError(
                "solve_stray_field: source support touches the unpadded boundary");
      }

  std::array<int, 3> np;
  Vec3 len;
  for (int d = 0; d < 3; ++d) {
    np[d] = int(std::ceil(n[d] * opt.pad_factor));
    len[d] = bg->side[d] / n[d] * np[d];
  }
  SpectralWorkspace ws(np, len);
  const std::int64_t npts_pad = std::int64_t(np[0]) * np[1] * np[2];
  const std::int64_t nspec = ws.spec_size();
  const double cell_vol = bg->cell_volume();

  // Zero-padded copy at the corner of the enlarged box, one component at a
  // time; accumulate i k . m_hat.
  std::vector<double> rbuf(std::size_t(npts_pad), 0.0);
  std::vector<std::complex<double>> cbuf(std::size_t(nspec), std::complex<double>{});
  std::vector<std::complex<double>> div_spec(std::size_t(nspec), {0.0, 0.0});

  KahanSum source_acc;
  for (int c = 0; c < 3; ++c) {
    std::fill(rbuf.begin(), rbuf.end(), 0.0);
    const double* mc = m_ext.component(c);
    for (int iz = 0; iz < n[2]; ++iz)
      for (int iy = 0; iy < n[1]; ++iy) {
        const std::int64_t src = (std::int64_t(iz) * n[1] + iy) * n[0];
        const std::int64_t dst = (std::int64_t(iz) * np[1] + iy) * np[0];
        for (int ix = 0; ix < n[0]; ++ix) rbuf[std::size_t(dst + ix)] = mc[src + ix];
      }
    for (std::int64_t p = 0; p < m_ext.points(); ++p) source_acc.add(mc[p] * mc[p]);
    ws.forward(rbuf.data(), cbuf.data());
    for (std::int64_t s = 0; s < nspec; ++s)
      div_spec[std::size_t(s)] += ws.ik(c, s) * cbuf[std::size_t(s)];
  }
  const double source_l2sq = source_acc.get() * cell_vol;

  // psi_hat = -i k . m_hat / (mu0 |k|^2); the k = 0 mode implements the
  // "up to additive constants" quotient.
  std::vector<std::complex<double>>& psi_spec = div_spec;
  for (std::int64_t s = 0; s < nspec; ++s) {
    const double k2 = ws.k_squared(s);
    psi_spec[std::size_t(s)] =
        (k2 > 0.0) ? -psi_spec[std::size_t(s)] / (opt.mu0 * k2) : 0.0;
  }

  // Energy via Parseval on the padded grid:
  //   (mu0/2) sum |grad psi|^2 dV = (mu0/2) (V_cell / N) sum_k w_k |k|^2 |psi_k|^2.
  KahanSum espec;
  for (std::int64_t s = 0; s < nspec; ++s)
    espec.add(ws.hermitian_weight(s) * ws.k_squared(s) *
              std::norm(psi_spec[std::size_t(s)]));

  StrayFieldSolution sol;
  sol.pad_factor = opt.pad_factor;
  sol.source_l2sq = source_l2sq;
  sol.energy = 0.5 * opt.mu0 * espec.get() * cell_vol / double(npts_pad);

  // Discrete stability bound, exact for the spectral symbol:
  //   mu0 ||grad psi||^2 <= <chi m, grad psi> <= ||chi m|| ||grad psi||.
  const double gnorm2 = 2.0 * sol.energy / opt.mu0;
  sol.stability_ok = gnorm2 <= source_l2sq / (opt.mu0 * opt.mu0) * (1.0 + 1e-12) + 1e-300;

  if (opt.want_psi) {
    BoxGrid padded(bg->origin, len, np);
    Field psi(padded, Rank::scalar);
    ws.inverse(psi_spec.data(), psi.component(0));
    sol.psi = std::move(psi);
  }
  if (opt.want_grad_psi) {
    Field grad(*bg, Rank::vector3);
    for (int d = 0; d < 3; ++d) {
      ws.derivative(psi_spec.data(), d, rbuf.data());
      double* gc = grad.component(d);
      for (int iz = 0; iz < n[2]; ++iz)
        for (int iy = 0; iy < n[1]; ++iy) {
          const std::int64_t dst = (std::int64_t(iz) * n[1] + iy) * n[0];
          const std::int64_t src = (std::int64_t(iz) * np[1] + iy) * np[0];
          for (int ix = 0; ix < n[0]; ++ix) gc[dst + ix] = rbuf[std::size_t(src + ix)];
        }
    }
    sol.grad_psi = std::move(grad);
  }
  return sol;
}

double stray_energy_of(const Magnetization& m, const DomainMask& mask, double mu0,
                       double pad_factor) {
  const Field chi_m = extend_by_zero(m.field(), mask);
  StrayFieldOptions opt;
  opt.mu0 = mu0;
  opt.pad_factor = pad_factor;
  opt.want_psi = false;
  opt.want_grad_psi = false;
  return solve_stray_field(chi_m, opt).energy;
}

}  // namespace mel
