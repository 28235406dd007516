#pragma once

#include <optional>

#include "mel/field.hpp"

namespace mel {

struct StrayFieldOptions {
  double mu0 = 1.0;
  double pad_factor = 2.0;     // >= 2
  bool want_psi = true;        // materialize the potential (padded grid)
  bool want_grad_psi = true;   // materialize grad psi (unpadded window)
};

struct StrayFieldSolution {
  std::optional<Field> psi;       // scalar on the padded box, zero mean
  std::optional<Field> grad_psi;  // vector3 on the unpadded box
  double energy = 0.0;            // (mu0/2) L2 norm^2 of grad psi
  double source_l2sq = 0.0;       // L2 norm^2 of the source chi m
  double pad_factor = 2.0;
  bool stability_ok = true;       // ||grad psi|| <= ||chi m|| / mu0
};

// Solves div(chi m) = mu0 * laplace psi on a zero-padded periodic extension
// of the box: psi_hat(k) = -i k . m_hat(k) / (mu0 |k|^2), psi_hat(0) = 0.
// Periodic images are attenuated by the padding. The source must not touch
// the outermost cell layer of the unpadded box (truncation invalid otherwise).
StrayFieldSolution solve_stray_field(const Field& m_ext, const StrayFieldOptions& opt = {});

// extend_by_zero -> solve_stray_field -> energy.
double stray_energy_of(const Magnetization& m, const DomainMask& mask,
                       double mu0 = 1.0, double pad_factor = 2.0);

}  // namespace mel
