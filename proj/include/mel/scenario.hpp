#pragma once

#include <array>
#include <functional>
#include <string>

#include "mel/energy.hpp"
#include "mel/material.hpp"

namespace mel {

// Closed-form macroscopic data for the shipped experiments. The sample Omega
// is the sub-box [1/8, 7/8]^3 of the unit bounding box, so that every
// eps = 1/K with 4 | K tiles Omega by whole periods and the stray-field
// source keeps a zero margin inside the box.
//
//   S1  constant coefficients, affine u, constant m       (collapse case)
//   S2  laminate elastic coefficient, affine u, constant m (elastic corrector)
//   S3  u = 0, great-circle m, laminate exchange coefficient
//   S4  full coupling (D2), affine u, great-circle m, laminate exchange
struct Scenario {
  std::string name;
  DensitySpec density;
  PhaseLayout c_layout;
  PhaseLayout kappa_layout;
  PhaseLayout a_layout;

  std::function<Vec3(const Vec3&)> u;
  std::function<Mat3(const Vec3&)> grad_u;
  bool u_affine = true;
  Mat3 A = Mat3::Zero();  // grad u when affine

  std::function<Vec3(const Vec3&)> m;
  std::function<Mat3(const Vec3&)> grad_m;
  // dgrad_m(x)[l](i, j) = d/dx_l of (grad m)_{ij}
  std::function<std::array<Mat3, 3>(const Vec3&)> dgrad_m;
  bool m_constant = false;

  bool needs_elastic_corrector = false;
  bool needs_exchange_corrector = false;
  Vec3 nu_frozen = Vec3(0, 0, 1);  // direction for the single elastic corrector
};

Scenario make_scenario(const std::string& name);

BoxGrid scenario_box(int n);            // unit bounding box at resolution n
DomainMask scenario_mask(int n);        // Omega = [1/8, 7/8]^3; requires 8 | n

}  // namespace mel
