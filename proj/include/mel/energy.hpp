#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>

#include "mel/field.hpp"
#include "mel/gradient.hpp"
#include "mel/material.hpp"
#include "mel/strayfield.hpp"

namespace mel {

// Deformation w = id + scale * u with the per-point derived quantities used
// by the energies. `scale` is eps^alpha on the simultaneous path or an
// independent delta on the sequential one; `eps` always carries the
// coefficient oscillation period.
struct DeformationState {
  Field u;          // vector3 on a box grid
  double eps = 1.0;
  double alpha = 1.0;
  double scale = 1.0;
  Field grad_u;     // matrix3x3
  Field grad_w;     // Id + scale * grad_u
  Field det_grad;   // det grad_w
  Field adj_grad;   // adjugate of grad_w
  Field pullback;   // adj(grad_w) * det^{-1/2} where det > 0, Id elsewhere
  double det_min = 1.0;
  double opnorm_max = 0.0;  // max over points of |scale * grad_u|_O
  bool det_positive = true;
};

// grad_u is computed by central differences on the box grid. The overload
// taking grad_u samples serves analytic callers (recovery sequences), where
// finite differencing the oscillatory fields would dominate the error budget.
DeformationState build_deformation(const Field& u, double eps, double alpha);
DeformationState build_deformation(const Field& u, const Field& grad_u, double eps,
                                   double alpha);
// Sequential path: scale = delta, decoupled from eps.
DeformationState build_deformation_delta(const Field& u, double eps, double delta);
DeformationState build_deformation_delta(const Field& u, const Field& grad_u, double eps,
                                         double delta);

struct AdmissibilityReport {
  bool det_positive = true;
  double det_min = 0.0;
  std::array<int, 3> det_witness = {0, 0, 0};
  double operator_norm_max = 0.0;
  bool injectivity_ok = true;   // operator_norm_max < c_domain
  double inv_det_Ls_norm = 0.0; // L^s norm of 1/det over the mask
  bool boundary_ok = true;
  double boundary_err = 0.0;
  bool admissible() const { return det_positive && injectivity_ok && boundary_ok; }
};

// Report-only membership test for the admissible class: determinant sign,
// operator-norm injectivity criterion, L^s integrability of 1/det, boundary
// trace against g on the mask's boundary layer.
AdmissibilityReport check_admissibility(const DeformationState& state,
                                        const DensitySpec& spec,
                                        const std::function<Vec3(const Vec3&)>& boundary_g,
                                        const DomainMask& mask, double c_domain = 0.9);

struct EnergyBreakdown {
  double elastic = 0.0;
  double exchange = 0.0;
  double magnetostatic = 0.0;
  double total = 0.0;
  std::string tag;  // "G" | "Feps" | "Fdelta" | "Glin" | "Fhom"

  void finish() { total = elastic + exchange + magnetostatic; }
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct StrayEval {
  double pad_factor = 2.0;
};

// Elastic term of the stored (unrescaled) energy: midpoint quadrature of
// W(x/eps, grad w, m o w) over the mask; +inf as soon as det grad_w <= 0 at a
// quadrature point.
double elastic_term_stored(const DeformationState& state, const DensitySpec& spec,
                           const Magnetization& m_comp, const DomainMask& mask);

// Stored energy G: elastic + Eulerian exchange + magnetostatic self-energy.
// m_comp carries m o w at material points; grad_m_comp its x-gradient, from
// which (grad m) o w is recovered by the chain rule
//   (grad m) o w = grad(m o w) (grad w)^{-1}.
EnergyBreakdown stored_energy(const DeformationState& state, const DensitySpec& spec,
                              const Magnetization& m_comp, const Field& grad_m_comp,
                              const DomainMask& mask, const StrayEval& stray = {});

// Rescaled energy (elastic term divided by scale^2).
EnergyBreakdown rescaled_energy(const DeformationState& state, const DensitySpec& spec,
                                const Magnetization& m_comp, const Field& grad_m_comp,
                                const DomainMask& mask, const StrayEval& stray = {});

// Same formula with scale = delta decoupled from eps; reproduces
// rescaled_energy bit for bit when delta = eps^alpha.
EnergyBreakdown delta_rescaled_energy(const DeformationState& state, const DensitySpec& spec,
                                      const Magnetization& m_comp, const Field& grad_m_comp,
                                      const DomainMask& mask, const StrayEval& stray = {});

// Linearized energy at oscillation scale eps: (1/2) Q(x/eps, grad u, m)
// + a(x/eps) |grad m|^2 + magnetostatic term. No deformation composition.
EnergyBreakdown linearized_energy(const Field& u, const Field& grad_u,
                                  const Magnetization& m, const Field& grad_m,
                                  const DensitySpec& spec, double eps,
                                  const DomainMask& mask, const StrayEval& stray = {});

// Streaming evaluation: per-point data produced by a sampler closure instead
// of materialized fields. The sweep drivers use this at large n, where the
// full DeformationState would not fit comfortably in memory; the field-based
// entry points above route through the same accumulation, so both paths
// produce identical values.
struct PointData {
  Mat3 grad_u;
  Vec3 m_comp;
  Mat3 grad_m_comp;
};

using PointSampler =
    std::function<PointData(int ix, int iy, int iz, std::int64_t p, const Vec3& x)>;

EnergyBreakdown rescaled_energy_stream(const BoxGrid& box, const DomainMask& mask,
                                       const DensitySpec& spec, double eps, double scale,
                                       const PointSampler& at, const StrayEval& stray,
                                       const char* tag = "Feps");

EnergyBreakdown linearized_energy_stream(const BoxGrid& box, const DomainMask& mask,
                                         const DensitySpec& spec, double eps,
                                         const PointSampler& at, const StrayEval& stray);

class HomogenizedExchange;
class HomogenizedElastic;

// Homogenized limit: (1/2) Q_hom(grad u, m) + T_hom(grad m) + magnetostatic
// term of chi_Omega m, with the cell formulas supplied by the cell module.
EnergyBreakdown homogenized_energy(const Field& grad_u, const Magnetization& m,
                                   const Field& grad_m, const DensitySpec& spec,
                                   const HomogenizedElastic& q_hom,
                                   const HomogenizedExchange& t_hom,
                                   const DomainMask& mask, const StrayEval& stray = {});

}  // namespace mel
