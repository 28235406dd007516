#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "mel/cell.hpp"
#include "mel/energy.hpp"
#include "mel/scenario.hpp"

namespace mel {

// Periodic correctors feeding the recovery sequences. The elastic corrector
// psi is a single cell field for the scenario's frozen (grad u, m); the
// exchange corrector family phi(x, y) is realized through the three scalar
// correctors chi_d for the basis gradient directions and the linearity of the
// cell problem: phi_i(x, y) = sum_d (grad m(x))_{id} chi_d(y).
struct CorrectorSet {
  int n_cell = 0;
  std::optional<Field> psi;                       // vector3 on the cell grid
  std::optional<Field> grad_psi;                  // matrix3x3
  std::optional<std::array<Field, 3>> chi;        // scalars
  std::optional<std::array<Field, 3>> grad_chi;   // vector3
};

CorrectorSet build_correctors(const Scenario& sc, int n_cell,
                              const CellSolveOptions& opt = {});

// u_eps = u + eps psi(x/eps), m o w_eps = pi[m + eps phi(x, x/eps)], sampled
// at material points of the box grid. Requires eps = 1/K with K * n_cell
// equal to the box resolution, so x/eps lands exactly on cell lattice points.
struct RecoveryPair {
  Field u_eps;            // vector3
  Field grad_u_eps;       // matrix3x3 (exact, not finite-differenced)
  Magnetization m_comp;   // composed magnetization, unit length
  Field grad_m_comp;      // x-gradient of the composed magnetization
  double eps = 0.0;
  double alpha = 1.0;
};

RecoveryPair build_recovery_pair(const Scenario& sc, const CorrectorSet& cor,
                                 const BoxGrid& box, double eps, double alpha,
                                 double delta_floor = kDeltaFloorDefault);

struct SweepOptions {
  int n_cell_ref = 64;      // corrector resolution for the reference F_hom
  double pad_factor = 2.0;
  CellSolveOptions cell;
  double delta_floor = kDeltaFloorDefault;
};

struct SweepRow {
  double param = 0.0;           // eps or delta
  EnergyBreakdown energy;
  double reference = 0.0;
  double gap = 0.0;
  bool admissible = true;
  bool liminf_ok = true;
};

struct SweepResult {
  std::vector<SweepRow> rows;   // sorted by decreasing param
  double slope = 0.0;           // log-log LS fit of gap vs param
  double intercept = 0.0;
  double extrapolated = 0.0;    // Richardson tail of the energy values
  double reference = 0.0;
  bool monotone_gap = true;
};

// Least-squares slope of ln(gap) against ln(param).
void fit_loglog(SweepResult& r);

// Richardson extrapolation from the last three values of a param-halving
// ladder; falls back to the finest value when differences are at noise level.
struct RichardsonTail {
  double limit = 0.0;
  double rate = 0.0;
  bool reliable = false;
};
RichardsonTail richardson_tail(const std::vector<double>& values);

// Reference value F_hom(u, m) of a scenario at box resolution n with
// correctors at n_cell_ref.
EnergyBreakdown homogenized_reference(const Scenario& sc, int n, const SweepOptions& opt);

// Evaluates the rescaled energy on recovery pairs along an eps ladder
// (denominators K, strictly increasing) and compares to F_hom.
SweepResult gamma_sweep(const Scenario& sc, const std::vector<int>& eps_denoms,
                        double alpha, int n, const SweepOptions& opt = {});

// Linearized functional on corrector-dressed fields along the eps ladder
// (path B of the commutativity diagram).
SweepResult linearized_sweep(const Scenario& sc, const std::vector<int>& eps_denoms,
                             int n, const SweepOptions& opt = {});

// Sequential-path delta leg: F_eps^delta at fixed eps against G_eps^lin.
struct DeltaLegRow {
  double delta;
  EnergyBreakdown energy;
  double gap_rel;  // |F_eps^delta - G_lin| / |G_lin|
};
struct DeltaLeg {
  std::vector<DeltaLegRow> rows;
  EnergyBreakdown lin;
  bool monotone = true;
};
DeltaLeg delta_linearization_leg(const Scenario& sc, double eps,
                                 const std::vector<double>& deltas, int n,
                                 const SweepOptions& opt = {});

struct CommuteReport {
  SweepResult path_a;    // simultaneous limit
  DeltaLeg delta_leg;    // linearization at fixed eps
  SweepResult path_b;    // homogenization of the linearized functional
  double value_a = 0.0;
  double value_b = 0.0;
  double reference = 0.0;  // F_hom
  double rel_ab = 0.0;
  double rel_a_ref = 0.0;
  double rel_b_ref = 0.0;
};

CommuteReport commute_check(const Scenario& sc, const std::vector<int>& eps_denoms,
                            const std::vector<double>& delta_ladder, double alpha,
                            int n, const SweepOptions& opt = {});

// Two-scale pairing check: integrals of v_eps(x) psi(x, x/eps) over Omega per
// eps against the product integral of the claimed limit. Test functions are
// products f(x) g(y); the limit is a closure on Omega x Y quadratured on the
// box lattice times a coarse cell lattice.
struct TwoScaleCheck {
  std::string test_id;
  std::vector<double> eps;
  std::vector<double> lhs;
  double rhs = 0.0;
  std::vector<double> gap;
};

// n carries the lhs lattice; the smooth limit pairing is quadratured on a
// coarser n_rhs lattice (0 picks min(n, 64)) times the n_y cell lattice.
TwoScaleCheck two_scale_pairing(
    const std::string& test_id,
    const std::function<double(double, const Vec3&)>& family,  // v_eps(x)
    const std::function<double(const Vec3&)>& f,
    const std::function<double(const Vec3&)>& g,
    const std::function<double(const Vec3&, const Vec3&)>& limit,
    const std::vector<int>& eps_denoms, int n, int n_y = 8, int n_rhs = 0);

// Matrix-valued variant used for the pullback-chain pairing.
TwoScaleCheck two_scale_pairing_matrix(
    const std::string& test_id,
    const std::function<Mat3(double, const Vec3&)>& family,
    const std::function<double(const Vec3&)>& f,
    const std::function<Mat3(const Vec3&)>& g,
    const std::function<Mat3(const Vec3&, const Vec3&)>& limit,
    const std::vector<int>& eps_denoms, int n, int n_y = 8, int n_rhs = 0);

}  // namespace mel
