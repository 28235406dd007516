#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mel/field.hpp"
#include "mel/linalg.hpp"

namespace mel {

// Y-periodic piecewise-constant coefficient layout. Evaluation wraps y into
// [0,1)^3; the laminate jump convention is value[0] for frac(y_axis) <
// fraction, value[1] otherwise.
struct PhaseLayout {
  enum class Kind { constant, laminate, checkerboard };
  Kind kind = Kind::constant;
  int axis = 0;              // laminate only
  double fraction = 0.5;     // laminate only, in (0,1)
  std::vector<double> values = {1.0};

  double operator()(const Vec3& y) const;

  static PhaseLayout constant(double v);
  static PhaseLayout laminate(int axis, double fraction, double v0, double v1);
  static PhaseLayout checkerboard(double v0, double v1);

  std::string describe() const;
};

// Material law bundle: stored energy density W(y, F, nu), its quadratic form
// Q(y, G, nu) at the identity, the linearized stress dQ/dG / 2 (needed by the
// cell solver), the exchange coefficient a(y), and the coercivity constants.
struct DensitySpec {
  std::function<double(const Vec3&, const Mat3&, const Vec3&)> W;
  std::function<double(const Vec3&, const Mat3&, const Vec3&)> Q;
  // stress(y, G, nu) = d(Q/2)/dG, so Q(y, G, nu) = <G, stress(y, G, nu)>.
  std::function<Mat3(const Vec3&, const Mat3&, const Vec3&)> stress;
  std::function<double(const Vec3&)> a;

  double p = 4.0;   // coercivity exponent, > 3
  double s = 3.0;   // compression exponent, > p/(p-2)
  double C1 = 1.0;  // lower bound on a
  double C2 = 1.0;  // upper bound on a
  double mu0 = 1.0; // vacuum permeability (1 in nondimensional runs)

  std::string name;
  bool elastic_uniform_in_y = false;   // c and kappa constant in y
  bool exchange_uniform_in_y = false;  // a constant in y
};

// Frobenius distance of F to SO(3): sqrt(sum (sigma_i - 1)^2) over the
// singular values; if det F < 0 the smallest one enters as (sigma + 1).
double dist_SO3(const Mat3& f);

// D1: W = c(y) [dist^2(F,SO3) + dist^p(F,SO3)] + (det(F)^-s - 1)^2,
//     Q = 2 c(y) |sym G|^2 + 2 s^2 (tr G)^2.
// The squared barrier replaces the bare t^-s so that W(Id) = 0 holds.
DensitySpec reference_density_D1(const PhaseLayout& c_layout, double p = 4.0,
                                 double s = 3.0, double mu0 = 1.0,
                                 const PhaseLayout& a_layout = PhaseLayout::constant(1.0));

// D2: adds the magnetoelastic coupling
//   kappa(y) * ( (F^T nu)^T (F^T F - Id) (F^T nu) / (2 |F^T nu|^2) )^2,
// frame indifferent because F^T F and F^T nu are invariant under
// (F, nu) -> (R F, R nu).
//   Q gains 2 kappa(y) (nu^T sym G nu)^2 for unit nu.
DensitySpec reference_density_D2(const PhaseLayout& c_layout,
                                 const PhaseLayout& kappa_layout, double p = 4.0,
                                 double s = 3.0, double mu0 = 1.0,
                                 const PhaseLayout& a_layout = PhaseLayout::constant(1.0));

struct HessianExtraction {
  Mat9 matrix;              // matrix of Q: W(y, Id+F, nu) ~ 1/2 <F, M F>
  bool richardson_ok;       // step vs step/2 agreed within 1e-3 relative
  double richardson_gap;    // observed relative gap
};

// Central second differences of F -> W(y, Id + F, nu) over the 9-dimensional
// matrix space. Since W ~ 1/2 Q near the identity, the Hessian equals the
// matrix of Q directly.
HessianExtraction extract_Q_by_hessian(const DensitySpec& spec, const Vec3& y,
                                       const Vec3& nu, double step);

struct HypothesisCheck {
  std::string name;
  bool pass = true;
  double worst = 0.0;        // worst-case violation measure
  double tolerance = 0.0;
  std::int64_t samples = 0;
  std::string witness;       // textual witness of the worst sample
};

struct HypothesisReport {
  std::vector<HypothesisCheck> checks;
  bool all_pass() const;
  const HypothesisCheck* find(const std::string& name) const;
};

// Monte-Carlo validation of H1 (periodicity), H2 (coercivity, both branches
// and the determinant barrier), H3 (frame indifference), H4 (zero at the
// identity), H5 (Taylor expansion quality along t = 1e-2, 1e-3, 1e-4) and the
// exchange coefficient bounds C1 <= a <= C2. Never aborts; failures carry a
// witness sample.
HypothesisReport validate_hypotheses(const DensitySpec& spec, std::int64_t n_samples,
                                     std::uint64_t seed = 20240901ull);

// Samples a Y-periodic coefficient at the cell lattice points.
Field sample_on_cell(const std::function<double(const Vec3&)>& coeff, int n);

}  // namespace mel
