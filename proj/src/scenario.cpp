#include "mel/scenario.hpp"

#include <cmath>
#include <numbers>

namespace mel {

namespace {

// Shared affine displacement gradient: symmetric part, a little skew, and a
// nonzero trace so every term of Q is exercised.
Mat3 base_affine() {
  Mat3 a;
  a << 0.030, 0.010, 0.000,
       0.000, -0.020, 0.012,
       0.004, 0.000, 0.025;
  return a;
}

void set_affine(Scenario& sc, const Mat3& A) {
  sc.u_affine = true;
  sc.A = A;
  sc.u = [A](const Vec3& x) -> Vec3 { return A * x; };
  sc.grad_u = [A](const Vec3&) -> Mat3 { return A; };
}

void set_zero_displacement(Scenario& sc) {
  set_affine(sc, Mat3::Zero());
}

void set_constant_m(Scenario& sc, const Vec3& m0) {
  sc.m_constant = true;
  sc.nu_frozen = m0;
  sc.m = [m0](const Vec3&) -> Vec3 { return m0; };
  sc.grad_m = [](const Vec3&) -> Mat3 { return Mat3::Zero(); };
  sc.dgrad_m = [](const Vec3&) -> std::array<Mat3, 3> {
    return {Mat3::Zero(), Mat3::Zero(), Mat3::Zero()};
  };
}

// Great-circle sweep m(x) = (cos th(x1), sin th(x1), 0), th = th0 + om x1.
void set_great_circle_m(Scenario& sc, double th0, double om) {
  sc.m_constant = false;
  sc.m = [th0, om](const Vec3& x) -> Vec3 {
    const double th = th0 + om * x[0];
    return {std::cos(th), std::sin(th), 0.0};
  };
  sc.grad_m = [th0, om](const Vec3& x) -> Mat3 {
    const double th = th0 + om * x[0];
    Mat3 g = Mat3::Zero();
    g(0, 0) = -om * std::sin(th);
    g(1, 0) = om * std::cos(th);
    return g;
  };
  sc.dgrad_m = [th0, om](const Vec3& x) -> std::array<Mat3, 3> {
    const double th = th0 + om * x[0];
    Mat3 h = Mat3::Zero();
    h(0, 0) = -om * om * std::cos(th);
    h(1, 0) = -om * om * std::sin(th);
    return {h, Mat3::Zero(), Mat3::Zero()};
  };
}

}  // namespace

Scenario make_scenario(const std::string& name) {
  Scenario sc;
  sc.name = name;

  if (name == "S1") {
    sc.c_layout = PhaseLayout::constant(1.0);
    sc.kappa_layout = PhaseLayout::constant(1.0);
    sc.a_layout = PhaseLayout::constant(1.0);
    sc.density = reference_density_D1(sc.c_layout, 4.0, 3.0, 1.0, sc.a_layout);
    // Half amplitude keeps the coarse-ladder Taylor remainder below the
    // collapse-case gap bound of 1e-3 relative.
    set_affine(sc, 0.5 * base_affine());
    set_constant_m(sc, Vec3(0, 0, 1));
  } else if (name == "S2") {
    sc.c_layout = PhaseLayout::laminate(0, 0.5, 1.0, 10.0);
    sc.kappa_layout = PhaseLayout::constant(1.0);
    sc.a_layout = PhaseLayout::constant(1.0);
    sc.density = reference_density_D1(sc.c_layout, 4.0, 3.0, 1.0, sc.a_layout);
    set_affine(sc, base_affine());
    set_constant_m(sc, Vec3(0, 0, 1));
    sc.needs_elastic_corrector = true;
  } else if (name == "S3") {
    sc.c_layout = PhaseLayout::constant(1.0);
    sc.kappa_layout = PhaseLayout::constant(1.0);
    sc.a_layout = PhaseLayout::laminate(0, 0.5, 1.0, 4.0);
    sc.density = reference_density_D1(sc.c_layout, 4.0, 3.0, 1.0, sc.a_layout);
    set_zero_displacement(sc);
    set_great_circle_m(sc, 0.3, 0.5 * std::numbers::pi);
    sc.needs_exchange_corrector = true;
  } else if (name == "S4") {
    // Full coupling: the kappa term is active in W and Q. The elastic
    // coefficients stay y-uniform so the single-corrector recovery shape is
    // exact while nu varies along the great circle; the oscillation lives in
    // the exchange coefficient.
    sc.c_layout = PhaseLayout::constant(1.0);
    sc.kappa_layout = PhaseLayout::constant(0.8);
    sc.a_layout = PhaseLayout::laminate(0, 0.5, 1.0, 4.0);
    sc.density = reference_density_D2(sc.c_layout, sc.kappa_layout, 4.0, 3.0, 1.0,
                                      sc.a_layout);
    set_affine(sc, 0.8 * base_affine());
    set_great_circle_m(sc, 0.3, 0.5 * std::numbers::pi);
    sc.needs_exchange_corrector = true;
  } else {
    throw std::invalid_argument("unknown scenario: " + name);
  }
  return sc;
}

BoxGrid scenario_box(int n) { return BoxGrid::unit_cube(n); }

DomainMask scenario_mask(int n) {
  if (n % 8 != 0)
    throw std::invalid_argument("scenario mask requires the resolution to be a multiple of 8");
  const BoxGrid box = scenario_box(n);
  return DomainMask::sub_box(box, Vec3(0.125, 0.125, 0.125), Vec3(0.875, 0.875, 0.875));
}

}  // namespace mel
