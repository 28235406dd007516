#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "mel/cell.hpp"
#include "mel/parallel.hpp"

using namespace mel;
using melt::rel_err;

namespace {

Field laminate_field(int n, int axis, double frac, double v0, double v1) {
  return sample_on_cell(
      [=](const Vec3& y) { return PhaseLayout::laminate(axis, frac, v0, v1)(y); }, n);
}

// Discrete phase means at the actual lattice samples; the Voigt-Reuss bounds
// hold exactly against these.
struct Means {
  double arithmetic;
  double harmonic;
};
Means discrete_means(const Field& a) {
  double s = 0.0, hi = 0.0;
  const double* av = a.component(0);
  for (std::int64_t p = 0; p < a.points(); ++p) {
    s += av[p];
    hi += 1.0 / av[p];
  }
  const double n = double(a.points());
  return {s / n, n / hi};
}

}  // namespace

TEST_CASE("constant exchange coefficient has a zero corrector") {
  const Field a = sample_on_cell([](const Vec3&) { return 1.0; }, 16);
  const CorrectorSolution sol = solve_exchange_cell(a, Mat3::Identity());
  CHECK(sol.iterations == 0);
  CHECK(rel_err(sol.value, 3.0) < 1e-14);  // a0 |Id|^2 = 3
  double phi_norm = 0.0;
  for (double v : sol.phi.raw()) phi_norm = std::max(phi_norm, std::abs(v));
  CHECK(phi_norm < 1e-12);
}

TEST_CASE("laminate exchange: harmonic and arithmetic means, dense 1-D oracle") {
  const int n = 64;
  const Field a = laminate_field(n, 0, 0.5, 1.0, 4.0);

  // Independent dense oracle on the 1-D problem (same lattice samples).
  std::vector<double> a1d(std::size_t(n), 0.0);
  for (int l = 0; l < n; ++l) a1d[std::size_t(l)] = ((l + 0.5) / n < 0.5) ? 1.0 : 4.0;
  const double longitudinal_oracle = melt::dense_exchange_1d(a1d, 1.0);
  CHECK(rel_err(longitudinal_oracle, 1.6) < 1e-10);  // 2*1*4/(1+4)

  Mat3 A = Mat3::Zero();
  A(0, 0) = 1.0;  // row along the lamination axis
  CHECK(rel_err(solve_exchange_cell(a, A).value, 1.6) < 1e-6);

  Mat3 At = Mat3::Zero();
  At(0, 1) = 1.0;  // transverse row admits a zero corrector
  CHECK(rel_err(solve_exchange_cell(a, At).value, 2.5) < 1e-6);
}

TEST_CASE("exchange cell value matches the dense oracle off half fractions") {
  const int n = 16;
  const Field a = laminate_field(n, 0, 0.3, 1.0, 5.0);
  std::vector<double> a1d(std::size_t(n), 0.0);
  for (int l = 0; l < n; ++l) a1d[std::size_t(l)] = ((l + 0.5) / n < 0.3) ? 1.0 : 5.0;
  Mat3 A = Mat3::Zero();
  A(0, 0) = 1.0;
  CHECK(rel_err(solve_exchange_cell(a, A).value, melt::dense_exchange_1d(a1d, 1.0)) <
        1e-8);
}

TEST_CASE("corrector gauge and quadratic scaling") {
  const Field a = laminate_field(32, 1, 0.5, 1.0, 4.0);
  std::mt19937_64 rng(53);
  const Mat3 A = melt::random_mat3(rng);
  const CorrectorSolution sol = solve_exchange_cell(a, A);
  for (int c = 0; c < 3; ++c) {
    double mean = 0.0;
    for (std::int64_t p = 0; p < sol.phi.points(); ++p) mean += sol.phi.at(p, c);
    CHECK(std::abs(mean / double(sol.phi.points())) < 1e-12);
  }
  const CorrectorSolution sol2 = solve_exchange_cell(a, 2.0 * A);
  CHECK(rel_err(sol2.value, 4.0 * sol.value) < 1e-10);
}

TEST_CASE("CG energy trace is non-increasing") {
  const Field a = laminate_field(32, 0, 0.5, 1.0, 4.0);
  Mat3 A;
  A << 1, 0.5, 0, 0, 1, 0, 0.25, 0, 1;
  const CorrectorSolution sol = solve_exchange_cell(a, A);
  for (std::size_t k = 1; k < sol.energy_trace.size(); ++k)
    CHECK(sol.energy_trace[k] <= sol.energy_trace[k - 1] + 1e-12);

  const DensitySpec d1 = reference_density_D1(PhaseLayout::laminate(0, 0.5, 1.0, 10.0));
  const CorrectorSolution es = solve_elastic_cell(d1, 16, A, Vec3(0, 0, 1));
  for (std::size_t k = 1; k < es.energy_trace.size(); ++k)
    CHECK(es.energy_trace[k] <= es.energy_trace[k - 1] + 1e-12);
}

TEST_CASE("monotone grid convergence on the shipped laminate") {
  Mat3 A = Mat3::Zero();
  A(0, 0) = 1.0;
  double prev = 1e100;
  for (int n : {16, 32, 64}) {
    const Field a = laminate_field(n, 0, 0.5, 1.0, 4.0);
    const double v = solve_exchange_cell(a, A).value;
    CHECK(v <= prev + 1e-9);
    prev = v;
  }
}

TEST_CASE("constant-coefficient elastic cell collapses to Q") {
  const DensitySpec d1 = reference_density_D1(PhaseLayout::constant(1.0));
  std::mt19937_64 rng(59);
  const Mat3 A = melt::random_mat3(rng);
  const Vec3 nu = melt::random_unit(rng);
  const CorrectorSolution sol = solve_elastic_cell(d1, 16, A, nu);
  CHECK(sol.iterations == 0);
  CHECK(rel_err(sol.value, d1.Q(Vec3::Zero(), A, nu)) < 1e-12);
}

TEST_CASE("skew argument with constant coefficients has zero energy") {
  const DensitySpec d1 = reference_density_D1(PhaseLayout::constant(1.0));
  Mat3 skew;
  skew << 0, 1, -0.5, -1, 0, 2, 0.5, -2, 0;
  const CorrectorSolution sol = solve_elastic_cell(d1, 8, skew, Vec3(0, 0, 1));
  CHECK(std::abs(sol.value) < 1e-12);
}

TEST_CASE("elastic laminate matches the dense 8^3 oracle") {
  const DensitySpec d1 = reference_density_D1(PhaseLayout::laminate(0, 0.5, 1.0, 10.0));
  Mat3 A = Mat3::Zero();
  A(0, 0) = 1.0;
  const Vec3 nu(0, 0, 1);
  const double dense = melt::dense_elastic_cell(d1, 8, A, nu);
  const double spectral = solve_elastic_cell(d1, 8, A, nu).value;
  CHECK(rel_err(spectral, dense) < 1e-6);

  // Strictly between the harmonic-type and arithmetic-type bounds.
  const double k1 = 2.0 * 1.0 + 2.0 * 9.0, k2 = 2.0 * 10.0 + 2.0 * 9.0;
  const double harm = 2.0 * k1 * k2 / (k1 + k2), arith = 0.5 * (k1 + k2);
  CHECK(spectral > harm - 1e-9);
  CHECK(spectral < arith);
}

TEST_CASE("elastic laminate with coupling matches the dense oracle") {
  const DensitySpec d2 = reference_density_D2(PhaseLayout::laminate(0, 0.5, 1.0, 4.0),
                                              PhaseLayout::laminate(0, 0.5, 0.3, 1.5));
  std::mt19937_64 rng(61);
  const Mat3 A = melt::random_mat3(rng, 0.7);
  const Vec3 nu = melt::random_unit(rng);
  const double dense = melt::dense_elastic_cell(d2, 8, A, nu);
  const double spectral = solve_elastic_cell(d2, 8, A, nu).value;
  CHECK(rel_err(spectral, dense) < 1e-6);
}

TEST_CASE("exchange tensor tabulation is consistent with direct solves") {
  const Field a = laminate_field(32, 0, 0.5, 1.0, 4.0);
  const HomogenizedExchange t = tabulate_exchange_tensor(a);
  const Means mm = discrete_means(a);

  Mat3 A = Mat3::Zero();
  A(1, 0) = 1.0;  // longitudinal row in a different component
  CHECK(rel_err(t(A), mm.harmonic) < 1e-8);
  A.setZero();
  A(0, 2) = 1.0;
  CHECK(rel_err(t(A), mm.arithmetic) < 1e-8);

  std::mt19937_64 rng(67);
  for (int k = 0; k < 5; ++k) {
    const Mat3 R = melt::random_mat3(rng);
    CHECK(rel_err(t(R), solve_exchange_cell(a, R).value) < 1e-6);
  }
  // Block-diagonal 9x9 expansion agrees with the row form.
  const Mat9 m9 = t.matrix9();
  const Mat3 R = melt::random_mat3(rng);
  const Vec9 rv = flatten(R);
  CHECK(rel_err(rv.dot(m9 * rv), t(R)) < 1e-12);
}

TEST_CASE("elastic tensor tabulation: symmetry, PSD, consistency") {
  const DensitySpec d1 = reference_density_D1(PhaseLayout::laminate(0, 0.5, 1.0, 10.0));
  const Vec3 nu(0, 0, 1);
  const Mat9 m = tabulate_elastic_tensor(d1, 8, nu);
  CHECK((m - m.transpose()).norm() < 1e-10 * m.norm());
  Eigen::SelfAdjointEigenSolver<Mat9> es(m);
  CHECK(es.eigenvalues().minCoeff() > -1e-9);

  std::mt19937_64 rng(71);
  for (int k = 0; k < 10; ++k) {
    const Mat3 A = melt::random_mat3(rng);
    const Vec9 av = flatten(A);
    CHECK(rel_err(av.dot(m * av), solve_elastic_cell(d1, 8, A, nu).value) < 1e-6);
  }
}

TEST_CASE("constant-coefficient tensor reproduces Q exactly") {
  const DensitySpec d1 = reference_density_D1(PhaseLayout::constant(2.0));
  const Vec3 nu(0, 1, 0);
  const Mat9 m = tabulate_elastic_tensor(d1, 8, nu);
  std::mt19937_64 rng(73);
  for (int k = 0; k < 20; ++k) {
    const Mat3 A = melt::random_mat3(rng);
    const Vec9 av = flatten(A);
    CHECK(rel_err(av.dot(m * av), d1.Q(Vec3::Zero(), A, nu)) < 1e-8);
  }
}

TEST_CASE("Voigt-Reuss sandwich on random laminates") {
  std::mt19937_64 rng(79);
  std::uniform_real_distribution<double> uval(0.2, 5.0), ufrac(0.15, 0.85);
  std::uniform_int_distribution<int> uaxis(0, 2);
  const int n = 32;
  for (int k = 0; k < 20; ++k) {
    const int axis = uaxis(rng);
    const Field a = laminate_field(n, axis, ufrac(rng), uval(rng), uval(rng));
    const Means mm = discrete_means(a);

    Mat3 L = Mat3::Zero(), T = Mat3::Zero();
    L(0, axis) = 1.0;
    T(0, (axis + 1) % 3) = 1.0;
    const double vl = solve_exchange_cell(a, L).value;
    const double vt = solve_exchange_cell(a, T).value;
    CHECK(vl >= mm.harmonic - 1e-8);
    CHECK(vl <= mm.arithmetic + 1e-8);
    CHECK(vt >= mm.harmonic - 1e-8);
    CHECK(vt <= mm.arithmetic + 1e-8);

    const Mat3 A = melt::random_mat3(rng);
    const double va = solve_exchange_cell(a, A).value;
    CHECK(va >= mm.harmonic * A.squaredNorm() - 1e-8);
    CHECK(va <= mm.arithmetic * A.squaredNorm() + 1e-8);
  }
}

TEST_CASE("HomogenizedElastic collapses for uniform coefficients and memoizes") {
  const DensitySpec d2 = reference_density_D2(PhaseLayout::constant(1.0),
                                              PhaseLayout::constant(0.8));
  const HomogenizedElastic q(d2, 8);
  std::mt19937_64 rng(83);
  for (int k = 0; k < 10; ++k) {
    const Mat3 A = melt::random_mat3(rng);
    const Vec3 nu = melt::random_unit(rng);
    CHECK(rel_err(q(A, nu), d2.Q(Vec3::Zero(), A, nu)) < 1e-12);
  }

  const DensitySpec lam = reference_density_D1(PhaseLayout::laminate(0, 0.5, 1.0, 4.0));
  const HomogenizedElastic qlam(lam, 8);
  const Vec3 nu(0, 0, 1);
  const Mat3 A = melt::random_mat3(rng, 0.5);
  const double v1 = qlam(A, nu);
  const double v2 = qlam(A, nu);  // memo hit
  CHECK(v1 == v2);
  CHECK(rel_err(v1, solve_elastic_cell(lam, 8, A, nu).value) < 1e-6);
}

TEST_CASE("icosphere has 162 well-spread directions") {
  const auto& verts = icosphere162();
  CHECK(verts.size() == 162);
  for (const Vec3& v : verts) CHECK(std::abs(v.norm() - 1.0) < 1e-12);
  std::mt19937_64 rng(89);
  for (int k = 0; k < 100; ++k) {
    const Vec3 d = melt::random_unit(rng);
    const int id = quantize_direction(d);
    CHECK(d.dot(verts[std::size_t(id)]) > 0.97);  // within ~14 degrees
  }
}

TEST_CASE("solver failure paths") {
  const Field a = laminate_field(16, 0, 0.5, 1.0, 4.0);
  Mat3 A = Mat3::Zero();
  A(0, 0) = 1.0;
  CellSolveOptions opt;
  opt.tol = 1e-30;
  opt.max_iter = 3;
  CHECK_THROWS_AS(solve_exchange_cell(a, A, opt), SolverError);

  Field bad = a;
  bad.at(5, 0) = 0.0;
  CHECK_THROWS_AS(solve_exchange_cell(bad, A), SolverError);

  CHECK_THROWS(solve_elastic_cell(reference_density_D1(PhaseLayout::constant(1.0)), 8, A,
                                  Vec3(0, 0, 2)));
}
