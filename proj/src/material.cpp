#include "mel/material.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace mel {

namespace {

inline double frac(double t) { return t - std::floor(t); }

inline double barrier(double det, double s) {
  if (!(det > 0.0)) return std::numeric_limits<double>::infinity();
  const double b = std::pow(det, -s) - 1.0;
  return b * b;
}

std::string fmt_mat(const Mat3& g) {
  std::ostringstream os;
  os << "[";
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) os << g(i, j) << (i == 2 && j == 2 ? "]" : ", ");
  return os.str();
}

}  // namespace

double PhaseLayout::operator()(const Vec3& y) const {
  switch (kind) {
    case Kind::constant:
      return values[0];
    case Kind::laminate:
      return frac(y[axis]) < fraction ? values[0] : values[1];
    case Kind::checkerboard: {
      int par = 0;
      for (int d = 0; d < 3; ++d) par ^= (frac(y[d]) < 0.5) ? 0 : 1;
      return par == 0 ? values[0] : values[1];
    }
  }
  return values[0];
}

PhaseLayout PhaseLayout::constant(double v) {
  PhaseLayout l;
  l.kind = Kind::constant;
  l.values = {v};
  return l;
}

PhaseLayout PhaseLayout::laminate(int axis, double fraction, double v0, double v1) {
  if (axis < 0 || axis > 2) throw std::invalid_argument("laminate: axis must be 0..2");
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("laminate: fraction must lie in (0,1)");
  PhaseLayout l;
  l.kind = Kind::laminate;
  l.axis = axis;
  l.fraction = fraction;
  l.values = {v0, v1};
  return l;
}

PhaseLayout PhaseLayout::checkerboard(double v0, double v1) {
  PhaseLayout l;
  l.kind = Kind::checkerboard;
  l.values = {v0, v1};
  return l;
}

std::string PhaseLayout::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::constant:
      os << "constant(" << values[0] << ")";
      break;
    case Kind::laminate:
      os << "laminate(axis=" << axis + 1 << ", fraction=" << fraction << ", values=["
         << values[0] << ", " << values[1] << "])";
      break;
    case Kind::checkerboard:
      os << "checkerboard(values=[" << values[0] << ", " << values[1] << "])";
      break;
  }
  return os.str();
}

double dist_SO3(const Mat3& f) {
  if (!is_finite(f)) throw std::invalid_argument("dist_SO3: non-finite matrix");
  Eigen::JacobiSVD<Mat3> svd(f);
  const Vec3 sigma = svd.singularValues();  // descending
  double d2;
  if (f.determinant() < 0.0) {
    d2 = (sigma[0] - 1) * (sigma[0] - 1) + (sigma[1] - 1) * (sigma[1] - 1) +
         (sigma[2] + 1) * (sigma[2] + 1);
  } else {
    d2 = (sigma - Vec3::Ones()).squaredNorm();
  }
  return std::sqrt(d2);
}

DensitySpec reference_density_D1(const PhaseLayout& c_layout, double p, double s,
                                 double mu0, const PhaseLayout& a_layout) {
  if (!(p > 3.0)) throw std::invalid_argument("density: p must exceed 3");
  if (!(s > p / (p - 2.0))) throw std::invalid_argument("density: s must exceed p/(p-2)");

  DensitySpec d;
  d.name = "D1";
  d.p = p;
  d.s = s;
  d.mu0 = mu0;
  d.C1 = *std::min_element(a_layout.values.begin(), a_layout.values.end());
  d.C2 = *std::max_element(a_layout.values.begin(), a_layout.values.end());
  if (!(d.C1 > 0.0)) throw std::invalid_argument("density: a(y) must be positive");
  d.elastic_uniform_in_y = (c_layout.kind == PhaseLayout::Kind::constant);
  d.exchange_uniform_in_y = (a_layout.kind == PhaseLayout::Kind::constant);

  d.a = [a_layout](const Vec3& y) { return a_layout(y); };
  d.W = [c_layout, p, s](const Vec3& y, const Mat3& F, const Vec3&) {
    const double dist = dist_SO3(F);
    return c_layout(y) * (dist * dist + std::pow(dist, p)) + barrier(F.determinant(), s);
  };
  d.Q = [c_layout, s](const Vec3& y, const Mat3& G, const Vec3&) {
    const double tr = G.trace();
    return 2.0 * c_layout(y) * sym(G).squaredNorm() + 2.0 * s * s * tr * tr;
  };
  d.stress = [c_layout, s](const Vec3& y, const Mat3& G, const Vec3&) -> Mat3 {
    return 2.0 * c_layout(y) * sym(G) + 2.0 * s * s * G.trace() * Mat3::Identity();
  };
  return d;
}

DensitySpec reference_density_D2(const PhaseLayout& c_layout, const PhaseLayout& kappa_layout,
                                 double p, double s, double mu0,
                                 const PhaseLayout& a_layout) {
  DensitySpec d = reference_density_D1(c_layout, p, s, mu0, a_layout);
  d.name = "D2";
  d.elastic_uniform_in_y = d.elastic_uniform_in_y &&
                           (kappa_layout.kind == PhaseLayout::Kind::constant);

  auto w1 = d.W;
  d.W = [w1, kappa_layout](const Vec3& y, const Mat3& F, const Vec3& nu) {
    double coupling = 0.0;
    const Vec3 fn = F.transpose() * nu;
    const double fn2 = fn.squaredNorm();
    if (fn2 > 0.0) {
      // Built from F^T F and F^T nu only, hence frame indifferent.
      const Mat3 strain = F.transpose() * F - Mat3::Identity();
      const double r = fn.dot(strain * fn) / (2.0 * fn2);
      coupling = kappa_layout(y) * r * r;
    }
    return w1(y, F, nu) + coupling;
  };
  auto q1 = d.Q;
  d.Q = [q1, kappa_layout](const Vec3& y, const Mat3& G, const Vec3& nu) {
    const double nn = nu.norm();
    if (nn == 0.0) return q1(y, G, nu);
    const Vec3 nhat = nu / nn;
    const double ax = nhat.dot(sym(G) * nhat);
    return q1(y, G, nu) + 2.0 * kappa_layout(y) * ax * ax;
  };
  auto s1 = d.stress;
  d.stress = [s1, kappa_layout](const Vec3& y, const Mat3& G, const Vec3& nu) -> Mat3 {
    const double nn = nu.norm();
    if (nn == 0.0) return s1(y, G, nu);
    const Vec3 nhat = nu / nn;
    const double ax = nhat.dot(sym(G) * nhat);
    return s1(y, G, nu) + 2.0 * kappa_layout(y) * ax * (nhat * nhat.transpose());
  };
  return d;
}

HessianExtraction extract_Q_by_hessian(const DensitySpec& spec, const Vec3& y,
                                       const Vec3& nu, double step) {
  if (!(step >= 1e-6 && step <= 1e-3))
    throw std::invalid_argument("extract_Q_by_hessian: step must lie in [1e-6, 1e-3]");

  auto extract = [&](double t) {
    // Directional second difference q(G) ~ Q(y, G, nu) on the five-point
    // central stencil (fourth order, keeps the cubic Taylor remainder out of
    // the 1e-6 budget at step 1e-4); the matrix follows by polarization over
    // the 9 basis matrices.
    auto q = [&](const Mat3& G) {
      const Mat3 id = Mat3::Identity();
      const double w2p = spec.W(y, id + 2.0 * t * G, nu);
      const double wp = spec.W(y, id + t * G, nu);
      const double w0 = spec.W(y, id, nu);
      const double wm = spec.W(y, id - t * G, nu);
      const double w2m = spec.W(y, id - 2.0 * t * G, nu);
      return (-w2p + 16.0 * wp - 30.0 * w0 + 16.0 * wm - w2m) / (12.0 * t * t);
    };
    Mat9 m;
    std::array<Mat3, 9> basis;
    std::array<double, 9> qdiag;
    for (int a = 0; a < 9; ++a) {
      Mat3 e = Mat3::Zero();
      e(a / 3, a % 3) = 1.0;
      basis[std::size_t(a)] = e;
      qdiag[std::size_t(a)] = q(e);
      m(a, a) = qdiag[std::size_t(a)];
    }
    for (int a = 0; a < 9; ++a)
      for (int b = a + 1; b < 9; ++b) {
        const double qab = q(basis[std::size_t(a)] + basis[std::size_t(b)]);
        const double off = 0.5 * (qab - qdiag[std::size_t(a)] - qdiag[std::size_t(b)]);
        m(a, b) = off;
        m(b, a) = off;
      }
    return m;
  };

  HessianExtraction out;
  out.matrix = extract(step);
  const Mat9 half = extract(step / 2);
  const double denom = std::max(out.matrix.norm(), 1e-30);
  out.richardson_gap = (out.matrix - half).norm() / denom;
  out.richardson_ok = out.richardson_gap <= 1e-3;
  return out;
}

bool HypothesisReport::all_pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

const HypothesisCheck* HypothesisReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

namespace {

Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::Quaterniond q(nd(rng), nd(rng), nd(rng), nd(rng));
  q.normalize();
  return q.toRotationMatrix();
}

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Vec3 v(nd(rng), nd(rng), nd(rng));
  while (v.norm() < 1e-6) v = Vec3(nd(rng), nd(rng), nd(rng));
  return v.normalized();
}

Mat3 random_matrix(std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Mat3 g;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) g(i, j) = scale * nd(rng);
  return g;
}

struct WorstTracker {
  double worst = 0.0;
  std::string witness;
  void update(double v, const std::string& w) {
    if (v > worst) {
      worst = v;
      witness = w;
    }
  }
};

}  // namespace

HypothesisReport validate_hypotheses(const DensitySpec& spec, std::int64_t n_samples,
                                     std::uint64_t seed) {
  if (n_samples < 100)
    throw std::invalid_argument("validate_hypotheses: n_samples must be >= 100");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uy(0.0, 2.0);
  std::uniform_int_distribution<int> ushift(-2, 2);
  std::uniform_real_distribution<double> uscale(0.0, 1.0);

  HypothesisReport rep;
  HypothesisCheck h1{"H1 periodicity", true, 0.0, 1e-12, n_samples, ""};
  HypothesisCheck h2{"H2 coercivity", true, 0.0, 0.0, n_samples, ""};
  HypothesisCheck h2h{"H2 determinant barrier", true, 0.0, 1e-12, n_samples, ""};
  HypothesisCheck h3{"H3 frame indifference", true, 0.0, 1e-12, n_samples, ""};
  HypothesisCheck h4{"H4 normalization", true, 0.0, 1e-14, n_samples, ""};
  HypothesisCheck h5{"H5 Taylor expansion", true, 0.0, 0.0, n_samples, ""};
  HypothesisCheck ga{"grw-a bounds", true, 0.0, 1e-12, n_samples, ""};

  WorstTracker w1, w2, w2h, w3, w4, w5, wa;

  // First pass: estimate the coercivity constant from near-identity samples
  // (where the dist^2 branch is active); the full range is then required to
  // stay above half of it.
  const std::int64_t n_est = std::max<std::int64_t>(100, n_samples / 10);
  double c_est = std::numeric_limits<double>::infinity();
  {
    std::mt19937_64 rng_est(seed ^ 0x9e3779b97f4a7c15ull);
    for (std::int64_t i = 0; i < n_est; ++i) {
      const Vec3 y(uy(rng_est), uy(rng_est), uy(rng_est));
      const Vec3 nu = random_unit(rng_est);
      Mat3 f = Mat3::Identity() + random_matrix(rng_est, 0.1);
      if (f.determinant() <= 0.05) continue;
      const double dist = dist_SO3(f);
      if (dist < 1e-6 || dist > 0.5) continue;
      const double denom = std::max(dist * dist, std::pow(dist, spec.p));
      const double w = spec.W(y, f, nu);
      if (std::isfinite(w) && denom > 0.0) c_est = std::min(c_est, w / denom);
    }
    if (!std::isfinite(c_est)) c_est = 0.0;
  }

  for (std::int64_t i = 0; i < n_samples; ++i) {
    const Vec3 y(uy(rng), uy(rng), uy(rng));
    const Vec3 nu = random_unit(rng);
    const Mat3 rot = random_rotation(rng);

    // Mix of moderate and large perturbations; skip non-orientation-preserving
    // samples for the finite-W checks (W = +inf there by the barrier).
    const double mag = (i % 7 == 0) ? 10.0 : 0.3 * uscale(rng);
    Mat3 f = Mat3::Identity() + random_matrix(rng, mag);
    if (f.determinant() <= 1e-3) {
      f = Mat3::Identity() + random_matrix(rng, 0.05);
      if (f.determinant() <= 1e-3) continue;
    }

    const double w = spec.W(y, f, nu);
    if (!std::isfinite(w)) continue;
    std::ostringstream sw;
    sw << "y=(" << y.transpose() << ") F=" << fmt_mat(f);

    // H1: integer shifts leave W unchanged.
    const Vec3 shift(double(ushift(rng)), double(ushift(rng)), double(ushift(rng)));
    const double wsh = spec.W(y + shift, f, nu);
    w1.update(std::abs(wsh - w) / (1.0 + std::abs(w)), sw.str());

    // H2 lower bounds, measured against half the estimated constant.
    const double dist = dist_SO3(f);
    const double branch = std::max(dist * dist, std::pow(dist, spec.p));
    const double slack = 0.5 * c_est * branch - w;
    w2.update(slack / (1.0 + branch), sw.str() + " dist=" + std::to_string(dist));
    const double hbar = barrier(f.determinant(), spec.s);
    w2h.update((hbar - w) / (1.0 + hbar), sw.str());

    // H3: (F, nu) -> (R F, R nu).
    const double wrot = spec.W(y, rot * f, rot * nu);
    w3.update(std::abs(wrot - w) / (1.0 + std::abs(w)), sw.str());

    // H4.
    w4.update(std::abs(spec.W(y, Mat3::Identity(), nu)), "y=(" + std::to_string(y[0]) + ")");

    // H5: the normalized Taylor remainder |W(Id + tG) - t^2/2 Q(G)| / t^2 must
    // be small at the finest step and not blow up along t = 1e-2, 1e-3, 1e-4.
    // (The signed remainder can cross zero, so monotone decay of its modulus
    // is not required.)
    {
      const Mat3 g = random_matrix(rng, 1.0);
      const double qv = spec.Q(y, g, nu);
      double last = 0.0;
      for (double t : {1e-2, 1e-3, 1e-4}) {
        const double wt = spec.W(y, Mat3::Identity() + t * g, nu);
        last = std::abs(wt - 0.5 * t * t * qv) / (t * t);
      }
      const double g3 = std::pow(1.0 + g.norm(), 3.0);
      w5.update(last / g3, sw.str() + " G=" + fmt_mat(g));
    }

    // grw-a.
    const double av = spec.a(y);
    const double aviol = std::max(spec.C1 - av, av - spec.C2);
    wa.update(aviol, "y=(" + std::to_string(y[0]) + "," + std::to_string(y[1]) + "," +
                         std::to_string(y[2]) + ") a=" + std::to_string(av));
  }

  auto finish = [&](HypothesisCheck& c, const WorstTracker& t, double tol) {
    c.worst = t.worst;
    c.tolerance = tol;
    c.witness = t.witness;
    c.pass = t.worst <= tol;
    rep.checks.push_back(c);
  };
  finish(h1, w1, 1e-12);
  finish(h2, w2, 1e-12);
  finish(h2h, w2h, 1e-12);
  finish(h3, w3, 1e-12);
  finish(h4, w4, 1e-14);
  finish(h5, w5, 1e-2);
  finish(ga, wa, 1e-12);
  return rep;
}

Field sample_on_cell(const std::function<double(const Vec3&)>& coeff, int n) {
  CellGrid g(n);
  Field f(g, Rank::scalar);
  double* data = f.component(0);
  for (int iz = 0; iz < n; ++iz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) data[g.index(ix, iy, iz)] = coeff(g.node(ix, iy, iz));
  return f;
}

}  // namespace mel
