#include "mel/cell.hpp"

#include <cmath>
#include <complex>
#include <map>
#include <sstream>

#include "mel/parallel.hpp"
#include "mel/spectral.hpp"

namespace mel {

namespace {

// Shared scaffolding for preconditioned CG on the periodic cell. The operator
// is applied spectrally (derivatives in Fourier space, coefficient
// multiplication at lattice points); the preconditioner is the inverse
// Laplacian with the mean coefficient. All inner products carry the midpoint
// quadrature weight 1/n^3 so the tracked energy is the actual functional.
struct CgResult {
  double residual = 0.0;
  int iterations = 0;
  std::vector<double> energy_trace;
};

class CellOperator {
 public:
  CellOperator(int n, int ncomp)
      : n_(n),
        ncomp_(ncomp),
        ws_({n, n, n}, Vec3::Ones()),
        npts_(std::int64_t(n) * n * n),
        weight_(1.0 / double(npts_)) {}

  virtual ~CellOperator() = default;

  // out = K x (x and out have ncomp * npts entries, component-major).
  virtual void apply(const std::vector<double>& x, std::vector<double>& out) = 0;
  // Functional value at corrector x (the full Q/a quadrature, not just the
  // quadratic part).
  virtual double value(const std::vector<double>& x) = 0;
  // rhs so that K phi = b reproduces the Euler-Lagrange equations.
  virtual std::vector<double> rhs() = 0;

  int n() const { return n_; }
  int ncomp() const { return ncomp_; }
  std::int64_t npts() const { return npts_; }
  double weight() const { return weight_; }

  double dot(const std::vector<double>& a, const std::vector<double>& b) const {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s * weight_;
  }

  // z = (mean_coeff * (-laplace))^{-1} r, projecting out the kernel modes.
  void precondition(const std::vector<double>& r, std::vector<double>& z,
                    double mean_coeff) {
    spec_.resize(std::size_t(ws_.spec_size()));
    for (int c = 0; c < ncomp_; ++c) {
      ws_.forward(r.data() + std::size_t(c) * npts_, spec_.data());
      for (std::int64_t s = 0; s < ws_.spec_size(); ++s) {
        const double k2 = ws_.k_squared(s);
        spec_[std::size_t(s)] =
            (k2 > 0.0) ? spec_[std::size_t(s)] / (mean_coeff * k2) : 0.0;
      }
      ws_.inverse(spec_.data(), z.data() + std::size_t(c) * npts_);
    }
  }

 protected:
  int n_;
  int ncomp_;
  SpectralWorkspace ws_;
  std::int64_t npts_;
  double weight_;
  std::vector<std::complex<double>> spec_;
};

// Gradient of all components of x into grad (ncomp*3 buffers, component-major:
// grad[(c*3 + d) * npts + p] = d x_c / d y_d).
void cell_gradient(SpectralWorkspace& ws, const std::vector<double>& x, int ncomp,
                   std::int64_t npts, std::vector<double>& grad) {
  std::vector<std::complex<double>> spec(std::size_t(ws.spec_size()), std::complex<double>{});
  for (int c = 0; c < ncomp; ++c) {
    ws.forward(x.data() + std::size_t(c) * npts, spec.data());
    for (int d = 0; d < 3; ++d)
      ws.derivative(spec.data(), d, grad.data() + std::size_t(c * 3 + d) * npts);
  }
}

// out_c = -sum_d d/dy_d flux[(c*3 + d)]; the adjoint of the gradient above.
void cell_divergence(SpectralWorkspace& ws, const std::vector<double>& flux, int ncomp,
                     std::int64_t npts, std::vector<double>& out) {
  std::vector<std::complex<double>> spec(std::size_t(ws.spec_size()), std::complex<double>{});
  std::vector<std::complex<double>> acc(std::size_t(ws.spec_size()), std::complex<double>{});
  for (int c = 0; c < ncomp; ++c) {
    std::fill(acc.begin(), acc.end(), std::complex<double>(0.0, 0.0));
    for (int d = 0; d < 3; ++d) {
      ws.forward(flux.data() + std::size_t(c * 3 + d) * npts, spec.data());
      for (std::int64_t s = 0; s < ws.spec_size(); ++s)
        acc[std::size_t(s)] += ws.ik(d, s) * spec[std::size_t(s)];
    }
    for (auto& v : acc) v = -v;
    ws.inverse(acc.data(), out.data() + std::size_t(c) * npts);
  }
}

class ExchangeOperator final : public CellOperator {
 public:
  ExchangeOperator(const Field& a_field, const Vec3& row)
      : CellOperator(a_field.cell_grid()->n, 1), a_(a_field.component(0)), row_(row) {
    double amean = 0.0;
    for (std::int64_t p = 0; p < npts_; ++p) amean += a_[p];
    amean_ = amean / double(npts_);
  }

  void apply(const std::vector<double>& x, std::vector<double>& out) override {
    grad_.resize(std::size_t(3 * npts_));
    cell_gradient(ws_, x, 1, npts_, grad_);
    for (int d = 0; d < 3; ++d) {
      double* gd = grad_.data() + std::size_t(d) * npts_;
      for (std::int64_t p = 0; p < npts_; ++p) gd[p] *= a_[p];
    }
    cell_divergence(ws_, grad_, 1, npts_, out);
  }

  std::vector<double> rhs() override {
    std::vector<double> flux(std::size_t(3 * npts_), 0.0);
    for (int d = 0; d < 3; ++d) {
      double* fd = flux.data() + std::size_t(d) * npts_;
      for (std::int64_t p = 0; p < npts_; ++p) fd[p] = a_[p] * row_[d];
    }
    std::vector<double> b(std::size_t(npts_), 0.0);
    cell_divergence(ws_, flux, 1, npts_, b);
    for (auto& v : b) v = -v;  // b = +div(a row)
    return b;
  }

  double value(const std::vector<double>& x) override {
    grad_.resize(std::size_t(3 * npts_));
    cell_gradient(ws_, x, 1, npts_, grad_);
    KahanSum s;
    for (std::int64_t p = 0; p < npts_; ++p) {
      double g2 = 0.0;
      for (int d = 0; d < 3; ++d) {
        const double g = row_[d] + grad_[std::size_t(d) * npts_ + p];
        g2 += g * g;
      }
      s.add(a_[p] * g2);
    }
    return s.get() * weight_;
  }

  double mean_coeff() const { return amean_; }

 private:
  const double* a_;
  Vec3 row_;
  double amean_ = 1.0;
  std::vector<double> grad_;
};

class ElasticOperator final : public CellOperator {
 public:
  ElasticOperator(const DensitySpec& spec, int n, const Mat3& A, const Vec3& nu)
      : CellOperator(n, 3), spec_(&spec), A_(A), nu_(nu) {
    const CellGrid g(n);
    nodes_.resize(std::size_t(npts_));
    for (int iz = 0; iz < n; ++iz)
      for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix)
          nodes_[std::size_t(g.index(ix, iy, iz))] = g.node(ix, iy, iz);
    // Mean diagonal stiffness sets the preconditioner scale.
    double m = 0.0;
    std::int64_t count = 0;
    const std::int64_t step = std::max<std::int64_t>(1, npts_ / 512);
    for (std::int64_t p = 0; p < npts_; p += step, ++count) {
      double diag = 0.0;
      for (int a = 0; a < 9; ++a) {
        Mat3 e = Mat3::Zero();
        e(a / 3, a % 3) = 1.0;
        diag += spec_->Q(nodes_[std::size_t(p)], e, nu_);
      }
      m += diag / 9.0;
    }
    mean_coeff_ = std::max(1e-12, m / double(count));
  }

  void apply(const std::vector<double>& x, std::vector<double>& out) override {
    grad_.resize(std::size_t(9 * npts_));
    cell_gradient(ws_, x, 3, npts_, grad_);
    stress_inplace(grad_, Mat3::Zero());
    cell_divergence(ws_, grad_, 3, npts_, out);
  }

  std::vector<double> rhs() override {
    std::vector<double> flux(std::size_t(9 * npts_), 0.0);
    stress_inplace(flux, A_);
    std::vector<double> b(std::size_t(3 * npts_), 0.0);
    cell_divergence(ws_, flux, 3, npts_, b);
    for (auto& v : b) v = -v;
    return b;
  }

  double value(const std::vector<double>& x) override {
    grad_.resize(std::size_t(9 * npts_));
    cell_gradient(ws_, x, 3, npts_, grad_);
    KahanSum s;
    for (std::int64_t p = 0; p < npts_; ++p) {
      Mat3 gm;
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) gm(c, d) = grad_[std::size_t(c * 3 + d) * npts_ + p];
      s.add(spec_->Q(nodes_[std::size_t(p)], A_ + gm, nu_));
    }
    return s.get() * weight_;
  }

  double mean_coeff() const { return mean_coeff_; }

 private:
  // flux <- stress(y, shift + flux-as-gradient, nu), pointwise.
  void stress_inplace(std::vector<double>& flux, const Mat3& shift) {
    for (std::int64_t p = 0; p < npts_; ++p) {
      Mat3 gm;
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) gm(c, d) = flux[std::size_t(c * 3 + d) * npts_ + p];
      const Mat3 sig = spec_->stress(nodes_[std::size_t(p)], shift + gm, nu_);
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) flux[std::size_t(c * 3 + d) * npts_ + p] = sig(c, d);
    }
  }

  const DensitySpec* spec_;
  Mat3 A_;
  Vec3 nu_;
  std::vector<Vec3> nodes_;
  double mean_coeff_ = 1.0;
  std::vector<double> grad_;
};

void subtract_mean(std::vector<double>& x, int ncomp, std::int64_t npts) {
  for (int c = 0; c < ncomp; ++c) {
    double* xc = x.data() + std::size_t(c) * npts;
    double m = 0.0;
    for (std::int64_t p = 0; p < npts; ++p) m += xc[p];
    m /= double(npts);
    for (std::int64_t p = 0; p < npts; ++p) xc[p] -= m;
  }
}

CgResult run_pcg(CellOperator& op, double mean_coeff, std::vector<double>& x,
                 const CellSolveOptions& opt) {
  const int max_iter = opt.max_iter > 0 ? opt.max_iter : 10 * op.n();
  const std::size_t size = std::size_t(op.ncomp()) * std::size_t(op.npts());
  x.assign(size, 0.0);

  std::vector<double> b = op.rhs();
  std::vector<double> r = b;
  std::vector<double> z(size), p(size), kp(size);

  CgResult res;
  double energy = op.value(x);
  res.energy_trace.push_back(energy);

  const double bnorm = std::sqrt(op.dot(b, b));
  if (bnorm == 0.0) {
    res.residual = 0.0;
    res.iterations = 0;
    return res;  // zero corrector: constant-coefficient collapse
  }

  op.precondition(r, z, mean_coeff);
  p = z;
  double rz = op.dot(r, z);

  for (int it = 1; it <= max_iter; ++it) {
    op.apply(p, kp);
    const double pkp = op.dot(p, kp);
    if (!(pkp > 0.0)) {
      std::ostringstream os;
      os << "cell solve: indefinite quadratic form detected at iteration " << it
         << " (p.Kp = " << pkp << ")";
      throw SolverError(os.str());
    }
    const double alpha = rz / pkp;
    for (std::size_t i = 0; i < size; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * kp[i];
    }
    energy -= alpha * rz;  // exact PCG descent decrement
    res.energy_trace.push_back(energy);
    res.iterations = it;

    const double rnorm = std::sqrt(op.dot(r, r));
    res.residual = rnorm / bnorm;
    if (res.residual <= opt.tol) break;
    if (it == max_iter) {
      std::ostringstream os;
      os << "cell solve: CG did not converge in " << max_iter
         << " iterations, relative residual " << res.residual;
      throw SolverError(os.str());
    }

    op.precondition(r, z, mean_coeff);
    const double rz_new = op.dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < size; ++i) p[i] = z[i] + beta * p[i];
  }

  // Gauge: the iterates are mean-free by construction; enforce exactly.
  subtract_mean(x, op.ncomp(), op.npts());
  return res;
}

void check_exchange_field(const Field& a_field) {
  const CellGrid* cg = a_field.cell_grid();
  if (!cg || a_field.rank() != Rank::scalar)
    throw std::invalid_argument("solve_exchange_cell: scalar cell-grid coefficient expected");
  const double* a = a_field.component(0);
  for (std::int64_t p = 0; p < a_field.points(); ++p)
    if (!(a[p] > 0.0) || !std::isfinite(a[p]))
      throw SolverError("solve_exchange_cell: coefficient violates 0 < C1 <= a <= C2");
}

}  // namespace

CorrectorSolution solve_exchange_cell(const Field& a_field, const Mat3& A,
                                      const CellSolveOptions& opt) {
  check_exchange_field(a_field);
  const int n = a_field.cell_grid()->n;
  CorrectorSolution sol{Field(CellGrid(n), Rank::vector3), 0.0, 0.0, 0, {}};

  // The three rows decouple into independent scalar problems.
  std::array<std::vector<double>, 3> traces;
  for (int i = 0; i < 3; ++i) {
    const Vec3 row = Vec3(A(i, 0), A(i, 1), A(i, 2));
    ExchangeOperator op(a_field, row);
    std::vector<double> x;
    CgResult cg = run_pcg(op, op.mean_coeff(), x, opt);
    sol.value += op.value(x);
    sol.residual = std::max(sol.residual, cg.residual);
    sol.iterations = std::max(sol.iterations, cg.iterations);
    traces[std::size_t(i)] = std::move(cg.energy_trace);
    double* phi = sol.phi.component(i);
    std::copy(x.begin(), x.end(), phi);
  }
  // Sum the row traces, padding finished rows with their final value, so the
  // combined record stays non-increasing.
  std::size_t len = 0;
  for (const auto& t : traces) len = std::max(len, t.size());
  sol.energy_trace.assign(len, 0.0);
  for (const auto& t : traces)
    for (std::size_t k = 0; k < len; ++k)
      sol.energy_trace[k] += (k < t.size()) ? t[k] : t.back();
  return sol;
}

CorrectorSolution solve_elastic_cell(const DensitySpec& spec, int n, const Mat3& A,
                                     const Vec3& nu, const CellSolveOptions& opt) {
  if (std::abs(nu.norm() - 1.0) > 1e-8)
    throw std::invalid_argument("solve_elastic_cell: nu must be a unit vector");
  ElasticOperator op(spec, n, A, nu);
  std::vector<double> x;
  CgResult cg = run_pcg(op, op.mean_coeff(), x, opt);

  CorrectorSolution sol{Field(CellGrid(n), Rank::vector3), 0.0, cg.residual, cg.iterations, {}};
  sol.energy_trace = std::move(cg.energy_trace);
  sol.value = op.value(x);
  if (sol.value < -1e-10)
    throw SolverError("solve_elastic_cell: negative functional value (indefinite Q)");
  const std::int64_t npts = sol.phi.points();
  for (int c = 0; c < 3; ++c)
    std::copy(x.begin() + std::int64_t(c) * npts, x.begin() + std::int64_t(c + 1) * npts,
              sol.phi.component(c));
  return sol;
}

Mat9 HomogenizedExchange::matrix9() const {
  Mat9 out = Mat9::Zero();
  for (int i = 0; i < 3; ++i) out.block<3, 3>(3 * i, 3 * i) = m_;
  return out;
}

HomogenizedExchange tabulate_exchange_tensor(const Field& a_field,
                                             const CellSolveOptions& opt) {
  // Row problems are identical for every row index, so the 3x3 form follows
  // from the three basis directions plus polarization pairs.
  auto scalar_value = [&](const Vec3& dir) {
    Mat3 A = Mat3::Zero();
    A.row(0) = dir.transpose();
    return solve_exchange_cell(a_field, A, opt).value;
  };
  Mat3 m = Mat3::Zero();
  std::array<double, 3> diag;
  for (int d = 0; d < 3; ++d) {
    diag[std::size_t(d)] = scalar_value(Vec3::Unit(d));
    m(d, d) = diag[std::size_t(d)];
  }
  for (int d = 0; d < 3; ++d)
    for (int e = d + 1; e < 3; ++e) {
      const double v = scalar_value(Vec3::Unit(d) + Vec3::Unit(e));
      const double off = 0.5 * (v - diag[std::size_t(d)] - diag[std::size_t(e)]);
      m(d, e) = off;
      m(e, d) = off;
    }
  return HomogenizedExchange(m, a_field.cell_grid()->n);
}

Mat9 tabulate_elastic_tensor(const DensitySpec& spec, int n, const Vec3& nu,
                             const CellSolveOptions& opt) {
  // 9 basis solves + 36 pair solves, independent; run on the worker pool.
  std::array<Mat3, 9> basis;
  for (int a = 0; a < 9; ++a) {
    Mat3 e = Mat3::Zero();
    e(a / 3, a % 3) = 1.0;
    basis[std::size_t(a)] = e;
  }
  std::vector<std::pair<int, int>> jobs;
  for (int a = 0; a < 9; ++a) jobs.emplace_back(a, a);
  for (int a = 0; a < 9; ++a)
    for (int b = a + 1; b < 9; ++b) jobs.emplace_back(a, b);

  std::vector<double> vals(jobs.size(), 0.0);
  par::parallel_for(std::int64_t(jobs.size()), [&](std::int64_t j) {
    const auto [a, b] = jobs[std::size_t(j)];
    const Mat3 arg = (a == b) ? basis[std::size_t(a)]
                              : Mat3(basis[std::size_t(a)] + basis[std::size_t(b)]);
    vals[std::size_t(j)] = solve_elastic_cell(spec, n, arg, nu, opt).value;
  });

  Mat9 m = Mat9::Zero();
  std::size_t j = 0;
  for (int a = 0; a < 9; ++a) m(a, a) = vals[j++];
  for (int a = 0; a < 9; ++a)
    for (int b = a + 1; b < 9; ++b) {
      const double off = 0.5 * (vals[j++] - m(a, a) - m(b, b));
      m(a, b) = off;
      m(b, a) = off;
    }
  return m;
}

HomogenizedElastic::HomogenizedElastic(DensitySpec spec, int n, CellSolveOptions opt)
    : spec_(std::move(spec)), n_(n), opt_(opt) {}

double HomogenizedElastic::operator()(const Mat3& A, const Vec3& nu) const {
  if (spec_.elastic_uniform_in_y) {
    // Constant coefficients: the corrector vanishes and Q_hom = Q pointwise,
    // evaluated with the exact direction (no quantization error).
    return spec_.Q(Vec3::Zero(), A, nu);
  }
  const Mat9& m = tensor_for(nu);
  const Vec9 v = flatten(A);
  return v.dot(m * v);
}

Mat9 HomogenizedElastic::matrix9(const Vec3& nu) const {
  if (spec_.elastic_uniform_in_y) {
    Mat9 m;
    std::array<Mat3, 9> basis;
    std::array<double, 9> diag;
    for (int a = 0; a < 9; ++a) {
      Mat3 e = Mat3::Zero();
      e(a / 3, a % 3) = 1.0;
      basis[std::size_t(a)] = e;
      diag[std::size_t(a)] = spec_.Q(Vec3::Zero(), e, nu);
      m(a, a) = diag[std::size_t(a)];
    }
    for (int a = 0; a < 9; ++a)
      for (int b = a + 1; b < 9; ++b) {
        const double q = spec_.Q(Vec3::Zero(), basis[std::size_t(a)] + basis[std::size_t(b)], nu);
        const double off = 0.5 * (q - diag[std::size_t(a)] - diag[std::size_t(b)]);
        m(a, b) = off;
        m(b, a) = off;
      }
    return m;
  }
  return tensor_for(nu);
}

const Mat9& HomogenizedElastic::tensor_for(const Vec3& nu) const {
  const int id = quantize_direction(nu);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = memo_.find(id);
    if (it != memo_.end()) return it->second;
  }
  Mat9 m = tabulate_elastic_tensor(spec_, n_, icosphere162()[std::size_t(id)], opt_);
  std::lock_guard<std::mutex> lock(mu_);
  return memo_.emplace(id, std::move(m)).first->second;
}

const std::vector<Vec3>& icosphere162() {
  static const std::vector<Vec3> verts = [] {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
                           {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
                           {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    for (auto& p : v) p.normalize();
    std::vector<std::array<int, 3>> f = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
        {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
        {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    for (int level = 0; level < 2; ++level) {
      std::map<std::pair<int, int>, int> midpoint;
      auto mid = [&](int a, int b) {
        const auto key = std::minmax(a, b);
        auto it = midpoint.find(key);
        if (it != midpoint.end()) return it->second;
        Vec3 p = (v[std::size_t(a)] + v[std::size_t(b)]).normalized();
        v.push_back(p);
        const int idx = int(v.size()) - 1;
        midpoint.emplace(key, idx);
        return idx;
      };
      std::vector<std::array<int, 3>> nf;
      nf.reserve(f.size() * 4);
      for (const auto& tr : f) {
        const int a = mid(tr[0], tr[1]), b = mid(tr[1], tr[2]), c = mid(tr[2], tr[0]);
        nf.push_back({tr[0], a, c});
        nf.push_back({tr[1], b, a});
        nf.push_back({tr[2], c, b});
        nf.push_back({a, b, c});
      }
      f = std::move(nf);
    }
    return v;
  }();
  return verts;
}

int quantize_direction(const Vec3& nu) {
  const Vec3 d = nu.normalized();
  const auto& verts = icosphere162();
  int best = 0;
  double best_dot = -2.0;
  for (std::size_t i = 0; i < verts.size(); ++i) {
    const double dd = d.dot(verts[i]);
    if (dd > best_dot) {
      best_dot = dd;
      best = int(i);
    }
  }
  return best;
}

}  // namespace mel
