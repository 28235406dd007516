#include "mel/energy.hpp"

#include <cmath>

#include "mel/cell.hpp"
#include "mel/parallel.hpp"

namespace mel {

namespace {

DeformationState make_state(const Field& u, Field grad_u, double eps, double alpha,
                            double scale) {
  const BoxGrid* bg = u.box_grid();
  if (!bg) throw std::invalid_argument("build_deformation: box-grid displacement expected");
  if (!u.all_finite()) throw std::invalid_argument("build_deformation: non-finite u");
  if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("build_deformation: eps in (0,1]");

  DeformationState st{u,
                      eps,
                      alpha,
                      scale,
                      std::move(grad_u),
                      Field(u.grid(), Rank::matrix3x3),
                      Field(u.grid(), Rank::scalar),
                      Field(u.grid(), Rank::matrix3x3),
                      Field(u.grid(), Rank::matrix3x3)};

  const std::int64_t np = u.points();
  const int nz = bg->n[2];
  const std::int64_t slab = np / nz;
  std::vector<double> slab_min(std::size_t(nz), kInf);
  std::vector<double> slab_op(std::size_t(nz), 0.0);

  par::parallel_for(nz, [&](std::int64_t iz) {
    double dmin = kInf, opmax = 0.0;
    for (std::int64_t p = iz * slab; p < (iz + 1) * slab; ++p) {
      const Mat3 gu = st.grad_u.mat3_at(p);
      const Mat3 gw = Mat3::Identity() + scale * gu;
      const double det = gw.determinant();
      const Mat3 adj = adjugate(gw);
      st.grad_w.set_mat3(p, gw);
      st.det_grad.at(p, 0) = det;
      st.adj_grad.set_mat3(p, adj);
      st.pullback.set_mat3(p, det > 0.0 ? Mat3(adj / std::sqrt(det)) : Mat3::Identity());
      dmin = std::min(dmin, det);
      opmax = std::max(opmax, operator_norm(scale * gu));
    }
    slab_min[std::size_t(iz)] = dmin;
    slab_op[std::size_t(iz)] = opmax;
  });
  for (int iz = 0; iz < nz; ++iz) {
    st.det_min = std::min(st.det_min, slab_min[std::size_t(iz)]);
    st.opnorm_max = std::max(st.opnorm_max, slab_op[std::size_t(iz)]);
  }
  st.det_positive = st.det_min > 0.0;
  return st;
}

}  // namespace

DeformationState build_deformation(const Field& u, double eps, double alpha) {
  return make_state(u, gradient(u, GradientScheme::central_difference), eps, alpha,
                    std::pow(eps, alpha));
}

DeformationState build_deformation(const Field& u, const Field& grad_u, double eps,
                                   double alpha) {
  return make_state(u, grad_u, eps, alpha, std::pow(eps, alpha));
}

DeformationState build_deformation_delta(const Field& u, double eps, double delta) {
  return make_state(u, gradient(u, GradientScheme::central_difference), eps, 1.0, delta);
}

DeformationState build_deformation_delta(const Field& u, const Field& grad_u, double eps,
                                         double delta) {
  return make_state(u, grad_u, eps, 1.0, delta);
}

AdmissibilityReport check_admissibility(const DeformationState& state,
                                        const DensitySpec& spec,
                                        const std::function<Vec3(const Vec3&)>& boundary_g,
                                        const DomainMask& mask, double c_domain) {
  const BoxGrid& bg = *state.u.box_grid();
  AdmissibilityReport rep;
  rep.det_positive = state.det_positive;
  rep.det_min = state.det_min;
  rep.operator_norm_max = state.opnorm_max;
  rep.injectivity_ok = state.opnorm_max < c_domain;

  // Witness of the minimal determinant.
  for (int iz = 0; iz < bg.n[2]; ++iz)
    for (int iy = 0; iy < bg.n[1]; ++iy)
      for (int ix = 0; ix < bg.n[0]; ++ix)
        if (state.det_grad.at(bg.index(ix, iy, iz), 0) == state.det_min)
          rep.det_witness = {ix, iy, iz};

  // L^s norm of 1/det over the mask.
  if (state.det_positive) {
    double acc = 0.0;
    for (std::int64_t p = 0; p < bg.points(); ++p)
      if (mask.inside[p])
        acc += std::pow(state.det_grad.at(p, 0), -spec.s) * bg.cell_volume();
    rep.inv_det_Ls_norm = std::pow(acc, 1.0 / spec.s);
  } else {
    rep.inv_det_Ls_norm = kInf;
  }

  // Boundary trace on the mask's boundary layer against g.
  double berr = 0.0;
  for (int iz = 0; iz < bg.n[2]; ++iz)
    for (int iy = 0; iy < bg.n[1]; ++iy)
      for (int ix = 0; ix < bg.n[0]; ++ix) {
        const std::int64_t p = bg.index(ix, iy, iz);
        if (!mask.inside[p]) continue;
        bool boundary = ix == 0 || iy == 0 || iz == 0 || ix == bg.n[0] - 1 ||
                        iy == bg.n[1] - 1 || iz == bg.n[2] - 1;
        if (!boundary) {
          for (int d = 0; d < 3 && !boundary; ++d) {
            std::array<int, 3> idx = {ix, iy, iz};
            idx[d] += 1;
            boundary = boundary || !mask.inside[bg.index(idx[0], idx[1], idx[2])];
            idx[d] -= 2;
            boundary = boundary || !mask.inside[bg.index(idx[0], idx[1], idx[2])];
          }
        }
        if (!boundary) continue;
        const Vec3 x = bg.node(ix, iy, iz);
        berr = std::max(berr, (state.u.vec3_at(p) - boundary_g(x)).norm());
      }
  rep.boundary_err = berr;
  rep.boundary_ok = berr <= 1e-10;
  return rep;
}

namespace {

enum class Mode { stored, rescaled, linearized };

using PointFn = PointSampler;

// Shared midpoint-quadrature loop over the mask. Collects the composed
// magnetization into chi_Omega m for the magnetostatic term.
EnergyBreakdown assemble_energy(const BoxGrid& bg, const DomainMask& mask,
                                const DensitySpec& spec, double eps, double scale,
                                Mode mode, const PointFn& at, const StrayEval& stray,
                                const char* tag) {
  EnergyBreakdown out;
  out.tag = tag;

  const int nz = bg.n[2];
  struct Partial {
    double elastic = 0.0;
    double exchange = 0.0;
    bool barrier = false;
  };
  std::vector<Partial> parts(std::size_t(nz), Partial{});
  Field m_field(bg, Rank::vector3);  // zero outside the mask by construction

  par::parallel_for(nz, [&](std::int64_t iz) {
    Partial acc;
    for (int iy = 0; iy < bg.n[1]; ++iy)
      for (int ix = 0; ix < bg.n[0]; ++ix) {
        const std::int64_t p = (iz * bg.n[1] + iy) * bg.n[0] + ix;
        if (!mask.inside[p]) continue;
        const Vec3 x = bg.node(ix, int(iy), int(iz));
        const PointData d = at(ix, int(iy), int(iz), p, x);
        m_field.set_vec3(p, d.m_comp);
        const Vec3 y = x / eps;

        if (mode == Mode::linearized) {
          acc.elastic += 0.5 * spec.Q(y, d.grad_u, d.m_comp);
          acc.exchange += spec.a(y) * d.grad_m_comp.squaredNorm();
          continue;
        }

        const Mat3 gw = Mat3::Identity() + scale * d.grad_u;
        const double det = gw.determinant();
        if (det <= 0.0) {
          acc.barrier = true;
          continue;
        }
        const double w = spec.W(y, gw, d.m_comp);
        acc.elastic += (mode == Mode::rescaled) ? w / (scale * scale) : w;
        const Mat3 grad_m_at_w = d.grad_m_comp * (adjugate(gw) / det);
        acc.exchange += spec.a(y) * grad_m_at_w.squaredNorm() * std::abs(det);
      }
    parts[std::size_t(iz)] = acc;
  });

  bool barrier = false;
  double el = 0.0, ex = 0.0;
  for (const Partial& pa : parts) {
    el += pa.elastic;
    ex += pa.exchange;
    barrier = barrier || pa.barrier;
  }
  const double vol = bg.cell_volume();
  out.elastic = barrier ? kInf : el * vol;
  out.exchange = ex * vol;
  out.magnetostatic =
      solve_stray_field(m_field, {spec.mu0, stray.pad_factor, false, false}).energy;
  out.finish();
  return out;
}

PointFn field_reader(const DeformationState& state, const Magnetization& m_comp,
                     const Field& grad_m_comp) {
  return [&state, &m_comp, &grad_m_comp](int, int, int, std::int64_t p,
                                         const Vec3&) -> PointData {
    return {state.grad_u.mat3_at(p), m_comp.at(p), grad_m_comp.mat3_at(p)};
  };
}

}  // namespace

double elastic_term_stored(const DeformationState& state, const DensitySpec& spec,
                           const Magnetization& m_comp, const DomainMask& mask) {
  const BoxGrid& bg = *state.u.box_grid();
  bool barrier = false;
  const int nz = bg.n[2];
  const std::int64_t slab = bg.points() / nz;
  const double acc = par::ordered_sum(nz, [&](std::int64_t iz) {
    double s = 0.0;
    for (std::int64_t p = iz * slab; p < (iz + 1) * slab; ++p) {
      if (!mask.inside[p]) continue;
      const double det = state.det_grad.at(p, 0);
      if (det <= 0.0) {
        barrier = true;
        continue;
      }
      const int ix = int(p % bg.n[0]);
      const int iy = int((p / bg.n[0]) % bg.n[1]);
      s += spec.W(bg.node(ix, iy, int(iz)) / state.eps, state.grad_w.mat3_at(p),
                  m_comp.at(p));
    }
    return s;
  });
  return barrier ? kInf : acc * bg.cell_volume();
}

EnergyBreakdown stored_energy(const DeformationState& state, const DensitySpec& spec,
                              const Magnetization& m_comp, const Field& grad_m_comp,
                              const DomainMask& mask, const StrayEval& stray) {
  return assemble_energy(*state.u.box_grid(), mask, spec, state.eps, state.scale,
                         Mode::stored, field_reader(state, m_comp, grad_m_comp), stray,
                         "G");
}

EnergyBreakdown rescaled_energy(const DeformationState& state, const DensitySpec& spec,
                                const Magnetization& m_comp, const Field& grad_m_comp,
                                const DomainMask& mask, const StrayEval& stray) {
  return assemble_energy(*state.u.box_grid(), mask, spec, state.eps, state.scale,
                         Mode::rescaled, field_reader(state, m_comp, grad_m_comp), stray,
                         "Feps");
}

EnergyBreakdown delta_rescaled_energy(const DeformationState& state, const DensitySpec& spec,
                                      const Magnetization& m_comp, const Field& grad_m_comp,
                                      const DomainMask& mask, const StrayEval& stray) {
  EnergyBreakdown out =
      assemble_energy(*state.u.box_grid(), mask, spec, state.eps, state.scale,
                      Mode::rescaled, field_reader(state, m_comp, grad_m_comp), stray,
                      "Fdelta");
  return out;
}

EnergyBreakdown linearized_energy(const Field& u, const Field& grad_u,
                                  const Magnetization& m, const Field& grad_m,
                                  const DensitySpec& spec, double eps,
                                  const DomainMask& mask, const StrayEval& stray) {
  const BoxGrid* bg = u.box_grid();
  if (!bg) throw std::invalid_argument("linearized_energy: box-grid fields expected");
  auto at = [&](int, int, int, std::int64_t p, const Vec3&) -> PointData {
    return {grad_u.mat3_at(p), m.at(p), grad_m.mat3_at(p)};
  };
  return assemble_energy(*bg, mask, spec, eps, 1.0, Mode::linearized, at, stray, "Glin");
}

EnergyBreakdown rescaled_energy_stream(const BoxGrid& box, const DomainMask& mask,
                                       const DensitySpec& spec, double eps, double scale,
                                       const PointSampler& at, const StrayEval& stray,
                                       const char* tag) {
  return assemble_energy(box, mask, spec, eps, scale, Mode::rescaled, at, stray, tag);
}

EnergyBreakdown linearized_energy_stream(const BoxGrid& box, const DomainMask& mask,
                                         const DensitySpec& spec, double eps,
                                         const PointSampler& at, const StrayEval& stray) {
  return assemble_energy(box, mask, spec, eps, 1.0, Mode::linearized, at, stray, "Glin");
}

EnergyBreakdown homogenized_energy(const Field& grad_u, const Magnetization& m,
                                   const Field& grad_m, const DensitySpec& spec,
                                   const HomogenizedElastic& q_hom,
                                   const HomogenizedExchange& t_hom,
                                   const DomainMask& mask, const StrayEval& stray) {
  const BoxGrid* bg = grad_u.box_grid();
  if (!bg) throw std::invalid_argument("homogenized_energy: box-grid fields expected");
  EnergyBreakdown out;
  out.tag = "Fhom";

  const int nz = bg->n[2];
  const std::int64_t slab = bg->points() / nz;
  std::vector<double> el(std::size_t(nz), 0.0), ex(std::size_t(nz), 0.0);
  Field m_field(*bg, Rank::vector3);
  par::parallel_for(nz, [&](std::int64_t iz) {
    double e = 0.0, x = 0.0;
    for (std::int64_t p = iz * slab; p < (iz + 1) * slab; ++p) {
      if (!mask.inside[p]) continue;
      const Vec3 mv = m.at(p);
      m_field.set_vec3(p, mv);
      e += 0.5 * q_hom(grad_u.mat3_at(p), mv);
      x += t_hom(grad_m.mat3_at(p));
    }
    el[std::size_t(iz)] = e;
    ex[std::size_t(iz)] = x;
  });
  for (int iz = 0; iz < nz; ++iz) {
    out.elastic += el[std::size_t(iz)];
    out.exchange += ex[std::size_t(iz)];
  }
  out.elastic *= bg->cell_volume();
  out.exchange *= bg->cell_volume();
  out.magnetostatic =
      solve_stray_field(m_field, {spec.mu0, stray.pad_factor, false, false}).energy;
  out.finish();
  return out;
}

}  // namespace mel
