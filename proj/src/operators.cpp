#include "mimoscatter/operators.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mimoscatter {

bool PerturbationW::in_support(const Vec3& x) const {
  if (region >= 0) return scene->region(region).contains(x);
  for (const Region& r : scene->regions)
    if (mask.accepts(r.role) && r.contains(x)) return true;
  return false;
}

cplx PerturbationW::dk2(const Vec3& x) const {
  if (region < 0) return scene->delta_k2(x, f, mask);
  const Region& r = scene->region(region);
  if (!r.contains(x)) return 0.0;
  const double k02 = f.k0() * f.k0();
  return r.delta_eps(x) * k02 - J * constants::mu0 * f.omega * r.sigma(x);
}

CVec3 PerturbationW::glk2(const Vec3& x) const {
  if (region < 0) return scene->grad_log_k2(x, f, mask);
  const Region& r = scene->region(region);
  if (!r.contains(x)) return CVec3::Zero();
  const double k02 = f.k0() * f.k0();
  // disjoint supports: the total k^2 equals this region's k^2 here
  const cplx k2 = k02 + dk2(x);
  if (std::abs(k2) < 1e-12 * k02)
    throw std::runtime_error("grad_log_k2: degenerate material in region '" + r.id + "'");
  const CVec3 grad = k02 * r.grad_delta_eps(x).cast<cplx>() -
                     J * constants::mu0 * f.omega * r.grad_sigma(x).cast<cplx>();
  return grad / k2;
}

CVec3 PerturbationW::apply(const VectorField& field, const Vec3& x) const {
  if (!in_support(x)) return CVec3::Zero();
  return -dk2(x) * field.value(x) + field.divergence(x) * glk2(x);
}

CMat3 PerturbationW::row_times_kernel(const Vec3& x, const Vec3& y, cplx kappa) const {
  if (!in_support(x)) return CMat3::Zero();
  const cplx g = g0_scalar(x, y, kappa);
  const CVec3 dg = g0_grad1(x, y, kappa);
  CMat3 out = -dk2(x) * g * CMat3::Identity();
  out.noalias() += glk2(x) * dg.transpose();
  return out;
}

CMat3 PerturbationW::row_times_kernel_dy(const Vec3& x, const Vec3& y, const Vec3& dir,
                                         cplx kappa) const {
  if (!in_support(x)) return CMat3::Zero();
  // derivative of g(x, y) along dir in y; mixed term needs the Hessian
  const CVec3 dg_dy = -g0_grad1(x, y, kappa);  // grad_y g = -grad_x g
  const cplx g_dir = dg_dy.cwiseProduct(dir.cast<cplx>()).sum();
  const CMat3 hess = g0_hess1(x, y, kappa);  // grad_x grad_x g = -grad_x grad_y g
  const CVec3 dgx_dir = -(hess * dir.cast<cplx>());
  CMat3 out = -dk2(x) * g_dir * CMat3::Identity();
  out.noalias() += glk2(x) * dgx_dir.transpose();
  return out;
}

PerturbationW make_w(const SceneLayout& scene, const Frequency& f, const RoleMask& mask) {
  return PerturbationW{&scene, mask, f};
}

FieldSample apply_W(const PerturbationW& w, const VectorField& field, const CollocationSet& at) {
  FieldSample out;
  out.kind = FieldSample::Kind::A;
  out.omega = w.f.omega;
  out.points = at.points;
  out.values.reserve(at.size());
  for (const Vec3& x : at.points) out.values.push_back(w.apply(field, x));
  return out;
}

MatrixXcd assemble_block(const PerturbationW& wi, const CollocationSet& rows,
                         const CollocationSet& cols, cplx kappa, bool same_set) {
  const auto nr = rows.size(), nc = cols.size();
  MatrixXcd block(3 * nr, 3 * nc);
  for (std::size_t p = 0; p < nr; ++p) {
    const Vec3& x = rows.points[p];
    const bool active = wi.in_support(x);
    const cplx dk2 = active ? wi.dk2(x) : cplx(0.0);
    const CVec3 glk = active ? wi.glk2(x) : CVec3(CVec3::Zero());
    for (std::size_t q = 0; q < nc; ++q) {
      CMat3 entry = CMat3::Zero();
      if (active) {
        if (same_set && p == q) {
          // self cell: mean of the kernel over the equal-volume ball,
          // gradient part vanishes by spherical symmetry
          const double wq = cols.weights[q];
          const double a = std::cbrt(3.0 * wq / (4.0 * constants::pi));
          const cplx mean = g0_ball_mean(a, kappa);
          entry = -dk2 * mean * CMat3::Identity();
          if (std::abs(dk2 * mean) > 0.5) {
            std::ostringstream os;
            os << "self-term correction " << std::abs(dk2 * mean)
               << " exceeds 50% of the unit diagonal; refine the grid of region '"
               << cols.regionId << "'";
            throw std::runtime_error(os.str());
          }
        } else {
          const cplx g = g0_scalar(x, cols.points[q], kappa);
          const CVec3 dg = g0_grad1(x, cols.points[q], kappa);
          entry = -dk2 * g * CMat3::Identity();
          entry.noalias() += glk * dg.transpose();
          entry *= cols.weights[q];
        }
      }
      block.block<3, 3>(3 * static_cast<Eigen::Index>(p), 3 * static_cast<Eigen::Index>(q)) = entry;
    }
  }
  return block;
}

FieldSample commutator_data(const CutoffFunction& cutoff, const VectorField& field,
                            const std::vector<Vec3>& at, double sign) {
  FieldSample out;
  out.kind = FieldSample::Kind::A;
  out.points = at;
  out.values.reserve(at.size());
  for (const Vec3& x : at) {
    const CutoffEval c = cutoff.eval(x);
    if (c.laplacian == 0.0 && c.grad.isZero()) {
      out.values.push_back(CVec3::Zero());
      continue;
    }
    const CVec3 v = field.value(x);
    const CMat3 jac = field.jacobian(x);
    // [-Delta, J] phi = -(lap J) phi - 2 (grad J . grad) phi, componentwise
    CVec3 dirderiv = jac * c.grad.cast<cplx>();  // (grad J . grad) phi_s = J_{s,c} gJ_c
    out.values.push_back(sign * (c.laplacian * v + 2.0 * dirderiv));
  }
  return out;
}

AdjointPerturbation adjoint_W(const SceneLayout& scene, const Frequency& f_flipped,
                              const RoleMask& mask) {
  return AdjointPerturbation{make_w(scene, f_flipped, mask)};
}

CMat3 AdjointPerturbation::row_times_kernel(const Vec3& x, const Vec3& y, cplx kappa) const {
  if (!base.in_support(x)) return CMat3::Zero();
  const cplx g = g0_scalar(x, y, kappa);
  const CVec3 dg = g0_grad1(x, y, kappa);
  const CMat3 dB = db(x);
  const CVec3 bb = b(x);
  CMat3 out = -c(x) * g * CMat3::Identity();
  for (int s = 0; s < 3; ++s)
    for (int col = 0; col < 3; ++col) out(s, col) += -dB(s, col) * g - bb(col) * dg(s);
  return out;
}

}  // namespace mimoscatter
