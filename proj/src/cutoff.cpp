#include "mimoscatter/cutoff.hpp"

#include <cmath>
#include <stdexcept>

#include "mimoscatter/scene.hpp"

namespace mimoscatter {

namespace {

// quintic smoothstep on [0,1]
inline double smooth5(double t) { return t * t * t * (10.0 + t * (-15.0 + 6.0 * t)); }
inline double smooth5_d(double t) {
  const double u = 1.0 - t;
  return 30.0 * t * t * u * u;
}
inline double smooth5_dd(double t) { return 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t); }

}  // namespace

CutoffFunction::CutoffFunction(CutoffFlavor flavor, const Vec3& center, double r, double w)
    : flavor_(flavor), center_(center), r_(r), w_(w) {
  if (flavor == CutoffFlavor::JM)
    throw std::invalid_argument("use CutoffFunction::make_jm for the J_M flavor");
  if (!(r > 0.0 && w > 0.0 && w < r)) throw std::invalid_argument("cutoff: need 0 < w < r");
}

CutoffFunction CutoffFunction::make_jm(const SceneLayout& scene) {
  CutoffFunction jm(CutoffFlavor::JT, Vec3::Zero(), 1.0, 0.5);
  jm.flavor_ = CutoffFlavor::JM;
  jm.jm_ramps_.clear();
  for (const Region& rg : scene.regions) {
    if (rg.role == Role::Scatterer) continue;
    const double a = rg.support_radius();
    jm.jm_ramps_.push_back({rg.center, a, a + 0.5 * scene.cutoff_width});
  }
  // the product-rule shortcut in eval() needs disjoint ramp shells
  for (std::size_t i = 0; i < jm.jm_ramps_.size(); ++i)
    for (std::size_t k = i + 1; k < jm.jm_ramps_.size(); ++k) {
      const auto& a = jm.jm_ramps_[i];
      const auto& b = jm.jm_ramps_[k];
      if ((a.center - b.center).norm() <= a.outer + b.outer)
        throw std::runtime_error("J_M ramps overlap: antennas too close for the cutoff width");
    }
  return jm;
}

CutoffEval CutoffFunction::ramp_eval(const Ramp& ramp, const Vec3& x) {
  CutoffEval out;
  const Vec3 d = x - ramp.center;
  const double rho = d.norm();
  if (rho <= ramp.inner) {
    out.value = 1.0;
    return out;
  }
  if (rho >= ramp.outer) return out;
  const double w = ramp.outer - ramp.inner;
  const double t = (ramp.outer - rho) / w;  // 0 at outer edge, 1 at inner
  out.value = smooth5(t);
  const double dJdrho = -smooth5_d(t) / w;
  const double d2Jdrho2 = smooth5_dd(t) / (w * w);
  out.grad = dJdrho * (d / rho);
  out.laplacian = d2Jdrho2 + 2.0 / rho * dJdrho;
  return out;
}

CutoffEval CutoffFunction::eval(const Vec3& x) const {
  if (flavor_ != CutoffFlavor::JM) return ramp_eval({center_, r_ - w_, r_}, x);

  // J_M = prod (1 - ramp_i); the ramp shells are disjoint, so at most one
  // factor differs from 1 at any point.
  CutoffEval out;
  out.value = 1.0;
  for (const Ramp& ramp : jm_ramps_) {
    const CutoffEval e = ramp_eval(ramp, x);
    if (e.value == 0.0 && e.grad.isZero() && e.laplacian == 0.0) continue;
    out.value *= (1.0 - e.value);
    out.grad -= e.grad;
    out.laplacian -= e.laplacian;
    if (out.value == 0.0) {
      out.grad.setZero();
      out.laplacian = 0.0;
      return out;
    }
  }
  return out;
}

}  // namespace mimoscatter
