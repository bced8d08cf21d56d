// greens.hpp — free-space Helmholtz kernel, derivatives, far-field form
#pragma once

#include <cmath>
#include <stdexcept>

#include "mimoscatter/geom.hpp"

namespace mimoscatter {

/// One evaluation of the 3x3 matrix kernel. The free kernel is diagonal;
/// grad[c] holds the derivative of `value` with respect to component c of
/// the differentiation argument (first argument unless stated otherwise).
struct GreenEval {
  CMat3 value = CMat3::Zero();
  std::array<CMat3, 3> grad{CMat3::Zero(), CMat3::Zero(), CMat3::Zero()};
  bool has_grad = false;
};

namespace detail {
inline void require_distinct(const Vec3& x, const Vec3& y) {
  if ((x - y).squaredNorm() <= 0.0)
    throw std::domain_error("green kernel: coincident evaluation points");
}
}  // namespace detail

/// Scalar kernel e^{j kappa |x-y|} / (4 pi |x-y|).
inline cplx g0_scalar(const Vec3& x, const Vec3& y, cplx kappa) {
  detail::require_distinct(x, y);
  const double rho = (x - y).norm();
  return std::exp(J * kappa * rho) / (4.0 * constants::pi * rho);
}

/// Gradient of the scalar kernel with respect to x.
inline CVec3 g0_grad1(const Vec3& x, const Vec3& y, cplx kappa) {
  detail::require_distinct(x, y);
  const Vec3 d = x - y;
  const double rho = d.norm();
  const cplx g = std::exp(J * kappa * rho) / (4.0 * constants::pi * rho);
  const cplx radial = g * (J * kappa - 1.0 / rho);
  return radial * (d / rho).cast<cplx>();
}

/// Hessian of the scalar kernel with respect to x (equals -grad_x grad_y).
inline CMat3 g0_hess1(const Vec3& x, const Vec3& y, cplx kappa) {
  detail::require_distinct(x, y);
  const Vec3 d = x - y;
  const double rho = d.norm();
  const Vec3 u = d / rho;
  const cplx g = std::exp(J * kappa * rho) / (4.0 * constants::pi * rho);
  const cplx gp = g * (J * kappa - 1.0 / rho);
  const cplx gpp = gp * (J * kappa - 1.0 / rho) + g / (rho * rho);
  const Mat3 uu = u * u.transpose();
  return gpp * uu.cast<cplx>() + (gp / rho) * (Mat3::Identity() - uu).cast<cplx>();
}

/// Mean of the scalar kernel over a ball of radius a centred at the
/// singular point: int_{B_a} e^{j kappa s}/(4 pi s) dV.
/// Closed form (e^{j kappa a}(1 - j kappa a) - 1)/kappa^2, limit a^2/2.
inline cplx g0_ball_mean(double a, cplx kappa) {
  if (std::abs(kappa) * a < 1e-6) {
    // series: a^2/2 + j kappa a^3/3 - ...
    return cplx(a * a / 2.0, 0.0) + J * kappa * a * a * a / 3.0;
  }
  const cplx e = std::exp(J * kappa * a);
  return (e * (1.0 - J * kappa * a) - 1.0) / (kappa * kappa);
}

/// Free kernel as a 3x3 diagonal matrix, optionally with first derivatives
/// (order 1) or nothing beyond the value (order 0). Order 2 callers use
/// g0_hess1 directly.
inline GreenEval g0(const Vec3& x, const Vec3& y, double k0) {
  GreenEval out;
  out.value = g0_scalar(x, y, cplx(k0, 0.0)) * CMat3::Identity();
  return out;
}

inline GreenEval g0_derivs(const Vec3& x, const Vec3& y, double k0, int order) {
  GreenEval out = g0(x, y, k0);
  if (order >= 1) {
    const CVec3 grad = g0_grad1(x, y, cplx(k0, 0.0));
    for (int c = 0; c < 3; ++c) out.grad[c] = grad[c] * CMat3::Identity();
    out.has_grad = true;
  }
  return out;
}

/// Far-field shell form of the free kernel evaluated between a point
/// r*direction on a shell about `anchor` and a distant point y:
///   e^{j k0 |y-anchor|} e^{-j k0 r direction.unit(y-anchor)} / (4 pi |y-anchor|)
/// Also reports a crude absolute error bound O(|y-anchor|^-2).
struct FarFieldEval {
  cplx value;
  double error_bound;
};

inline FarFieldEval g0_farfield(const Vec3& direction, const Vec3& y, const Vec3& anchor,
                                double k0, double shell_radius) {
  const Vec3 d = y - anchor;
  const double dist = d.norm();
  if (dist <= 10.0 * shell_radius)
    throw std::domain_error("g0_farfield: |y-anchor| must exceed 10*r");
  const Vec3 u = d / dist;
  const cplx phase = std::exp(J * k0 * dist) * std::exp(-J * k0 * shell_radius * direction.dot(u));
  const double bound =
      (k0 * shell_radius * shell_radius / 2.0 + shell_radius) / (4.0 * constants::pi * dist * dist);
  return {phase / (4.0 * constants::pi * dist), bound};
}

}  // namespace mimoscatter
