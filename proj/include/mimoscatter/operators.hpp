// operators.hpp — perturbation W, kernel blocks W_i R0 chi_k, commutators
#pragma once

#include "mimoscatter/cutoff.hpp"
#include "mimoscatter/field.hpp"
#include "mimoscatter/scene.hpp"

namespace mimoscatter {

/// First-order perturbation W A = -dk^2 A + (div A) grad ln(k^2) restricted
/// to one group of regions. The adjoint (tilde) structure
/// W~ A = -grad(b . A) - c A shares the coefficient evaluators.
struct PerturbationW {
  const SceneLayout* scene = nullptr;
  RoleMask mask;
  Frequency f{1.0};
  int region = -1;  // >= 0 restricts to a single region inside the mask

  cplx dk2(const Vec3& x) const;
  CVec3 glk2(const Vec3& x) const;
  bool in_support(const Vec3& x) const;

  /// Apply to a field with derivatives: value = -dk2 A + (div A) glk2.
  CVec3 apply(const VectorField& field, const Vec3& x) const;

  /// 3x3 row block of W applied to the kernel column x -> g(x, y) I:
  ///   entry(s,c) = -dk2(x) g d_sc + glk2(x)_s * (d g / d x_c).
  CMat3 row_times_kernel(const Vec3& x, const Vec3& y, cplx kappa) const;

  /// Same with the kernel's y-gradient along `dir` as the column source
  /// (needed for source-side radial derivatives of traces).
  CMat3 row_times_kernel_dy(const Vec3& x, const Vec3& y, const Vec3& dir, cplx kappa) const;
};

PerturbationW make_w(const SceneLayout& scene, const Frequency& f, const RoleMask& mask);

/// Values of W applied to a kernel-represented (or analytic) field at a
/// collocation set (spec: apply_W).
FieldSample apply_W(const PerturbationW& w, const VectorField& field, const CollocationSet& at);

/// Dense block M_ik = W_i R0(z) chi_k between two collocation sets.
/// Rows/cols are 3x the set sizes. The i == k diagonal uses the
/// equal-volume ball mean for the weakly singular kernel value and a
/// vanishing gradient self term.
/// Throws when a self-term correction exceeds half the unit diagonal.
MatrixXcd assemble_block(const PerturbationW& wi, const CollocationSet& rows,
                         const CollocationSet& cols, cplx kappa, bool same_set);

/// [-Delta, J] phi = -(lap J) phi - 2 grad J . grad phi, tabulated at
/// points (K-kind data). sign = +1 gives [Delta, J].
FieldSample commutator_data(const CutoffFunction& cutoff, const VectorField& field,
                            const std::vector<Vec3>& at, double sign);

/// Coefficients of the adjoint perturbation W~ at the flipped frequency:
/// the first-order structure -grad(b . A) - c A with b = grad ln k^2 and
/// c = dk^2 evaluated at the calling frequency. With f = -omega this is the
/// operator whose adjoint is W at +omega.
struct AdjointPerturbation {
  PerturbationW base;  // evaluated at the calling (flipped) frequency

  CVec3 b(const Vec3& x) const { return base.glk2(x); }
  cplx c(const Vec3& x) const { return base.dk2(x); }
  CMat3 db(const Vec3& x) const { return base.scene->hess_log_k2(x, base.f, base.mask); }

  /// 3x3 row block of W~ applied to the kernel column x -> g(x,y) I:
  ///   entry(s,c) = -(d_s b_c) g - b_c (d g/d x_s) - c g d_sc.
  CMat3 row_times_kernel(const Vec3& x, const Vec3& y, cplx kappa) const;
};

AdjointPerturbation adjoint_W(const SceneLayout& scene, const Frequency& f_flipped,
                              const RoleMask& mask);

}  // namespace mimoscatter
