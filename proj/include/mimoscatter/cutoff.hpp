// cutoff.hpp — smooth radial cutoffs J_T, J_R, J_M and their derivatives
#pragma once

#include <vector>

#include "mimoscatter/geom.hpp"

namespace mimoscatter {

struct SceneLayout;

enum class CutoffFlavor { JT, JR, JM };

struct CutoffEval {
  double value = 0.0;
  Vec3 grad = Vec3::Zero();
  double laplacian = 0.0;
};

/// Radial quintic-smoothstep ramp: 1 for |x-center| <= r-w, 0 for
/// |x-center| >= r, C^2 across the annulus. J_M is the complementary
/// product over antenna supports (1 on free space, 0 on every antenna
/// support); its per-antenna ramps live on thin shells just outside the
/// supports, which the layout keeps pairwise disjoint.
class CutoffFunction {
 public:
  /// J_T / J_R ramp about `center` with plateau radius r-w and outer radius r.
  CutoffFunction(CutoffFlavor flavor, const Vec3& center, double r, double w);

  /// J_M for a whole scene (ramps around each antenna region).
  static CutoffFunction make_jm(const SceneLayout& scene);

  CutoffEval eval(const Vec3& x) const;
  CutoffFlavor flavor() const { return flavor_; }

  /// Annulus carrying the derivative support (single-ramp flavors only).
  double inner_radius() const { return r_ - w_; }
  double outer_radius() const { return r_; }
  const Vec3& center() const { return center_; }

 private:
  struct Ramp {
    Vec3 center;
    double inner, outer;  // 1 inside `inner`, 0 outside `outer`
  };

  CutoffFlavor flavor_;
  Vec3 center_ = Vec3::Zero();
  double r_ = 0.0, w_ = 0.0;
  std::vector<Ramp> jm_ramps_;  // J_M only

  static CutoffEval ramp_eval(const Ramp& ramp, const Vec3& x);
};

}  // namespace mimoscatter
