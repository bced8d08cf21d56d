#include "mimoscatter/field.hpp"

#include <cmath>

namespace mimoscatter {

namespace {
// Evaluation closer than this fraction of the cell radius engages the
// self rule instead of the raw (singular) kernel.
constexpr double kSelfFrac = 1e-9;
}  // namespace

CVec3 KernelField::value(const Vec3& x) const {
  CVec3 out = CVec3::Zero();
  for (const Source& s : sources_) {
    const double d = (x - s.pos).norm();
    if (s.cell > 0.0) {
      const double a = std::cbrt(3.0 * s.cell / (4.0 * constants::pi));
      if (d <= kSelfFrac * a || d == 0.0) {
        out += (g0_ball_mean(a, kappa_) / s.cell) * s.strength;
        ++self_rule_hits_;
        continue;
      }
    }
    out += g0_scalar(x, s.pos, kappa_) * s.strength;
  }
  return out;
}

CMat3 KernelField::jacobian(const Vec3& x) const {
  CMat3 out = CMat3::Zero();
  for (const Source& s : sources_) {
    const double d = (x - s.pos).norm();
    if (s.cell > 0.0) {
      const double a = std::cbrt(3.0 * s.cell / (4.0 * constants::pi));
      if (d <= kSelfFrac * a || d == 0.0) {
        ++self_rule_hits_;  // gradient self-contribution vanishes by symmetry
        continue;
      }
    }
    // d A_r / d x_c = s_r * d g / d x_c
    out += s.strength * g0_grad1(x, s.pos, kappa_).transpose();
  }
  return out;
}

}  // namespace mimoscatter
