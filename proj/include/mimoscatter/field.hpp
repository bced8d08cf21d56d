// field.hpp — kernel-represented vector fields and field samples
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mimoscatter/greens.hpp"

namespace mimoscatter {

/// Minimal interface the operators need from a field: values and first
/// derivatives at arbitrary points.
class VectorField {
 public:
  virtual ~VectorField() = default;
  virtual CVec3 value(const Vec3& x) const = 0;
  /// Jacobian with entries J(r,c) = d value_r / d x_c.
  virtual CMat3 jacobian(const Vec3& x) const = 0;

  cplx divergence(const Vec3& x) const { return jacobian(x).trace(); }
  CVec3 curl(const Vec3& x) const {
    const CMat3 Jm = jacobian(x);
    return CVec3(Jm(2, 1) - Jm(1, 2), Jm(0, 2) - Jm(2, 0), Jm(1, 0) - Jm(0, 1));
  }
};

/// Field built from closed-form callables (tests, analytic probes).
class AnalyticField final : public VectorField {
 public:
  using ValueFn = std::function<CVec3(const Vec3&)>;
  using JacFn = std::function<CMat3(const Vec3&)>;
  AnalyticField(ValueFn v, JacFn j) : v_(std::move(v)), j_(std::move(j)) {}
  CVec3 value(const Vec3& x) const override { return v_(x); }
  CMat3 jacobian(const Vec3& x) const override { return j_(x); }

 private:
  ValueFn v_;
  JacFn j_;
};

/// Superposition of weighted free-kernel point sources,
///   A(x) = sum_j g(x, p_j) s_j ,   s_j = w_j * density_j.
/// This is the representation every resolvent output lives in; derivatives
/// are analytic. Evaluation exactly at a source point engages the
/// self-cell mean rule (value) and drops the gradient contribution.
class KernelField final : public VectorField {
 public:
  struct Source {
    Vec3 pos;
    CVec3 strength;     // w * density
    double cell = 0.0;  // cell volume for the self rule; 0 = point source
  };

  KernelField(cplx kappa) : kappa_(kappa) {}

  void add_source(const Vec3& pos, const CVec3& strength, double cell = 0.0) {
    sources_.push_back({pos, strength, cell});
  }
  void reserve(std::size_t n) { sources_.reserve(n); }
  const std::vector<Source>& sources() const { return sources_; }
  cplx kappa() const { return kappa_; }

  CVec3 value(const Vec3& x) const override;
  CMat3 jacobian(const Vec3& x) const override;
  /// True if any evaluation so far hit a source cell (self rule engaged).
  bool self_rule_engaged() const { return self_rule_hits_ > 0; }

 private:
  cplx kappa_;
  std::vector<Source> sources_;
  mutable long self_rule_hits_ = 0;
};

/// Complex 3-vector values tabulated on points (spec: FieldSample).
struct FieldSample {
  enum class Kind { A, E, H };
  Kind kind = Kind::A;
  std::vector<Vec3> points;
  std::vector<CVec3> values;
  double omega = 0.0;

  double max_norm() const {
    double m = 0.0;
    for (const auto& v : values) m = std::max(m, v.norm());
    return m;
  }
};

}  // namespace mimoscatter
