// channel.hpp — physical fields, exact transfer matrix, residuals, capacity
#pragma once

#include <string>
#include <vector>

#include "mimoscatter/scatter.hpp"

namespace mimoscatter {

/// M x N complex matrix of output/input current ratios at one frequency.
struct TransferMatrix {
  MatrixXcd entries;
  double omega = 0.0;
  enum class Mode { Full, Decoupled, SpreadFarfield } mode = Mode::Full;

  static const char* mode_name(Mode m);
};

/// Vector potential of antenna n through the given solution
/// (spec: vector_potential). The returned kernel field evaluates anywhere.
KernelField vector_potential(const SceneLayout& scene, const ScatterSolution& sol, int n);

/// E = -j mu0 w A + grad((j eps w + sigma)^-1 div A).
/// The outer gradient uses a 7-point probe stencil by default (step =
/// stencil_cell/4, auto-shrinking near kernel sources); the analytic route
/// contracts kernel Hessians instead and is exact off-support.
class EFieldEvaluator {
 public:
  EFieldEvaluator(const KernelField& A, const SceneLayout& scene, const Frequency& f,
                  double stencil_cell, bool analytic = false);

  CVec3 operator()(const Vec3& x) const;
  CVec3 a_value(const Vec3& x) const { return A_->value(x); }

 private:
  const KernelField* A_;
  const SceneLayout* scene_;
  Frequency f_;
  double step_;
  bool analytic_;

  cplx beta(const Vec3& x) const;          // (j eps w + sigma)^-1
  CVec3 grad_beta(const Vec3& x) const;
  cplx u(const Vec3& x) const;             // beta * div A
  CVec3 grad_u_stencil(const Vec3& x) const;
  CVec3 grad_u_analytic(const Vec3& x) const;
};

/// H = curl A from analytic kernel derivatives (spec: h_field).
FieldSample h_field(const KernelField& A, const std::vector<Vec3>& points, const Frequency& f);
FieldSample e_field(const KernelField& A, const SceneLayout& scene, const Frequency& f,
                    const std::vector<Vec3>& points, double stencil_cell, bool analytic = false);

/// Precomputed linear functional s -> contribution of one kernel source to
/// int_{S_m} sigma_R^(m) E . dS. Rows are cached per source location, so
/// transfer entries cost one dot product per source.
class SectionFunctional {
 public:
  SectionFunctional(const SceneLayout& scene, const Frequency& f, int receiver,
                    int n_radial = 8, int n_angular = 16);

  /// 1x3 row f(y): contribution of a source g(., y) s is f(y) . s.
  CVec3 row(const Vec3& y) const;
  /// Row against the source-derivative kernel x -> (grad_y g(x,y) . dir) s.
  CVec3 row_dy(const Vec3& y, const Vec3& dir) const;
  cplx apply(const KernelField& A) const;
  int receiver() const { return receiver_; }

 private:
  const SceneLayout* scene_;
  Frequency f_;
  int receiver_;
  int region_;
  DiscQuadrature disc_;
  std::vector<double> sigma_;  // sigma_R^(m) at disc points
  double step_;
};

/// Exact transfer matrix via the full solve (spec: transfer_matrix,
/// mode=full). feed currents scale out; entries are pure ratios.
TransferMatrix transfer_matrix(const SceneLayout& scene, const Frequency& f, int quad_level,
                               SolveReport* report = nullptr);

/// Finite-difference residuals of the five frequency-domain equations at
/// probe points, evaluated at steps h and h/2 for a Richardson order check
/// (spec: maxwell_residual).
struct MaxwellResidualReport {
  struct Equation {
    std::string name;
    double res_h = 0.0;
    double res_h2 = 0.0;
    double order = 0.0;  // log2(res_h / res_h2)
  };
  std::vector<Equation> equations;
  double scale = 0.0;  // field magnitude used for relative residuals
  double max_relative_residual = 0.0;
};

MaxwellResidualReport maxwell_residual(const SceneLayout& scene, const KernelField& A,
                                       const Frequency& f, const std::vector<Vec3>& probes,
                                       double h);

/// Shannon capacity with equal power allocation:
/// sum_i log2(1 + snr * lambda_i / N), lambda_i eigenvalues of H^H H.
double capacity(const TransferMatrix& H, double snr);
double capacity(const MatrixXcd& H, double snr);

}  // namespace mimoscatter
