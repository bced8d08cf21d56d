// scatter.hpp — block Lippmann-Schwinger system, direct and Born solvers
#pragma once

#include <Eigen/LU>
#include <memory>
#include <string>
#include <vector>

#include "mimoscatter/operators.hpp"

namespace mimoscatter {

/// Diagnostics of one block solve.
struct SolveReport {
  int system_size = 0;
  double condition_estimate = 0.0;
  double contraction_estimate = 0.0;     // spectral radius proxy of M_o (Id+M_d)^-1
  std::vector<double> born_order_norms;  // per-order increment norms
  bool near_singular = false;
  std::string note;
};

/// Weighted point sources feeding a solve (current samples, annulus data...).
struct SourceTerm {
  std::vector<Vec3> points;
  std::vector<double> weights;
  std::vector<CVec3> values;  // densities

  static SourceTerm from_current(const SourceCurrent::Samples& s) {
    return SourceTerm{s.points, s.weights, s.values};
  }
  static SourceTerm from_sample(const FieldSample& f, const std::vector<double>& w) {
    return SourceTerm{f.points, w, f.values};
  }
};

/// Discretized M_ik = W_i R0 chi_k over one set of groups (one group per
/// region). Holds the factorized Id + M and the per-group diagonal factors
/// used by the Born series.
class BlockSystem {
 public:
  BlockSystem(const SceneLayout& scene, const Frequency& f, const std::vector<int>& regionIdx,
              int quad_level);

  const SceneLayout& scene() const { return *scene_; }
  const Frequency& frequency() const { return f_; }
  cplx kappa() const { return f_.kappa(); }
  int group_count() const { return static_cast<int>(groups_.size()); }
  const CollocationSet& group_set(int g) const { return groups_[static_cast<std::size_t>(g)]; }
  const CollocationSet& all_points() const { return all_; }
  int region_of_group(int g) const { return regionIdx_[static_cast<std::size_t>(g)]; }
  Eigen::Index offset(int g) const { return offsets_[static_cast<std::size_t>(g)]; }
  Eigen::Index dim() const { return dim_; }

  const MatrixXcd& m_matrix() const { return M_; }        // the blocks, no identity
  const MatrixXcd& system_matrix() const { return S_; }   // Id + M
  const Eigen::PartialPivLU<MatrixXcd>& lu() const;       // factor of Id + M

  /// RHS column J_N W R0 applied to a source term: entries
  /// [W rho](y_q) with rho = R0 src.
  MatrixXcd rhs_from_source(const SourceTerm& src) const;
  /// RHS column with analytic point-kernel sources at `y` (3 columns).
  MatrixXcd rhs_from_point_kernel(const Vec3& y) const;
  /// RHS against the source-derivative kernel grad_y g(., y) . dir.
  MatrixXcd rhs_from_point_kernel_dy(const Vec3& y, const Vec3& dir) const;

  double condition_estimate() const;
  double contraction_estimate(int power_steps = 20) const;

  /// Born partial-sum solve: X_K = sum_{i<=K} (-1)^i (D^-1 O)^i D^-1 B.
  /// Records per-order increment norms into `report`.
  MatrixXcd born_solve(const MatrixXcd& B, int max_order, SolveReport* report) const;

  /// One region per group w of the perturbation for group g.
  const PerturbationW& w_of(int g) const { return ws_[static_cast<std::size_t>(g)]; }

 private:
  const SceneLayout* scene_;
  Frequency f_;
  std::vector<int> regionIdx_;
  std::vector<CollocationSet> groups_;
  std::vector<PerturbationW> ws_;
  CollocationSet all_;
  std::vector<Eigen::Index> offsets_;
  Eigen::Index dim_ = 0;
  MatrixXcd M_, S_;
  mutable std::unique_ptr<Eigen::PartialPivLU<MatrixXcd>> lu_;
  mutable std::vector<std::unique_ptr<Eigen::PartialPivLU<MatrixXcd>>> diag_lu_;

  void ensure_diag_factors() const;
};

enum class SolveMode { Direct, Born };

/// Scattering solution: the solved coupling applied to concrete sources.
class ScatterSolution {
 public:
  ScatterSolution(std::shared_ptr<const BlockSystem> system, SolveMode mode, int born_order,
                  SolveReport report);

  const BlockSystem& system() const { return *system_; }
  const SolveReport& report() const { return report_; }
  SolveMode mode() const { return mode_; }
  int born_order() const { return born_order_; }

  /// Solve the block system for this source (direct or Born per mode).
  VectorXcd coupling_for(const SourceTerm& src, SolveReport* born_report = nullptr) const;

  /// Kernel representation of A = R(z) src.
  KernelField field(const SourceTerm& src) const;

  /// Dense coupling block A_nm as a kernel-density table (3x3 blocks per
  /// collocation pair), consistent with R = R0 - sum R0 chi_n A_nm chi_m R0.
  MatrixXcd coupling_block(int n, int m) const;

  /// Discrete full-kernel solution operator on the collocation carrier:
  /// D = G_w (Id + M)^-1 maps source values to field values.
  MatrixXcd solution_operator() const;

 private:
  std::shared_ptr<const BlockSystem> system_;
  SolveMode mode_;
  int born_order_;
  SolveReport report_;
};

/// Direct dense solve (spec: solve_full). Throws on near-singular systems,
/// naming the frequency.
ScatterSolution solve_full(std::shared_ptr<const BlockSystem> system);

/// Born / multiple-scattering solution (spec: born_series). Warns (via
/// report note) when the contraction estimate is >= 1.
ScatterSolution born_series(std::shared_ptr<const BlockSystem> system, int max_order);

/// Per-scatterer T-operator data: factor of Id_n + M_nn and the composite
/// T_n R0 on the carrier (spec: t_single).
struct TSingle {
  CollocationSet carrier;
  MatrixXcd m_nn;
  MatrixXcd t_r0;  // (Id + M_nn)^-1 M_nn
};
TSingle t_single(const SceneLayout& scene, const Frequency& f, int regionIdx, int quad_level);

/// Field of the solved resolvent applied to a source, evaluated lazily via
/// the returned kernel representation (spec: resolvent_field).
KernelField resolvent_field(const ScatterSolution& sol, const SourceTerm& src);

/// Convenience builders.
std::shared_ptr<BlockSystem> build_system(const SceneLayout& scene, const Frequency& f,
                                          const RoleMask& mask, int quad_level);
inline std::shared_ptr<BlockSystem> build_full_system(const SceneLayout& scene, const Frequency& f,
                                                      int quad_level) {
  return build_system(scene, f, RoleMask::all(), quad_level);
}
/// Subsystem resolvent for one role (spec: subsystem_resolvent).
ScatterSolution subsystem_resolvent(const SceneLayout& scene, const Frequency& f, Role which,
                                    int quad_level);

/// Free-space "solution" (no perturbation): R = R0.
ScatterSolution free_resolvent(const SceneLayout& scene, const Frequency& f);

/// Adjoint-built discrete system of (H~_{-omega} - conj z): blocks are the
/// weighted conjugate transposes of the forward blocks, so the discrete
/// resolvent identity holds to factorization roundoff.
struct AdjointSystem {
  MatrixXcd s_tilde;   // Id + W^-1 M^H W
  MatrixXcd g_tilde;   // incoming-kernel G_w, equals W^-1 G_w^H W
  Eigen::PartialPivLU<MatrixXcd> lu;
  /// D~ = (Id + M~)^-1 G~_w, the solution operator of the adjoint system.
  MatrixXcd solution_operator() const { return lu.solve(g_tilde); }
};
AdjointSystem build_adjoint_system(const BlockSystem& fwd);

/// Discrete G_w of a system (kernel values times column weights, self rule
/// on the diagonal).
MatrixXcd kernel_matrix(const BlockSystem& sys);

}  // namespace mimoscatter
