// spread.hpp — far-scatterer machinery: scattering kernel t_M, spread
// matrix A(Omega_R, Omega_T), h-vectors and the far-field transfer matrix
#pragma once

#include <memory>

#include "mimoscatter/decouple.hpp"

namespace mimoscatter {

/// Discrete scattering kernel of the environment: continuous part tau on
/// collocation pairs plus diagonal lumps theta (the delta part), with the
/// propagation phases absorbed so the far-field kernel identity holds
/// verbatim (spec: ScatteringKernel).
class ScatteringKernel {
 public:
  ScatteringKernel(const SceneLayout& scene, const Frequency& f, int quad_level);

  bool empty() const { return n_ == 0; }
  std::size_t size() const { return n_; }
  const CollocationSet& points() const { return pts_; }
  double s_t(std::size_t q) const { return st_[q]; }
  double s_r(std::size_t p) const { return sr_[p]; }
  const Vec3& omega_t(std::size_t q) const { return ot_[q]; }
  const Vec3& omega_r(std::size_t p) const { return or_[p]; }

  /// tau(y_p, y_q) (continuous part, kernel density); p == q uses the
  /// self-regularized diagonal.
  CMat3 tau(std::size_t p, std::size_t q) const;
  /// theta(y_p) per-point 3x3 lump (delta part).
  CMat3 theta(std::size_t p) const;
  /// solved table including the diagonal delta lump: t[p][q] such that
  /// sums carry weight w_p only (the column weight lives in the solve).
  const CMat3& solved(std::size_t p, std::size_t q) const {
    return table_[p * n_ + q];
  }

  /// Continuous tau at arbitrary scatterer-support points (ray sampling).
  CMat3 tau_at(const Vec3& y, const Vec3& yprime) const;

  /// Far-field sanity: minimal anchor distance over collocation / r.
  double min_distance_over_r() const { return min_dist_over_r_; }
  bool farfield_weak() const { return min_dist_over_r_ < 10.0; }

  const SceneLayout& scene() const { return *scene_; }
  const Frequency& frequency() const { return f_; }

 private:
  const SceneLayout* scene_;
  Frequency f_;
  std::shared_ptr<BlockSystem> env_;
  CollocationSet pts_;
  std::size_t n_ = 0;
  std::vector<double> st_, sr_;
  std::vector<Vec3> ot_, or_;
  std::vector<CMat3> ct_;      // far-source factor C_T per point
  std::vector<CMat3> table_;   // (Id+M)^-1 blockdiag(C_T) with phases
  double min_dist_over_r_ = 0.0;
  PerturbationW w_env_;

  CMat3 c_t_at(const Vec3& y) const;
};

std::shared_ptr<ScatteringKernel> scattering_kernel(const SceneLayout& scene, const Frequency& f,
                                                    int quad_level);

/// Angular table of the 6x6 spread matrix, with the radial-integration
/// metadata and the kernel handle used for the delta part
/// (spec: SpreadTable).
struct SpreadTable {
  AngularGrid grid_r, grid_t;
  std::vector<CMat3> radial_blocks;  // per (nodeR, nodeT): the shared 3x3 block
  std::vector<std::vector<std::pair<double, double>>> s_support_r, s_support_t;
  std::shared_ptr<const ScatteringKernel> kernel;
  double enclosure_radius = 0.0;

  const CMat3& block(std::size_t ri, std::size_t ti) const {
    return radial_blocks[ri * grid_t.size() + ti];
  }
  /// Full 6x6 matrix at one angular pair (four identical 3x3 blocks).
  Eigen::Matrix<cplx, 6, 6> block66(std::size_t ri, std::size_t ti) const;
};

/// Radial ray integration of tau over the scatterer supports
/// (spec: spread_matrix). Uses adaptive Simpson per intersection interval.
SpreadTable spread_matrix(std::shared_ptr<const ScatteringKernel> kernel,
                          const SceneLayout& scene, const Frequency& f, const AngularGrid& grid,
                          double rel_tol = 1e-8);

/// Direction-indexed 6-vectors absorbing the phase and jk0(x^.Omega)
/// factors of the far-field reduction (spec: HVector).
struct HVector {
  int antennaIndex = 0;
  AngularGrid grid;
  double radius = 0.0;
  cplx kappa;
  std::vector<CVec3> f1, f2;  // g-vector blocks tabulated on the grid

  /// (h1, h2) at an arbitrary direction.
  std::array<CVec3, 2> evaluate(const Vec3& direction) const;
  CVec3 evaluate_sum(const Vec3& direction) const {
    const auto h = evaluate(direction);
    return h[0] + h[1];
  }
};

HVector h_vector(Role side, const GVector& g, const Frequency& f, const AngularGrid& grid,
                 double enclosure_radius);

/// Far-field scattering contribution to the transfer matrix
/// (spec: scatt_transfer). Computed from the kernel's collocation sums
/// (the discrete realization of the double angular integral against the
/// spread matrix); reports a crude O(1/D_M^3) bound.
struct ScattTransferResult {
  TransferMatrix transfer;
  double error_bound = 0.0;
};
ScattTransferResult scatt_transfer(const SpreadTable& table, const std::vector<HVector>& h_rx,
                                   const std::vector<HVector>& h_tx, const Frequency& f);

/// Diagnostic: the same contraction through the angular table only
/// (tau ray-integrals plus the collocation delta part).
MatrixXcd scatt_transfer_from_table(const SpreadTable& table, const std::vector<HVector>& h_rx,
                                    const std::vector<HVector>& h_tx);

}  // namespace mimoscatter
