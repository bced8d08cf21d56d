// decouple.hpp — cutoff commutators, Lemma-1/2 factorizations, shell
// reduction and the decoupled transfer matrix
#pragma once

#include <array>

#include "mimoscatter/channel.hpp"
#include "mimoscatter/scatter.hpp"

namespace mimoscatter {

/// Annulus collocation sets carrying the cutoff-derivative data.
struct AnnulusSets {
  CollocationSet t_side;  // r-w <= |x| <= r
  CollocationSet r_side;  // r-w <= |x-e| <= r
};
AnnulusSets build_annuli(const SceneLayout& scene, int quad_level);

enum class CommKind { KT, KM, KR, KtT, KtM, KtR };

/// K-kind commutators [-Delta, J](H_side - z)^-1 chi_side applied to a
/// source, tabulated on the matching annulus; Kt-kind commutators
/// chi_side (H_side - z)^-1 [Delta, J] applied to annulus data, returned as
/// a kernel field (spec: commutator_apply).
FieldSample commutator_apply(CommKind kind, const SceneLayout& scene, const Frequency& f,
                             int quad_level, const SourceTerm& input);
KernelField commutator_apply_tilde(CommKind kind, const SceneLayout& scene, const Frequency& f,
                                   int quad_level, const VectorField& input);

/// Both sides of the exact factorization
///   chi_supp(W_R) (H-z)^-1 chi_T =
///   chi_supp(W_R) Kt_R . chi_Ra (H-z)^-1 chi_Ta . K_T chi_T
/// evaluated on deterministic probes inside the receiver (spec:
/// lemma1_factorized). `env_middle` replaces the middle full resolvent by
/// H_M (the Lemma-2 approximation).
struct Lemma1Result {
  FieldSample direct;      // LHS, one full solve
  FieldSample factorized;  // RHS chain
  double rel_discrepancy = 0.0;
};
Lemma1Result lemma1_factorized(const SceneLayout& scene, int n, const Frequency& f,
                               int quad_level, bool env_middle = false);

/// Receiver field of the Lemma-2 decoupled chain (middle resolvent = H_M).
KernelField decoupled_vector_potential(const SceneLayout& scene, int n, const Frequency& f,
                                       int quad_level);
/// Same chain with the full resolvent in the middle (the Lemma-1 RHS).
KernelField factorized_vector_potential(const SceneLayout& scene, int n, const Frequency& f,
                                        int quad_level);

/// Value and radial-derivative traces of a side Green kernel on the shell
/// of radius r (spec: shell_traces). blocks[node][src] = {d_rho G, G}.
struct ShellTrace {
  Role side = Role::Transmitter;
  AngularGrid grid;
  Vec3 anchor = Vec3::Zero();
  double radius = 0.0;
  std::vector<Vec3> src_points;
  std::vector<std::vector<std::array<CMat3, 2>>> blocks;
};
ShellTrace shell_traces(Role side, const SceneLayout& scene, const Frequency& f,
                        const AngularGrid& grid, int quad_level);

/// Radiation 6-vectors of Theorem 1 (spec: GVector). Block 0 carries the
/// radial-derivative trace, block 1 the value trace.
struct GVector {
  int antennaIndex = 0;
  std::vector<std::array<CVec3, 2>> per_node;
};
GVector g_vector_tx(const SceneLayout& scene, int n, const Frequency& f, const AngularGrid& grid,
                    int quad_level);
GVector g_vector_rx(const SceneLayout& scene, int m, const Frequency& f, const AngularGrid& grid,
                    int quad_level);

/// Environment kernel middle factor of Theorem 1 between the two shells,
/// as four per-node-pair 3x3 blocks (value, source-derivative,
/// eval-derivative, mixed). `free_kernel` drops the scattering correction.
struct MidSpreadTable {
  AngularGrid grid_r, grid_t;
  // [nodeR][nodeT] -> 2x2 of 3x3 packed as M[a][b]
  std::vector<std::vector<std::array<std::array<CMat3, 2>, 2>>> blocks;
};
MidSpreadTable mid_spread(const SceneLayout& scene, const Frequency& f, const AngularGrid& grid,
                          int quad_level, bool free_kernel);

/// Theorem-1 decoupled transfer matrix (spec: decoupled_transfer).
TransferMatrix decoupled_transfer(const SceneLayout& scene, const Frequency& f,
                                  const AngularGrid& grid, int quad_level,
                                  bool free_kernel = false);

/// Contraction of precomputed g-vectors with a mid-spread table.
MatrixXcd contract_transfer(const std::vector<GVector>& g_rx, const MidSpreadTable& mid,
                            const std::vector<GVector>& g_tx, double enclosure_radius);

/// Discrete adjoint identity of the resolvent (spec: reciprocity_check):
/// the weighted conjugate transpose of the (-omega, conj z) solution
/// operator against the (omega, z) solution operator, per group set.
struct ReciprocityReport {
  struct Entry {
    std::string groups;
    double rel_mismatch = 0.0;
  };
  std::vector<Entry> entries;
  double max_rel_mismatch = 0.0;
};
ReciprocityReport reciprocity_check(const SceneLayout& scene, const Frequency& f, int quad_level);

}  // namespace mimoscatter
