#include "mimoscatter/decouple.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mimoscatter {

namespace {

int annulus_radial_order(int quad_level) { return quad_level + 2; }

CutoffFunction jt_cutoff(const SceneLayout& scene) {
  return CutoffFunction(CutoffFlavor::JT, Vec3::Zero(), scene.enclosure_radius,
                        scene.cutoff_width);
}
CutoffFunction jr_cutoff(const SceneLayout& scene) {
  return CutoffFunction(CutoffFlavor::JR, scene.rx_anchor, scene.enclosure_radius,
                        scene.cutoff_width);
}

SourceTerm annulus_source(const CollocationSet& annulus, const FieldSample& data) {
  return SourceTerm{annulus.points, annulus.weights, data.values};
}

/// Deterministic probes inside the supports of W_R (receiver interiors).
CollocationSet receiver_probes(const SceneLayout& scene) {
  CollocationSet probes;
  for (int idx : scene.regions_with(Role::Receiver)) {
    const Region& r = scene.region(idx);
    probes.append(ball_collocation(r.center, 0.55 * r.support_radius(), 1, r.id));
  }
  return probes;
}

FieldSample evaluate_at(const VectorField& field, const CollocationSet& pts, double omega) {
  FieldSample out;
  out.omega = omega;
  out.points = pts.points;
  out.values.reserve(pts.size());
  for (const Vec3& x : pts.points) out.values.push_back(field.value(x));
  return out;
}

double weighted_rel_error(const FieldSample& ref, const FieldSample& other,
                          const std::vector<double>& w) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ref.values.size(); ++i) {
    num += w[i] * (ref.values[i] - other.values[i]).squaredNorm();
    den += w[i] * ref.values[i].squaredNorm();
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace

AnnulusSets build_annuli(const SceneLayout& scene, int quad_level) {
  const double r = scene.enclosure_radius, w = scene.cutoff_width;
  const int nr = annulus_radial_order(quad_level);
  AnnulusSets out;
  out.t_side = shell_collocation(Vec3::Zero(), r - w, r, nr, "annulus_T");
  out.r_side = shell_collocation(scene.rx_anchor, r - w, r, nr, "annulus_R");
  return out;
}

FieldSample commutator_apply(CommKind kind, const SceneLayout& scene, const Frequency& f,
                             int quad_level, const SourceTerm& input) {
  const AnnulusSets ann = build_annuli(scene, quad_level);
  switch (kind) {
    case CommKind::KT: {
      const ScatterSolution sol = subsystem_resolvent(scene, f, Role::Transmitter, quad_level);
      const KernelField phi = sol.field(input);
      return commutator_data(jt_cutoff(scene), phi, ann.t_side.points, -1.0);
    }
    case CommKind::KR: {
      const ScatterSolution sol = subsystem_resolvent(scene, f, Role::Receiver, quad_level);
      const KernelField phi = sol.field(input);
      return commutator_data(jr_cutoff(scene), phi, ann.r_side.points, -1.0);
    }
    case CommKind::KM: {
      const ScatterSolution sol = subsystem_resolvent(scene, f, Role::Scatterer, quad_level);
      const KernelField phi = sol.field(input);
      // derivative support of J_M: thin shells around the antenna supports
      CollocationSet shells;
      const CutoffFunction jm = CutoffFunction::make_jm(scene);
      for (const Region& rg : scene.regions) {
        if (rg.role == Role::Scatterer) continue;
        const double a = rg.support_radius();
        shells.append(shell_collocation(rg.center, a, a + 0.5 * scene.cutoff_width,
                                        annulus_radial_order(quad_level), rg.id));
      }
      return commutator_data(jm, phi, shells.points, -1.0);
    }
    default:
      throw std::invalid_argument("commutator_apply: K-kind expected, use commutator_apply_tilde");
  }
}

KernelField commutator_apply_tilde(CommKind kind, const SceneLayout& scene, const Frequency& f,
                                   int quad_level, const VectorField& input) {
  const AnnulusSets ann = build_annuli(scene, quad_level);
  switch (kind) {
    case CommKind::KtT: {
      const FieldSample data = commutator_data(jt_cutoff(scene), input, ann.t_side.points, +1.0);
      return subsystem_resolvent(scene, f, Role::Transmitter, quad_level)
          .field(annulus_source(ann.t_side, data));
    }
    case CommKind::KtR: {
      const FieldSample data = commutator_data(jr_cutoff(scene), input, ann.r_side.points, +1.0);
      return subsystem_resolvent(scene, f, Role::Receiver, quad_level)
          .field(annulus_source(ann.r_side, data));
    }
    case CommKind::KtM: {
      const CutoffFunction jm = CutoffFunction::make_jm(scene);
      CollocationSet shells;
      for (const Region& rg : scene.regions) {
        if (rg.role == Role::Scatterer) continue;
        const double a = rg.support_radius();
        shells.append(shell_collocation(rg.center, a, a + 0.5 * scene.cutoff_width,
                                        annulus_radial_order(quad_level), rg.id));
      }
      const FieldSample data = commutator_data(jm, input, shells.points, +1.0);
      return subsystem_resolvent(scene, f, Role::Scatterer, quad_level)
          .field(SourceTerm{shells.points, shells.weights, data.values});
    }
    default:
      throw std::invalid_argument("commutator_apply_tilde: Kt-kind expected");
  }
}

namespace {

/// The shared three-stage chain: Kt_R . middle . K_T applied to antenna n.
KernelField chain_vector_potential(const SceneLayout& scene, int n, const Frequency& f,
                                   int quad_level, bool full_middle) {
  const AnnulusSets ann = build_annuli(scene, quad_level);
  const SourceCurrent cur = normalized_current(n, scene);
  const SourceTerm src = SourceTerm::from_current(cur.sample());

  // stage 1: a_T = [-Delta, J_T] (H_T - z)^-1 J_in on the T annulus
  const ScatterSolution solT = subsystem_resolvent(scene, f, Role::Transmitter, quad_level);
  const KernelField phiT = solT.field(src);
  const FieldSample aT = commutator_data(jt_cutoff(scene), phiT, ann.t_side.points, -1.0);

  // stage 2: middle resolvent between the annuli
  const RoleMask middle_mask = full_middle ? RoleMask::all() : RoleMask::only(Role::Scatterer);
  const ScatterSolution middle = solve_full(build_system(scene, f, middle_mask, quad_level));
  const KernelField psi = middle.field(annulus_source(ann.t_side, aT));

  // stage 3: Kt_R takes the annulus data to the receiver
  const FieldSample aR = commutator_data(jr_cutoff(scene), psi, ann.r_side.points, +1.0);
  const ScatterSolution solR = subsystem_resolvent(scene, f, Role::Receiver, quad_level);
  return solR.field(annulus_source(ann.r_side, aR));
}

}  // namespace

KernelField decoupled_vector_potential(const SceneLayout& scene, int n, const Frequency& f,
                                       int quad_level) {
  return chain_vector_potential(scene, n, f, quad_level, /*full_middle=*/false);
}

KernelField factorized_vector_potential(const SceneLayout& scene, int n, const Frequency& f,
                                        int quad_level) {
  return chain_vector_potential(scene, n, f, quad_level, /*full_middle=*/true);
}

Lemma1Result lemma1_factorized(const SceneLayout& scene, int n, const Frequency& f,
                               int quad_level, bool env_middle) {
  const CollocationSet probes = receiver_probes(scene);

  const SourceCurrent cur = normalized_current(n, scene);
  const ScatterSolution full = solve_full(build_full_system(scene, f, quad_level));
  const KernelField direct = full.field(SourceTerm::from_current(cur.sample()));
  const KernelField chain = chain_vector_potential(scene, n, f, quad_level, !env_middle);

  Lemma1Result out;
  out.direct = evaluate_at(direct, probes, f.omega);
  out.factorized = evaluate_at(chain, probes, f.omega);
  out.rel_discrepancy = weighted_rel_error(out.direct, out.factorized, probes.weights);
  return out;
}

ShellTrace shell_traces(Role side, const SceneLayout& scene, const Frequency& f,
                        const AngularGrid& grid, int quad_level) {
  if (side == Role::Scatterer) throw std::invalid_argument("shell_traces: side must be T or R");
  ShellTrace out;
  out.side = side;
  out.grid = grid;
  out.radius = scene.enclosure_radius;
  out.anchor = side == Role::Transmitter ? Vec3(Vec3::Zero()) : scene.rx_anchor;

  const auto sys = build_system(scene, f, RoleMask::only(side), quad_level);
  const ScatterSolution sol = solve_full(sys);
  const CollocationSet& pts = sys->all_points();
  out.src_points = pts.points;
  const cplx kappa = f.kappa();

  out.blocks.assign(grid.size(), std::vector<std::array<CMat3, 2>>(pts.size()));

  if (side == Role::Transmitter) {
    // trace kernel G^T(r x^, y): evaluation point on the shell, sources at
    // the region collocation; radial derivative on the evaluation side
    for (std::size_t s = 0; s < pts.size(); ++s) {
      const Vec3& y = pts.points[s];
      const MatrixXcd X = sys->dim() > 0 ? MatrixXcd(sys->lu().solve(sys->rhs_from_point_kernel(y)))
                                         : MatrixXcd(0, 3);
      for (std::size_t nidx = 0; nidx < grid.size(); ++nidx) {
        const Vec3 xhat = grid.nodes[nidx];
        const Vec3 x = out.anchor + out.radius * xhat;
        CMat3 val = g0_scalar(x, y, kappa) * CMat3::Identity();
        const cplx gdir = g0_grad1(x, y, kappa).cwiseProduct(xhat.cast<cplx>()).sum();
        CMat3 der = gdir * CMat3::Identity();
        for (std::size_t p = 0; p < pts.size(); ++p) {
          const CMat3 Xp = X.block<3, 3>(3 * static_cast<Eigen::Index>(p), 0);
          const double wp = pts.weights[p];
          val -= g0_scalar(x, pts.points[p], kappa) * wp * Xp;
          der -= g0_grad1(x, pts.points[p], kappa).cwiseProduct(xhat.cast<cplx>()).sum() * wp * Xp;
        }
        out.blocks[nidx][s] = {der, val};
      }
    }
  } else {
    // trace kernel G^R(x, e + r x^): source on the shell, evaluated at the
    // region collocation; radial derivative on the source side
    for (std::size_t nidx = 0; nidx < grid.size(); ++nidx) {
      const Vec3 xhat = grid.nodes[nidx];
      const Vec3 y = out.anchor + out.radius * xhat;
      MatrixXcd Xv(0, 3), Xd(0, 3);
      if (sys->dim() > 0) {
        Xv = sys->lu().solve(sys->rhs_from_point_kernel(y));
        Xd = sys->lu().solve(sys->rhs_from_point_kernel_dy(y, xhat));
      }
      for (std::size_t s = 0; s < pts.size(); ++s) {
        const Vec3& x = pts.points[s];
        CMat3 val = g0_scalar(x, y, kappa) * CMat3::Identity();
        const cplx gdir = -g0_grad1(x, y, kappa).cwiseProduct(xhat.cast<cplx>()).sum();
        CMat3 der = gdir * CMat3::Identity();
        for (std::size_t p = 0; p < pts.size(); ++p) {
          const double wp = pts.weights[p];
          const cplx gxp = g0_scalar(x, pts.points[p], kappa);
          if (sys->dim() > 0) {
            val -= gxp * wp * Xv.block<3, 3>(3 * static_cast<Eigen::Index>(p), 0);
            der -= gxp * wp * Xd.block<3, 3>(3 * static_cast<Eigen::Index>(p), 0);
          }
        }
        out.blocks[nidx][s] = {der, val};
      }
    }
  }
  return out;
}

GVector g_vector_tx(const SceneLayout& scene, int n, const Frequency& f, const AngularGrid& grid,
                    int quad_level) {
  const ScatterSolution sol = subsystem_resolvent(scene, f, Role::Transmitter, quad_level);
  const KernelField A = vector_potential(scene, sol, n);
  GVector out;
  out.antennaIndex = n;
  out.per_node.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec3 xhat = grid.nodes[i];
    const Vec3 x = scene.enclosure_radius * xhat;
    const CVec3 val = A.value(x);
    const CVec3 der = A.jacobian(x) * xhat.cast<cplx>();
    out.per_node[i] = {der, val};
  }
  return out;
}

GVector g_vector_rx(const SceneLayout& scene, int m, const Frequency& f, const AngularGrid& grid,
                    int quad_level) {
  const auto sysR = build_system(scene, f, RoleMask::only(Role::Receiver), quad_level);
  solve_full(sysR);  // condition gate
  const CollocationSet& pts = sysR->all_points();
  const SectionFunctional fm(scene, f, m);

  // rows of the section functional at the collocation points, cached
  std::vector<CVec3> rows(pts.size());
  for (std::size_t p = 0; p < pts.size(); ++p) rows[p] = fm.row(pts.points[p]);

  GVector out;
  out.antennaIndex = m;
  out.per_node.resize(grid.size());
  const Vec3 e = scene.rx_anchor;
  const double r = scene.enclosure_radius;

  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec3 xhat = grid.nodes[i];
    const Vec3 y = e + r * xhat;
    MatrixXcd Xv(0, 3), Xd(0, 3);
    if (sysR->dim() > 0) {
      Xv = sysR->lu().solve(sysR->rhs_from_point_kernel(y));
      Xd = sysR->lu().solve(sysR->rhs_from_point_kernel_dy(y, xhat));
    }
    const CVec3 row_val = fm.row(y);
    const CVec3 row_der = fm.row_dy(y, xhat);
    CVec3 gval, gder;
    for (int c = 0; c < 3; ++c) {
      cplx v = row_val[c];
      cplx d = row_der[c];
      for (std::size_t p = 0; p < pts.size(); ++p) {
        const double wp = pts.weights[p];
        const CVec3 colv = Xv.block<3, 1>(3 * static_cast<Eigen::Index>(p), c);
        const CVec3 cold = Xd.block<3, 1>(3 * static_cast<Eigen::Index>(p), c);
        v -= wp * rows[p].cwiseProduct(colv).sum();
        d -= wp * rows[p].cwiseProduct(cold).sum();
      }
      gval[c] = v;
      gder[c] = d;
    }
    out.per_node[i] = {gder, gval};
  }
  return out;
}

MidSpreadTable mid_spread(const SceneLayout& scene, const Frequency& f, const AngularGrid& grid,
                          int quad_level, bool free_kernel) {
  MidSpreadTable out;
  out.grid_r = grid;
  out.grid_t = grid;
  const double r = scene.enclosure_radius;
  const Vec3 e = scene.rx_anchor;
  const cplx kappa = f.kappa();

  std::shared_ptr<BlockSystem> env;
  if (!free_kernel && !scene.regions_with(Role::Scatterer).empty()) {
    env = build_system(scene, f, RoleMask::only(Role::Scatterer), quad_level);
    solve_full(env);  // condition gate
  }
  const std::size_t np = env ? env->all_points().size() : 0;

  // per T-node solves (value and source-derivative columns)
  std::vector<MatrixXcd> Xv(grid.size()), Xd(grid.size());
  if (env) {
    for (std::size_t t = 0; t < grid.size(); ++t) {
      const Vec3 xt = r * grid.nodes[t];
      Xv[t] = env->lu().solve(env->rhs_from_point_kernel(xt));
      Xd[t] = env->lu().solve(env->rhs_from_point_kernel_dy(xt, grid.nodes[t]));
    }
  }

  out.blocks.assign(grid.size(),
                    std::vector<std::array<std::array<CMat3, 2>, 2>>(grid.size()));

  for (std::size_t ri = 0; ri < grid.size(); ++ri) {
    const Vec3 xhat_r = grid.nodes[ri];
    const Vec3 xr = e + r * xhat_r;
    // left kernel rows against the environment collocation
    std::vector<cplx> L0(np), L1(np);
    if (env) {
      const CollocationSet& pts = env->all_points();
      for (std::size_t p = 0; p < np; ++p) {
        L0[p] = g0_scalar(xr, pts.points[p], kappa) * pts.weights[p];
        L1[p] = g0_grad1(xr, pts.points[p], kappa).cwiseProduct(xhat_r.cast<cplx>()).sum() *
                pts.weights[p];
      }
    }
    for (std::size_t ti = 0; ti < grid.size(); ++ti) {
      const Vec3 xhat_t = grid.nodes[ti];
      const Vec3 xt = r * xhat_t;

      const cplx g = g0_scalar(xr, xt, kappa);
      const CVec3 dgx = g0_grad1(xr, xt, kappa);
      const cplx dpr_eval = dgx.cwiseProduct(xhat_r.cast<cplx>()).sum();       // d/drho' g
      const cplx dpr_src = -dgx.cwiseProduct(xhat_t.cast<cplx>()).sum();       // d/drho  g
      const cplx d2 = -(xhat_r.cast<cplx>().transpose() * g0_hess1(xr, xt, kappa) *
                        xhat_t.cast<cplx>())(0);                               // d2/drho drho' g

      CMat3 Gval = g * CMat3::Identity();
      CMat3 Gdr_src = dpr_src * CMat3::Identity();
      CMat3 Gdr_eval = dpr_eval * CMat3::Identity();
      CMat3 Gd2 = d2 * CMat3::Identity();
      for (std::size_t p = 0; p < np; ++p) {
        const CMat3 Xvp = Xv[ti].block<3, 3>(3 * static_cast<Eigen::Index>(p), 0);
        const CMat3 Xdp = Xd[ti].block<3, 3>(3 * static_cast<Eigen::Index>(p), 0);
        Gval -= L0[p] * Xvp;
        Gdr_src -= L0[p] * Xdp;
        Gdr_eval -= L1[p] * Xvp;
        Gd2 -= L1[p] * Xdp;
      }
      // 2x2 arrangement: [[G, -d_rho G], [-d_rho' G, d2_rho rho' G]]
      out.blocks[ri][ti][0][0] = Gval;
      out.blocks[ri][ti][0][1] = -Gdr_src;
      out.blocks[ri][ti][1][0] = -Gdr_eval;
      out.blocks[ri][ti][1][1] = Gd2;
    }
  }
  return out;
}

MatrixXcd contract_transfer(const std::vector<GVector>& g_rx, const MidSpreadTable& mid,
                            const std::vector<GVector>& g_tx, double enclosure_radius) {
  const double r4 = std::pow(enclosure_radius, 4);
  MatrixXcd H(static_cast<Eigen::Index>(g_rx.size()), static_cast<Eigen::Index>(g_tx.size()));
  for (std::size_t m = 0; m < g_rx.size(); ++m)
    for (std::size_t n = 0; n < g_tx.size(); ++n) {
      cplx acc = 0.0;
      for (std::size_t ri = 0; ri < mid.grid_r.size(); ++ri) {
        const double wr = mid.grid_r.weights[ri];
        for (std::size_t ti = 0; ti < mid.grid_t.size(); ++ti) {
          const double wt = mid.grid_t.weights[ti];
          cplx pair = 0.0;
          for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
              const CVec3 mv =
                  mid.blocks[ri][ti][static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] *
                  g_tx[n].per_node[ti][static_cast<std::size_t>(b)];
              pair += g_rx[m].per_node[ri][static_cast<std::size_t>(a)].cwiseProduct(mv).sum();
            }
          acc += wr * wt * pair;
        }
      }
      H(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)) = r4 * acc;
    }
  return H;
}

TransferMatrix decoupled_transfer(const SceneLayout& scene, const Frequency& f,
                                  const AngularGrid& grid, int quad_level, bool free_kernel) {
  const int n_tx = scene.antenna_count(Role::Transmitter);
  const int n_rx = scene.antenna_count(Role::Receiver);
  std::vector<GVector> gts, grs;
  for (int n = 0; n < n_tx; ++n) gts.push_back(g_vector_tx(scene, n, f, grid, quad_level));
  for (int m = 0; m < n_rx; ++m) grs.push_back(g_vector_rx(scene, m, f, grid, quad_level));
  const MidSpreadTable mid = mid_spread(scene, f, grid, quad_level, free_kernel);

  TransferMatrix H;
  H.mode = TransferMatrix::Mode::Decoupled;
  H.omega = f.omega;
  H.entries = contract_transfer(grs, mid, gts, scene.enclosure_radius);
  return H;
}

ReciprocityReport reciprocity_check(const SceneLayout& scene, const Frequency& f,
                                    int quad_level) {
  ReciprocityReport rep;
  const auto run = [&](const RoleMask& mask, const std::string& name) {
    const auto sys = build_system(scene, f, mask, quad_level);
    if (sys->dim() == 0) return;
    const ScatterSolution sol = solve_full(sys);
    const MatrixXcd D = sol.solution_operator();
    const AdjointSystem adj = build_adjoint_system(*sys);
    const MatrixXcd Dt = adj.solution_operator();

    // W^-1 Dt^H W vs D under the quadrature pairing
    const CollocationSet& pts = sys->all_points();
    MatrixXcd lhs(D.rows(), D.cols());
    for (Eigen::Index p = 0; p < D.rows(); ++p) {
      const double wp = pts.weights[static_cast<std::size_t>(p / 3)];
      for (Eigen::Index q = 0; q < D.cols(); ++q) {
        const double wq = pts.weights[static_cast<std::size_t>(q / 3)];
        lhs(p, q) = std::conj(Dt(q, p)) * (wq / wp);
      }
    }
    ReciprocityReport::Entry e;
    e.groups = name;
    e.rel_mismatch = (lhs - D).norm() / D.norm();
    rep.entries.push_back(e);
    rep.max_rel_mismatch = std::max(rep.max_rel_mismatch, e.rel_mismatch);
  };

  run(RoleMask::all(), "total");
  run(RoleMask::only(Role::Transmitter), "T");
  run(RoleMask::only(Role::Scatterer), "M");
  run(RoleMask::only(Role::Receiver), "R");
  return rep;
}

}  // namespace mimoscatter
