#include "mimoscatter/scatter.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace mimoscatter {

BlockSystem::BlockSystem(const SceneLayout& scene, const Frequency& f,
                         const std::vector<int>& regionIdx, int quad_level)
    : scene_(&scene), f_(f), regionIdx_(regionIdx) {
  groups_.reserve(regionIdx_.size());
  ws_.reserve(regionIdx_.size());
  offsets_.reserve(regionIdx_.size());
  for (int idx : regionIdx_) {
    const Region& r = scene.region(idx);
    groups_.push_back(sample_region_level(r, quad_level));
    PerturbationW w = make_w(scene, f, RoleMask::only(r.role));
    w.region = idx;
    ws_.push_back(w);
    offsets_.push_back(dim_);
    dim_ += 3 * static_cast<Eigen::Index>(groups_.back().size());
    all_.append(groups_.back());
  }

  M_.resize(dim_, dim_);
  const cplx k = kappa();
  for (int gi = 0; gi < group_count(); ++gi)
    for (int gk = 0; gk < group_count(); ++gk) {
      const MatrixXcd block =
          assemble_block(ws_[static_cast<std::size_t>(gi)], groups_[static_cast<std::size_t>(gi)],
                         groups_[static_cast<std::size_t>(gk)], k, gi == gk);
      M_.block(offsets_[static_cast<std::size_t>(gi)], offsets_[static_cast<std::size_t>(gk)],
               block.rows(), block.cols()) = block;
    }
  S_ = MatrixXcd::Identity(dim_, dim_) + M_;
}

const Eigen::PartialPivLU<MatrixXcd>& BlockSystem::lu() const {
  if (!lu_) lu_ = std::make_unique<Eigen::PartialPivLU<MatrixXcd>>(S_);
  return *lu_;
}

void BlockSystem::ensure_diag_factors() const {
  if (!diag_lu_.empty() || group_count() == 0) return;
  diag_lu_.resize(static_cast<std::size_t>(group_count()));
  for (int g = 0; g < group_count(); ++g) {
    const Eigen::Index n = 3 * static_cast<Eigen::Index>(groups_[static_cast<std::size_t>(g)].size());
    const MatrixXcd d = MatrixXcd::Identity(n, n) + M_.block(offset(g), offset(g), n, n);
    diag_lu_[static_cast<std::size_t>(g)] = std::make_unique<Eigen::PartialPivLU<MatrixXcd>>(d);
  }
}

MatrixXcd BlockSystem::rhs_from_source(const SourceTerm& src) const {
  KernelField rho(kappa());
  rho.reserve(src.points.size());
  for (std::size_t j = 0; j < src.points.size(); ++j)
    rho.add_source(src.points[j], src.weights[j] * src.values[j], src.weights[j]);

  MatrixXcd rhs(dim_, 1);
  for (int g = 0; g < group_count(); ++g) {
    const CollocationSet& set = groups_[static_cast<std::size_t>(g)];
    const PerturbationW& w = ws_[static_cast<std::size_t>(g)];
    for (std::size_t q = 0; q < set.size(); ++q)
      rhs.block<3, 1>(offset(g) + 3 * static_cast<Eigen::Index>(q), 0) =
          w.apply(rho, set.points[q]);
  }
  return rhs;
}

MatrixXcd BlockSystem::rhs_from_point_kernel(const Vec3& y) const {
  MatrixXcd rhs(dim_, 3);
  const cplx k = kappa();
  for (int g = 0; g < group_count(); ++g) {
    const CollocationSet& set = groups_[static_cast<std::size_t>(g)];
    const PerturbationW& w = ws_[static_cast<std::size_t>(g)];
    for (std::size_t q = 0; q < set.size(); ++q)
      rhs.block<3, 3>(offset(g) + 3 * static_cast<Eigen::Index>(q), 0) =
          w.row_times_kernel(set.points[q], y, k);
  }
  return rhs;
}

MatrixXcd BlockSystem::rhs_from_point_kernel_dy(const Vec3& y, const Vec3& dir) const {
  MatrixXcd rhs(dim_, 3);
  const cplx k = kappa();
  for (int g = 0; g < group_count(); ++g) {
    const CollocationSet& set = groups_[static_cast<std::size_t>(g)];
    const PerturbationW& w = ws_[static_cast<std::size_t>(g)];
    for (std::size_t q = 0; q < set.size(); ++q)
      rhs.block<3, 3>(offset(g) + 3 * static_cast<Eigen::Index>(q), 0) =
          w.row_times_kernel_dy(set.points[q], y, dir, k);
  }
  return rhs;
}

double BlockSystem::condition_estimate() const {
  if (dim_ == 0) return 1.0;
  const double norm1 = S_.cwiseAbs().colwise().sum().maxCoeff();
  // Hager-style estimate of ||S^-1||_1 using a handful of solves.
  VectorXcd x = VectorXcd::Constant(dim_, cplx(1.0 / static_cast<double>(dim_), 0.0));
  double est = 0.0;
  for (int iter = 0; iter < 5; ++iter) {
    const VectorXcd y = lu().solve(x);
    const double ynorm = y.cwiseAbs().sum();
    if (ynorm <= est) break;
    est = ynorm;
    VectorXcd xi(dim_);
    for (Eigen::Index i = 0; i < dim_; ++i) {
      const double a = std::abs(y[i]);
      xi[i] = a > 0.0 ? y[i] / a : cplx(1.0, 0.0);
    }
    const VectorXcd z = lu().adjoint().solve(xi);
    Eigen::Index jmax = 0;
    z.cwiseAbs().maxCoeff(&jmax);
    x.setZero();
    x[jmax] = 1.0;
  }
  return norm1 * est;
}

double BlockSystem::contraction_estimate(int power_steps) const {
  if (group_count() <= 1 || dim_ == 0) return 0.0;
  ensure_diag_factors();
  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  VectorXcd v(dim_);
  for (Eigen::Index i = 0; i < dim_; ++i) v[i] = cplx(u(rng), u(rng));
  v /= v.norm();

  const auto apply = [&](const VectorXcd& in) {
    // (Id + M_d)^-1 M_o in
    VectorXcd mo = M_ * in;
    for (int g = 0; g < group_count(); ++g) {
      const Eigen::Index n = 3 * static_cast<Eigen::Index>(groups_[static_cast<std::size_t>(g)].size());
      mo.segment(offset(g), n) -= M_.block(offset(g), offset(g), n, n) * in.segment(offset(g), n);
    }
    VectorXcd out(dim_);
    for (int g = 0; g < group_count(); ++g) {
      const Eigen::Index n = 3 * static_cast<Eigen::Index>(groups_[static_cast<std::size_t>(g)].size());
      out.segment(offset(g), n) =
          diag_lu_[static_cast<std::size_t>(g)]->solve(mo.segment(offset(g), n));
    }
    return out;
  };

  double rho = 0.0;
  for (int step = 0; step < power_steps; ++step) {
    const VectorXcd w = apply(v);
    const double n = w.norm();
    if (n == 0.0) return 0.0;
    rho = n;
    v = w / n;
  }
  return rho;
}

MatrixXcd BlockSystem::born_solve(const MatrixXcd& B, int max_order, SolveReport* report) const {
  ensure_diag_factors();
  const auto diag_solve = [&](const MatrixXcd& in) {
    MatrixXcd out(in.rows(), in.cols());
    for (int g = 0; g < group_count(); ++g) {
      const Eigen::Index n = 3 * static_cast<Eigen::Index>(groups_[static_cast<std::size_t>(g)].size());
      out.middleRows(offset(g), n) =
          diag_lu_[static_cast<std::size_t>(g)]->solve(in.middleRows(offset(g), n));
    }
    return out;
  };
  const auto offdiag_apply = [&](const MatrixXcd& in) {
    MatrixXcd out = M_ * in;
    for (int g = 0; g < group_count(); ++g) {
      const Eigen::Index n = 3 * static_cast<Eigen::Index>(groups_[static_cast<std::size_t>(g)].size());
      out.middleRows(offset(g), n) -=
          M_.block(offset(g), offset(g), n, n) * in.middleRows(offset(g), n);
    }
    return out;
  };

  MatrixXcd term = diag_solve(B);
  MatrixXcd sum = term;
  if (report) report->born_order_norms.assign(1, term.norm());
  int growth_streak = 0;
  for (int order = 1; order <= max_order; ++order) {
    term = -diag_solve(offdiag_apply(term));
    sum += term;
    const double n = term.norm();
    if (report) {
      if (!report->born_order_norms.empty() && n > report->born_order_norms.back())
        ++growth_streak;
      else
        growth_streak = 0;
      report->born_order_norms.push_back(n);
    }
    if (growth_streak >= 3)
      throw std::runtime_error("born_series: partial sums grew for 3 consecutive orders");
  }
  return sum;
}

ScatterSolution::ScatterSolution(std::shared_ptr<const BlockSystem> system, SolveMode mode,
                                 int born_order, SolveReport report)
    : system_(std::move(system)), mode_(mode), born_order_(born_order), report_(std::move(report)) {}

VectorXcd ScatterSolution::coupling_for(const SourceTerm& src, SolveReport* born_report) const {
  if (system_->dim() == 0) return VectorXcd();
  const MatrixXcd rhs = system_->rhs_from_source(src);
  if (mode_ == SolveMode::Direct) return system_->lu().solve(rhs);
  return system_->born_solve(rhs, born_order_, born_report);
}

KernelField ScatterSolution::field(const SourceTerm& src) const {
  KernelField out(system_->kappa());
  out.reserve(src.points.size() + static_cast<std::size_t>(system_->dim() / 3));
  for (std::size_t j = 0; j < src.points.size(); ++j)
    out.add_source(src.points[j], src.weights[j] * src.values[j], src.weights[j]);
  if (system_->dim() == 0) return out;
  const VectorXcd x = coupling_for(src);
  const CollocationSet& pts = system_->all_points();
  for (std::size_t q = 0; q < pts.size(); ++q) {
    const CVec3 xq = x.segment<3>(3 * static_cast<Eigen::Index>(q));
    out.add_source(pts.points[q], -pts.weights[q] * xq, pts.weights[q]);
  }
  return out;
}

MatrixXcd ScatterSolution::coupling_block(int n, int m) const {
  const Eigen::Index rn = 3 * static_cast<Eigen::Index>(system_->group_set(n).size());
  const Eigen::Index cm = 3 * static_cast<Eigen::Index>(system_->group_set(m).size());
  const MatrixXcd rhs = system_->m_matrix().middleCols(system_->offset(m), cm);
  const MatrixXcd sol = system_->lu().solve(rhs);
  MatrixXcd block = sol.middleRows(system_->offset(n), rn);
  const CollocationSet& cols = system_->group_set(m);
  for (std::size_t q = 0; q < cols.size(); ++q)
    block.middleCols(3 * static_cast<Eigen::Index>(q), 3) /= cols.weights[q];
  return block;
}

MatrixXcd ScatterSolution::solution_operator() const {
  const MatrixXcd gw = kernel_matrix(*system_);
  // G_w S^-1 = (S^-T G_w^T)^T
  const MatrixXcd tmp = system_->lu().transpose().solve(gw.transpose());
  return tmp.transpose();
}

ScatterSolution solve_full(std::shared_ptr<const BlockSystem> system) {
  SolveReport rep;
  rep.system_size = static_cast<int>(system->dim());
  if (system->dim() > 0) {
    rep.condition_estimate = system->condition_estimate();
    rep.contraction_estimate = system->contraction_estimate();
    if (!(rep.condition_estimate < 1e12)) {
      std::ostringstream os;
      os << "solve_full: near-singular system (cond ~ " << rep.condition_estimate
         << ") at omega = " << system->frequency().omega << " rad/s";
      throw std::runtime_error(os.str());
    }
  }
  return ScatterSolution(std::move(system), SolveMode::Direct, 0, std::move(rep));
}

ScatterSolution born_series(std::shared_ptr<const BlockSystem> system, int max_order) {
  SolveReport rep;
  rep.system_size = static_cast<int>(system->dim());
  if (system->dim() > 0) {
    rep.contraction_estimate = system->contraction_estimate();
    if (rep.contraction_estimate >= 1.0)
      rep.note = "contraction estimate >= 1: series may diverge, returning partial sums";
  }
  return ScatterSolution(std::move(system), SolveMode::Born, max_order, std::move(rep));
}

TSingle t_single(const SceneLayout& scene, const Frequency& f, int regionIdx, int quad_level) {
  BlockSystem sys(scene, f, {regionIdx}, quad_level);
  TSingle out;
  out.carrier = sys.group_set(0);
  out.m_nn = sys.m_matrix();
  out.t_r0 = sys.lu().solve(sys.m_matrix());
  return out;
}

KernelField resolvent_field(const ScatterSolution& sol, const SourceTerm& src) {
  return sol.field(src);
}

std::shared_ptr<BlockSystem> build_system(const SceneLayout& scene, const Frequency& f,
                                          const RoleMask& mask, int quad_level) {
  std::vector<int> idx;
  for (int i = 0; i < static_cast<int>(scene.regions.size()); ++i)
    if (mask.accepts(scene.region(i).role)) idx.push_back(i);
  return std::make_shared<BlockSystem>(scene, f, idx, quad_level);
}

ScatterSolution subsystem_resolvent(const SceneLayout& scene, const Frequency& f, Role which,
                                    int quad_level) {
  return solve_full(build_system(scene, f, RoleMask::only(which), quad_level));
}

ScatterSolution free_resolvent(const SceneLayout& scene, const Frequency& f) {
  return solve_full(std::make_shared<BlockSystem>(scene, f, std::vector<int>{}, 0));
}

MatrixXcd kernel_matrix(const BlockSystem& sys) {
  const CollocationSet& pts = sys.all_points();
  const Eigen::Index n = static_cast<Eigen::Index>(pts.size());
  MatrixXcd gw(3 * n, 3 * n);
  const cplx k = sys.kappa();
  for (Eigen::Index p = 0; p < n; ++p)
    for (Eigen::Index q = 0; q < n; ++q) {
      cplx val;
      if (p == q) {
        const double a =
            std::cbrt(3.0 * pts.weights[static_cast<std::size_t>(q)] / (4.0 * constants::pi));
        val = g0_ball_mean(a, k);
      } else {
        val = g0_scalar(pts.points[static_cast<std::size_t>(p)],
                        pts.points[static_cast<std::size_t>(q)], k) *
              pts.weights[static_cast<std::size_t>(q)];
      }
      gw.block<3, 3>(3 * p, 3 * q) = val * CMat3::Identity();
    }
  return gw;
}

AdjointSystem build_adjoint_system(const BlockSystem& fwd) {
  const CollocationSet& pts = fwd.all_points();
  const Eigen::Index n3 = fwd.dim();
  const MatrixXcd& S = fwd.system_matrix();
  MatrixXcd st(n3, n3);
  for (Eigen::Index p = 0; p < n3; ++p) {
    const double wp = pts.weights[static_cast<std::size_t>(p / 3)];
    for (Eigen::Index q = 0; q < n3; ++q) {
      const double wq = pts.weights[static_cast<std::size_t>(q / 3)];
      st(p, q) = std::conj(S(q, p)) * (wq / wp);
    }
  }

  // incoming-kernel G_w; identical to W^-1 G_w^H W because g is symmetric.
  // The conjugate branch flips the sign of Re(kappa) and keeps the decay.
  MatrixXcd gt(n3, n3);
  const cplx kconj = -std::conj(fwd.kappa());
  const Eigen::Index n = n3 / 3;
  for (Eigen::Index p = 0; p < n; ++p)
    for (Eigen::Index q = 0; q < n; ++q) {
      cplx val;
      if (p == q) {
        const double a =
            std::cbrt(3.0 * pts.weights[static_cast<std::size_t>(q)] / (4.0 * constants::pi));
        val = g0_ball_mean(a, kconj);
      } else {
        val = g0_scalar(pts.points[static_cast<std::size_t>(p)],
                        pts.points[static_cast<std::size_t>(q)], kconj) *
              pts.weights[static_cast<std::size_t>(q)];
      }
      gt.block<3, 3>(3 * p, 3 * q) = val * CMat3::Identity();
    }

  AdjointSystem out{std::move(st), std::move(gt), Eigen::PartialPivLU<MatrixXcd>()};
  out.lu.compute(out.s_tilde);
  return out;
}

}  // namespace mimoscatter
