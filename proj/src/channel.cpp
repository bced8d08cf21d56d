#include "mimoscatter/channel.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace mimoscatter {

const char* TransferMatrix::mode_name(Mode m) {
  switch (m) {
    case Mode::Full: return "full";
    case Mode::Decoupled: return "decoupled";
    case Mode::SpreadFarfield: return "spread-farfield";
  }
  return "?";
}

KernelField vector_potential(const SceneLayout& scene, const ScatterSolution& sol, int n) {
  const SourceCurrent cur = normalized_current(n, scene);
  return sol.field(SourceTerm::from_current(cur.sample()));
}

EFieldEvaluator::EFieldEvaluator(const KernelField& A, const SceneLayout& scene,
                                 const Frequency& f, double stencil_cell, bool analytic)
    : A_(&A), scene_(&scene), f_(f), step_(stencil_cell / 4.0), analytic_(analytic) {
  if (!(step_ > 0.0)) throw std::invalid_argument("EFieldEvaluator: stencil cell must be positive");
}

cplx EFieldEvaluator::beta(const Vec3& x) const {
  return 1.0 / (J * scene_->epsilon(x) * f_.omega + scene_->sigma(x));
}

CVec3 EFieldEvaluator::grad_beta(const Vec3& x) const {
  Vec3 ge = Vec3::Zero(), gs = Vec3::Zero();
  for (const Region& r : scene_->regions) {
    if (!r.contains(x)) continue;
    ge += r.grad_delta_eps(x);
    gs += r.grad_sigma(x);
  }
  const cplx b = beta(x);
  return -b * b * (J * f_.omega * constants::eps0 * ge.cast<cplx>() + gs.cast<cplx>());
}

cplx EFieldEvaluator::u(const Vec3& x) const { return beta(x) * A_->divergence(x); }

CVec3 EFieldEvaluator::grad_u_stencil(const Vec3& x) const {
  double h = step_;
  // shrink the stencil while any probe point sits on top of a kernel source
  const auto clear_of_sources = [&](double step) {
    for (const auto& s : A_->sources()) {
      const double d = (x - s.pos).norm();
      if (d < 1e-12) continue;  // centre itself handled by the self rule
      if (d < 2.0 * step) return false;
    }
    return true;
  };
  while (!clear_of_sources(h)) {
    h *= 0.5;
    if (h < 1e-6 * step_ * 4.0)
      throw std::runtime_error("e_field: probe stencil could not clear kernel sources");
  }
  CVec3 g;
  for (int c = 0; c < 3; ++c) {
    Vec3 dx = Vec3::Zero();
    dx[c] = h;
    g[c] = (u(x + dx) - u(x - dx)) / (2.0 * h);
  }
  return g;
}

CVec3 EFieldEvaluator::grad_u_analytic(const Vec3& x) const {
  // grad(beta div A) = (grad beta) div A + beta grad(div A);
  // grad(div A)_s = sum_j (Hess g(x, p_j) strength_j)_s
  CVec3 graddiv = CVec3::Zero();
  for (const auto& s : A_->sources()) {
    if ((x - s.pos).norm() < 1e-12) continue;
    graddiv += g0_hess1(x, s.pos, A_->kappa()) * s.strength;
  }
  return grad_beta(x) * A_->divergence(x) + beta(x) * graddiv;
}

CVec3 EFieldEvaluator::operator()(const Vec3& x) const {
  const CVec3 a = A_->value(x);
  const CVec3 gu = analytic_ ? grad_u_analytic(x) : grad_u_stencil(x);
  return -J * constants::mu0 * f_.omega * a + gu;
}

FieldSample h_field(const KernelField& A, const std::vector<Vec3>& points, const Frequency& f) {
  FieldSample out;
  out.kind = FieldSample::Kind::H;
  out.omega = f.omega;
  out.points = points;
  out.values.reserve(points.size());
  for (const Vec3& x : points) out.values.push_back(A.curl(x));
  return out;
}

FieldSample e_field(const KernelField& A, const SceneLayout& scene, const Frequency& f,
                    const std::vector<Vec3>& points, double stencil_cell, bool analytic) {
  EFieldEvaluator ev(A, scene, f, stencil_cell, analytic);
  FieldSample out;
  out.kind = FieldSample::Kind::E;
  out.omega = f.omega;
  out.points = points;
  out.values.reserve(points.size());
  for (const Vec3& x : points) out.values.push_back(ev(x));
  return out;
}

namespace {

double mean_cell_size(const SceneLayout& scene, int regionIdx, int quad_level) {
  const CollocationSet set = sample_region_level(scene.region(regionIdx), quad_level);
  return std::cbrt(set.total_weight() / static_cast<double>(set.size()));
}

}  // namespace

SectionFunctional::SectionFunctional(const SceneLayout& scene, const Frequency& f, int receiver,
                                     int n_radial, int n_angular)
    : scene_(&scene), f_(f), receiver_(receiver) {
  region_ = scene.antenna_region(Role::Receiver, receiver);
  const Region& r = scene.region(region_);
  disc_ = disc_quadrature(r.wire->center, r.wire->normal, r.wire->radius, n_radial, n_angular);
  sigma_.reserve(disc_.points.size());
  for (const Vec3& x : disc_.points) sigma_.push_back(r.sigma(x));
  step_ = mean_cell_size(scene, region_, scene.solver.quad_level) / 4.0;
}

CVec3 SectionFunctional::row(const Vec3& y) const {
  const cplx kappa = f_.kappa();
  CVec3 out = CVec3::Zero();
  const CVec3 nhat = disc_.normal.cast<cplx>();
  for (std::size_t d = 0; d < disc_.points.size(); ++d) {
    if (sigma_[d] == 0.0) continue;
    const Vec3& x = disc_.points[d];
    const double wd = disc_.weights[d] * sigma_[d];

    double h = step_;
    while ((x - y).norm() < 2.0 * h && (x - y).norm() > 1e-12) h *= 0.5;

    const cplx g = g0_scalar(x, y, kappa);
    // -j mu0 w g (e_c . n) term
    out += wd * (-J * constants::mu0 * f_.omega * g) * nhat;

    // n . grad_x [ beta(x) d g /d x_c ] by central differences
    for (int axis = 0; axis < 3; ++axis) {
      Vec3 dx = Vec3::Zero();
      dx[axis] = h;
      const Vec3 xp = x + dx, xm = x - dx;
      const cplx bp = 1.0 / (J * scene_->epsilon(xp) * f_.omega + scene_->sigma(xp));
      const cplx bm = 1.0 / (J * scene_->epsilon(xm) * f_.omega + scene_->sigma(xm));
      const CVec3 dgp = bp * g0_grad1(xp, y, kappa);
      const CVec3 dgm = bm * g0_grad1(xm, y, kappa);
      out += wd * nhat[axis] * (dgp - dgm) / (2.0 * h);
    }
  }
  return out;
}

CVec3 SectionFunctional::row_dy(const Vec3& y, const Vec3& dir) const {
  const cplx kappa = f_.kappa();
  CVec3 out = CVec3::Zero();
  const CVec3 nhat = disc_.normal.cast<cplx>();
  const CVec3 dirc = dir.cast<cplx>();
  for (std::size_t d = 0; d < disc_.points.size(); ++d) {
    if (sigma_[d] == 0.0) continue;
    const Vec3& x = disc_.points[d];
    const double wd = disc_.weights[d] * sigma_[d];

    double h = step_;
    while ((x - y).norm() < 2.0 * h && (x - y).norm() > 1e-12) h *= 0.5;

    // kernel value: grad_y g . dir = -grad_x g . dir
    const cplx gdir = -g0_grad1(x, y, kappa).cwiseProduct(dirc).sum();
    out += wd * (-J * constants::mu0 * f_.omega * gdir) * nhat;

    for (int axis = 0; axis < 3; ++axis) {
      Vec3 dx = Vec3::Zero();
      dx[axis] = h;
      const Vec3 xp = x + dx, xm = x - dx;
      const cplx bp = 1.0 / (J * scene_->epsilon(xp) * f_.omega + scene_->sigma(xp));
      const cplx bm = 1.0 / (J * scene_->epsilon(xm) * f_.omega + scene_->sigma(xm));
      // d/dx_c of the derivative kernel: -(Hess_x g) dir
      const CVec3 dgp = bp * (-(g0_hess1(xp, y, kappa) * dirc));
      const CVec3 dgm = bm * (-(g0_hess1(xm, y, kappa) * dirc));
      out += wd * nhat[axis] * (dgp - dgm) / (2.0 * h);
    }
  }
  return out;
}

cplx SectionFunctional::apply(const KernelField& A) const {
  cplx total = 0.0;
  for (const auto& s : A.sources()) total += row(s.pos).cwiseProduct(s.strength).sum();
  return total;
}

TransferMatrix transfer_matrix(const SceneLayout& scene, const Frequency& f, int quad_level,
                               SolveReport* report) {
  const int n_tx = scene.antenna_count(Role::Transmitter);
  const int n_rx = scene.antenna_count(Role::Receiver);
  const ScatterSolution sol = solve_full(build_full_system(scene, f, quad_level));
  if (report) *report = sol.report();

  std::vector<SectionFunctional> rows;
  rows.reserve(static_cast<std::size_t>(n_rx));
  for (int m = 0; m < n_rx; ++m) rows.emplace_back(scene, f, m);

  TransferMatrix H;
  H.mode = TransferMatrix::Mode::Full;
  H.omega = f.omega;
  H.entries.resize(n_rx, n_tx);
  for (int n = 0; n < n_tx; ++n) {
    const KernelField A = vector_potential(scene, sol, n);
    for (int m = 0; m < n_rx; ++m) H.entries(m, n) = rows[static_cast<std::size_t>(m)].apply(A);
  }
  return H;
}

namespace {

// central-difference first derivatives of a vector-valued callable
template <typename F>
CMat3 fd_jacobian(const F& fn, const Vec3& x, double h) {
  CMat3 out;
  for (int c = 0; c < 3; ++c) {
    Vec3 dx = Vec3::Zero();
    dx[c] = h;
    const CVec3 d = (fn(x + dx) - fn(x - dx)) / (2.0 * h);
    out.col(c) = d;
  }
  return out;
}

template <typename F>
cplx fd_divergence(const F& fn, const Vec3& x, double h) {
  return fd_jacobian(fn, x, h).trace();
}

template <typename F>
CVec3 fd_curl(const F& fn, const Vec3& x, double h) {
  const CMat3 Jm = fd_jacobian(fn, x, h);
  return CVec3(Jm(2, 1) - Jm(1, 2), Jm(0, 2) - Jm(2, 0), Jm(1, 0) - Jm(0, 1));
}

}  // namespace

MaxwellResidualReport maxwell_residual(const SceneLayout& scene, const KernelField& A,
                                       const Frequency& f, const std::vector<Vec3>& probes,
                                       double h) {
  MaxwellResidualReport rep;
  EFieldEvaluator efield(A, scene, f, h, true);

  const auto Hfn = [&](const Vec3& x) { return A.curl(x); };
  const auto Efn = [&](const Vec3& x) { return efield(x); };
  const auto epsE = [&](const Vec3& x) { return cplx(scene.epsilon(x)) * efield(x); };
  const auto sigE = [&](const Vec3& x) { return cplx(scene.sigma(x)) * efield(x); };

  const double k0 = f.k0();
  double maxE = 0.0, maxH = 0.0;
  for (const Vec3& x : probes) {
    maxE = std::max(maxE, Efn(x).norm());
    maxH = std::max(maxH, Hfn(x).norm());
  }
  if (maxE == 0.0) maxE = 1.0;
  if (maxH == 0.0) maxH = 1.0;
  rep.scale = maxE;

  // per-equation normalizations making the residuals dimensionless
  const double norms[5] = {k0 * maxH, k0 * maxH, k0 * maxE,
                           constants::eps0 * k0 * maxE,
                           std::abs(f.omega) * constants::eps0 * k0 * maxE};
  const char* names[5] = {"div_H", "curl_H_ampere", "curl_E_faraday", "charge_from_eps_E",
                          "charge_continuity"};
  double r1[5] = {0, 0, 0, 0, 0}, r2[5] = {0, 0, 0, 0, 0};

  for (const Vec3& x : probes) {
    for (int pass = 0; pass < 2; ++pass) {
      const double hh = pass == 0 ? h : h / 2.0;
      double* slot = pass == 0 ? r1 : r2;

      slot[0] = std::max(slot[0], std::abs(fd_divergence(Hfn, x, hh)));
      // curl H = J + (j eps w + sigma) E, with J = 0 at probe points
      const CVec3 ampere =
          fd_curl(Hfn, x, hh) - (J * scene.epsilon(x) * f.omega + scene.sigma(x)) * Efn(x);
      slot[1] = std::max(slot[1], ampere.norm());
      const CVec3 faraday = fd_curl(Efn, x, hh) + J * constants::mu0 * f.omega * Hfn(x);
      slot[2] = std::max(slot[2], faraday.norm());
      // rho recovered from div(eps E); vanishes at free-space probes
      const cplx rho = fd_divergence(epsE, x, hh);
      slot[3] = std::max(slot[3], std::abs(rho));
      // continuity -j w rho = div(J + sigma E)
      const cplx cont = -J * f.omega * rho - fd_divergence(sigE, x, hh);
      slot[4] = std::max(slot[4], std::abs(cont));
    }
  }

  rep.max_relative_residual = 0.0;
  for (int i = 0; i < 5; ++i) {
    MaxwellResidualReport::Equation eq;
    eq.name = names[i];
    eq.res_h = r1[i] / norms[i];
    eq.res_h2 = r2[i] / norms[i];
    eq.order = (r1[i] > 0.0 && r2[i] > 0.0) ? std::log2(r1[i] / r2[i]) : 2.0;
    rep.max_relative_residual = std::max(rep.max_relative_residual, eq.res_h2);
    rep.equations.push_back(std::move(eq));
  }
  return rep;
}

double capacity(const MatrixXcd& H, double snr) {
  if (snr <= 0.0) throw std::invalid_argument("capacity: snr must be positive");
  if (H.size() == 0) return 0.0;
  const MatrixXcd gram = H.adjoint() * H;
  Eigen::SelfAdjointEigenSolver<MatrixXcd> eig(gram);
  const double n_tx = static_cast<double>(H.cols());
  double cap = 0.0;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
    const double lam = std::max(0.0, eig.eigenvalues()[i]);
    cap += std::log2(1.0 + snr * lam / n_tx);
  }
  return cap;
}

double capacity(const TransferMatrix& H, double snr) { return capacity(H.entries, snr); }

}  // namespace mimoscatter
