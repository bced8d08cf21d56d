#include "mimoscatter/spread.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

namespace mimoscatter {

namespace {

cplx phase(double s, cplx kappa) { return std::exp(J * kappa * s); }

}  // namespace

ScatteringKernel::ScatteringKernel(const SceneLayout& scene, const Frequency& f, int quad_level)
    : scene_(&scene), f_(f), w_env_(make_w(scene, f, RoleMask::only(Role::Scatterer))) {
  const auto sc = scene.regions_with(Role::Scatterer);
  if (sc.empty()) return;

  env_ = build_system(scene, f, RoleMask::only(Role::Scatterer), quad_level);
  solve_full(env_);  // condition gate
  pts_ = env_->all_points();
  n_ = pts_.size();

  const Vec3 e = scene.rx_anchor;
  st_.resize(n_);
  sr_.resize(n_);
  ot_.resize(n_);
  or_.resize(n_);
  ct_.resize(n_);
  min_dist_over_r_ = std::numeric_limits<double>::infinity();
  for (std::size_t q = 0; q < n_; ++q) {
    const Vec3& y = pts_.points[q];
    st_[q] = y.norm();
    ot_[q] = y / st_[q];
    sr_[q] = (y - e).norm();
    or_[q] = (y - e) / sr_[q];
    ct_[q] = c_t_at(y);
    min_dist_over_r_ =
        std::min(min_dist_over_r_, std::min(st_[q], sr_[q]) / scene.enclosure_radius);
  }

  // solved table: (Id + M)^-1 applied to the block-diagonal far-source
  // factors, with the propagation phases absorbed on both indices
  MatrixXcd rhs = MatrixXcd::Zero(env_->dim(), env_->dim());
  for (std::size_t q = 0; q < n_; ++q)
    rhs.block<3, 3>(3 * static_cast<Eigen::Index>(q), 3 * static_cast<Eigen::Index>(q)) = ct_[q];
  const MatrixXcd sol = env_->lu().solve(rhs);
  const cplx kappa = f.kappa();
  table_.resize(n_ * n_);
  for (std::size_t p = 0; p < n_; ++p)
    for (std::size_t q = 0; q < n_; ++q)
      table_[p * n_ + q] = phase(sr_[p], kappa) *
                           sol.block<3, 3>(3 * static_cast<Eigen::Index>(p),
                                           3 * static_cast<Eigen::Index>(q)) *
                           phase(st_[q], kappa);
}

CMat3 ScatteringKernel::c_t_at(const Vec3& y) const {
  // W applied to the far kernel f_T(y) I with f_T = e^{j kappa |y|}/(4 pi |y|),
  // divided by f_T: -dk2 I + glk2 ((j kappa - 1/|y|) y^)^t
  const cplx kappa = f_.kappa();
  const double s = y.norm();
  const Vec3 dir = y / s;
  CMat3 out = -w_env_.dk2(y) * CMat3::Identity();
  out.noalias() += w_env_.glk2(y) * ((J * kappa - 1.0 / s) * dir.cast<cplx>()).transpose();
  return out;
}

CMat3 ScatteringKernel::theta(std::size_t p) const {
  return phase(sr_[p], f_.kappa()) * ct_[p] * phase(st_[p], f_.kappa());
}

CMat3 ScatteringKernel::tau(std::size_t p, std::size_t q) const {
  CMat3 t = solved(p, q);
  if (p == q) t -= theta(p);
  return t / pts_.weights[q];
}

CMat3 ScatteringKernel::tau_at(const Vec3& y, const Vec3& yprime) const {
  const cplx kappa = f_.kappa();
  const Vec3 e = scene_->rx_anchor;
  const double sr = (y - e).norm();
  const double st = yprime.norm();

  // tau(y, y') = phases * { -[W o g](y, y')
  //   + sum_{s,t} [W o g](y, u_s) w_s (Id+M)^-1[s,t] [W o g](u_t, y') } C_T(y')
  const CMat3 ct = c_t_at(yprime);
  CMat3 inner = -w_env_.row_times_kernel(y, yprime, kappa);
  if (env_ && env_->dim() > 0) {
    const MatrixXcd b = env_->rhs_from_point_kernel(yprime);
    const MatrixXcd z = env_->lu().solve(b);
    for (std::size_t s = 0; s < n_; ++s) {
      const CMat3 rowk = w_env_.row_times_kernel(y, pts_.points[s], kappa);
      inner.noalias() +=
          rowk * pts_.weights[s] * z.block<3, 3>(3 * static_cast<Eigen::Index>(s), 0);
    }
  }
  return phase(sr, kappa) * inner * ct * phase(st, kappa);
}

std::shared_ptr<ScatteringKernel> scattering_kernel(const SceneLayout& scene, const Frequency& f,
                                                    int quad_level) {
  return std::make_shared<ScatteringKernel>(scene, f, quad_level);
}

namespace {

/// Intersection intervals of the ray anchor + s*dir (s > 0) with the
/// scatterer support balls.
std::vector<std::pair<double, double>> ray_supports(const SceneLayout& scene, const Vec3& anchor,
                                                    const Vec3& dir) {
  std::vector<std::pair<double, double>> out;
  for (int idx : scene.regions_with(Role::Scatterer)) {
    const Region& r = scene.region(idx);
    const Vec3 oc = r.center - anchor;
    const double b = oc.dot(dir);
    const double c = oc.squaredNorm() - r.support_radius() * r.support_radius();
    const double disc = b * b - c;
    if (disc <= 0.0) continue;
    const double sq = std::sqrt(disc);
    const double s1 = b - sq, s2 = b + sq;
    if (s2 <= 0.0) continue;
    out.emplace_back(std::max(0.0, s1), s2);
  }
  std::sort(out.begin(), out.end());
  return out;
}

using Complex3x3Fn = std::function<CMat3(double)>;

CMat3 simpson_recurse(const Complex3x3Fn& fn, double a, double b, const CMat3& fa, const CMat3& fm,
                      const CMat3& fb, const CMat3& whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const CMat3 flm = fn(lm), frm = fn(rm);
  const CMat3 left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const CMat3 right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const CMat3 sum = left + right;
  if (depth <= 0 || (sum - whole).norm() <= 15.0 * tol * (1.0 + sum.norm())) {
    return sum + (sum - whole) / 15.0;
  }
  return simpson_recurse(fn, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         simpson_recurse(fn, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

CMat3 adaptive_simpson(const Complex3x3Fn& fn, double a, double b, double tol, int depth = 10) {
  const CMat3 fa = fn(a), fb = fn(b), fm = fn(0.5 * (a + b));
  const CMat3 whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_recurse(fn, a, b, fa, fm, fb, whole, tol, depth);
}

}  // namespace

Eigen::Matrix<cplx, 6, 6> SpreadTable::block66(std::size_t ri, std::size_t ti) const {
  Eigen::Matrix<cplx, 6, 6> out;
  const CMat3& b = block(ri, ti);
  for (int a = 0; a < 2; ++a)
    for (int c = 0; c < 2; ++c) out.block<3, 3>(3 * a, 3 * c) = b;
  return out;
}

SpreadTable spread_matrix(std::shared_ptr<const ScatteringKernel> kernel,
                          const SceneLayout& scene, const Frequency& f, const AngularGrid& grid,
                          double rel_tol) {
  SpreadTable table;
  table.grid_r = grid;
  table.grid_t = grid;
  table.kernel = kernel;
  table.enclosure_radius = scene.enclosure_radius;
  table.radial_blocks.assign(grid.size() * grid.size(), CMat3::Zero());
  table.s_support_r.resize(grid.size());
  table.s_support_t.resize(grid.size());

  if (kernel->empty()) return table;
  const Vec3 e = scene.rx_anchor;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    table.s_support_r[i] = ray_supports(scene, e, grid.nodes[i]);
    table.s_support_t[i] = ray_supports(scene, Vec3::Zero(), grid.nodes[i]);
  }

  const double r4 = std::pow(scene.enclosure_radius, 4);
  for (std::size_t ri = 0; ri < grid.size(); ++ri) {
    if (table.s_support_r[ri].empty()) continue;
    const Vec3 omr = grid.nodes[ri];
    for (std::size_t ti = 0; ti < grid.size(); ++ti) {
      if (table.s_support_t[ti].empty()) continue;
      const Vec3 omt = grid.nodes[ti];

      CMat3 acc = CMat3::Zero();
      for (const auto& [ra, rb] : table.s_support_r[ri]) {
        const auto outer = [&](double s_r) -> CMat3 {
          const Vec3 y = e + s_r * omr;
          CMat3 inner_acc = CMat3::Zero();
          for (const auto& [ta, tb] : table.s_support_t[ti]) {
            const auto inner = [&](double s_t) -> CMat3 {
              const Vec3 yp = s_t * omt;
              if ((y - yp).norm() < 1e-9) return CMat3::Zero();
              return s_t * kernel->tau_at(y, yp);
            };
            inner_acc += adaptive_simpson(inner, ta, tb, rel_tol, 8);
          }
          return s_r * inner_acc;
        };
        acc += adaptive_simpson(outer, ra, rb, rel_tol, 8);
      }
      table.radial_blocks[ri * grid.size() + ti] = -(r4 / (16.0 * constants::pi * constants::pi)) * acc;
    }
  }
  return table;
}

std::array<CVec3, 2> HVector::evaluate(const Vec3& direction) const {
  CVec3 h1 = CVec3::Zero(), h2 = CVec3::Zero();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double xdotom = grid.nodes[i].dot(direction);
    const cplx ph = std::exp(-J * kappa * radius * xdotom) * grid.weights[i];
    h1 += ph * f1[i];
    h2 += ph * (J * kappa * xdotom) * f2[i];
  }
  return {h1, h2};
}

HVector h_vector(Role side, const GVector& g, const Frequency& f, const AngularGrid& grid,
                 double enclosure_radius) {
  if (g.per_node.size() != grid.size())
    throw std::invalid_argument("h_vector: g-vector and angular grid sizes differ");
  HVector out;
  out.antennaIndex = g.antennaIndex;
  out.grid = grid;
  out.radius = enclosure_radius;
  out.kappa = f.kappa();
  out.f1.resize(grid.size());
  out.f2.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.f1[i] = g.per_node[i][0];
    out.f2[i] = g.per_node[i][1];
  }
  (void)side;
  return out;
}

ScattTransferResult scatt_transfer(const SpreadTable& table, const std::vector<HVector>& h_rx,
                                   const std::vector<HVector>& h_tx, const Frequency& f) {
  if (!table.kernel) throw std::invalid_argument("scatt_transfer: table carries no kernel");
  const ScatteringKernel& k = *table.kernel;
  for (const HVector& h : h_rx)
    if (h.grid.size() != table.grid_r.size())
      throw std::invalid_argument("scatt_transfer: angular grid mismatch (rx)");
  for (const HVector& h : h_tx)
    if (h.grid.size() != table.grid_t.size())
      throw std::invalid_argument("scatt_transfer: angular grid mismatch (tx)");

  ScattTransferResult out;
  out.transfer.mode = TransferMatrix::Mode::SpreadFarfield;
  out.transfer.omega = f.omega;
  out.transfer.entries =
      MatrixXcd::Zero(static_cast<Eigen::Index>(h_rx.size()), static_cast<Eigen::Index>(h_tx.size()));
  if (k.empty()) return out;

  const double r4 = std::pow(table.enclosure_radius, 4);
  const double pref = -r4 / (16.0 * constants::pi * constants::pi);

  // cache h sums at the per-point directions
  std::vector<std::vector<CVec3>> hr(h_rx.size(), std::vector<CVec3>(k.size()));
  std::vector<std::vector<CVec3>> ht(h_tx.size(), std::vector<CVec3>(k.size()));
  for (std::size_t m = 0; m < h_rx.size(); ++m)
    for (std::size_t p = 0; p < k.size(); ++p) hr[m][p] = h_rx[m].evaluate_sum(k.omega_r(p));
  for (std::size_t n = 0; n < h_tx.size(); ++n)
    for (std::size_t q = 0; q < k.size(); ++q) ht[n][q] = h_tx[n].evaluate_sum(k.omega_t(q));

  for (std::size_t m = 0; m < h_rx.size(); ++m)
    for (std::size_t n = 0; n < h_tx.size(); ++n) {
      cplx acc = 0.0;
      for (std::size_t p = 0; p < k.size(); ++p) {
        const double wp = k.points().weights[p];
        for (std::size_t q = 0; q < k.size(); ++q) {
          const cplx sandwich = hr[m][p].cwiseProduct(k.solved(p, q) * ht[n][q]).sum();
          acc += wp / (k.s_r(p) * k.s_t(q)) * sandwich;
        }
      }
      out.transfer.entries(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)) =
          pref * acc;
    }

  const double dmin = k.min_distance_over_r() * table.enclosure_radius;
  const double k0 = f.k0();
  const double r = table.enclosure_radius;
  out.error_bound =
      out.transfer.entries.cwiseAbs().maxCoeff() * (k0 * r * r / 2.0 + 2.0 * r) / dmin;
  return out;
}

MatrixXcd scatt_transfer_from_table(const SpreadTable& table, const std::vector<HVector>& h_rx,
                                    const std::vector<HVector>& h_tx) {
  MatrixXcd H = MatrixXcd::Zero(static_cast<Eigen::Index>(h_rx.size()),
                                static_cast<Eigen::Index>(h_tx.size()));
  const AngularGrid& gr = table.grid_r;
  const AngularGrid& gt = table.grid_t;

  // smooth tau part through the angular table
  for (std::size_t m = 0; m < h_rx.size(); ++m)
    for (std::size_t n = 0; n < h_tx.size(); ++n) {
      cplx acc = 0.0;
      for (std::size_t ri = 0; ri < gr.size(); ++ri) {
        if (table.s_support_r[ri].empty()) continue;
        const CVec3 hrv = h_rx[m].evaluate_sum(gr.nodes[ri]);
        for (std::size_t ti = 0; ti < gt.size(); ++ti) {
          if (table.s_support_t[ti].empty()) continue;
          const CVec3 htv = h_tx[n].evaluate_sum(gt.nodes[ti]);
          acc += gr.weights[ri] * gt.weights[ti] *
                 hrv.cwiseProduct(table.block(ri, ti) * htv).sum();
        }
      }
      H(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)) = acc;
    }

  // delta part through the collocation diagonal
  if (table.kernel && !table.kernel->empty()) {
    const ScatteringKernel& k = *table.kernel;
    const double r4 = std::pow(table.enclosure_radius, 4);
    const double pref = -r4 / (16.0 * constants::pi * constants::pi);
    for (std::size_t m = 0; m < h_rx.size(); ++m)
      for (std::size_t n = 0; n < h_tx.size(); ++n) {
        cplx acc = 0.0;
        for (std::size_t p = 0; p < k.size(); ++p) {
          const CVec3 hrv = h_rx[m].evaluate_sum(k.omega_r(p));
          const CVec3 htv = h_tx[n].evaluate_sum(k.omega_t(p));
          acc += k.points().weights[p] / (k.s_r(p) * k.s_t(p)) *
                 hrv.cwiseProduct(k.theta(p) * htv).sum();
        }
        H(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)) += pref * acc;
      }
  }
  return H;
}

}  // namespace mimoscatter
