#include "mimoscatter/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace mimoscatter {

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n >= 1 required");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(constants::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 0; k < n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k + 1.0) * x * p1 - k * p2) / (k + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
    weights[n - 1 - i] = weights[i];
  }
}

void segment_rule(double a, double b, int n, std::vector<double>& nodes,
                  std::vector<double>& weights) {
  std::vector<double> xs, ws;
  gauss_legendre(n, xs, ws);
  nodes.resize(n);
  weights.resize(n);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (int i = 0; i < n; ++i) {
    nodes[i] = mid + half * xs[i];
    weights[i] = half * ws[i];
  }
}

namespace {

CollocationSet radial_angular_product(const Vec3& center, double r0, double r1, int nr,
                                      const std::string& id) {
  const int ntheta = 2 * nr;
  const int nphi = 4 * nr;
  std::vector<double> rn, rw, cn, cw;
  segment_rule(r0, r1, nr, rn, rw);
  gauss_legendre(ntheta, cn, cw);

  CollocationSet set;
  set.regionId = id;
  set.points.reserve(static_cast<std::size_t>(nr) * ntheta * nphi);
  set.weights.reserve(set.points.capacity());
  for (int ir = 0; ir < nr; ++ir) {
    const double r = rn[ir];
    for (int it = 0; it < ntheta; ++it) {
      const double ct = cn[it];
      const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
      for (int ip = 0; ip < nphi; ++ip) {
        const double phi = 2.0 * constants::pi * ip / nphi;
        const Vec3 dir(st * std::cos(phi), st * std::sin(phi), ct);
        set.points.push_back(center + r * dir);
        set.weights.push_back(r * r * rw[ir] * cw[it] * (2.0 * constants::pi / nphi));
      }
    }
  }
  return set;
}

}  // namespace

CollocationSet ball_collocation(const Vec3& center, double radius, int nr,
                                const std::string& id) {
  if (nr < 1) throw std::invalid_argument("ball_collocation: nr >= 1");
  return radial_angular_product(center, 0.0, radius, nr, id);
}

CollocationSet shell_collocation(const Vec3& center, double r0, double r1, int nr,
                                 const std::string& id) {
  if (!(r1 > r0 && r0 >= 0.0)) throw std::invalid_argument("shell_collocation: bad radii");
  return radial_angular_product(center, r0, r1, nr, id);
}

DiscQuadrature disc_quadrature(const Vec3& center, const Vec3& normal, double radius,
                               int n_radial, int n_angular) {
  DiscQuadrature q;
  q.normal = normal.normalized();
  // orthonormal frame on the disc
  Vec3 t1 = q.normal.cross(Vec3::UnitX());
  if (t1.norm() < 1e-8) t1 = q.normal.cross(Vec3::UnitY());
  t1.normalize();
  const Vec3 t2 = q.normal.cross(t1);

  // Gauss nodes in u = (rho/R)^2 make the area weights exact.
  std::vector<double> un, uw;
  segment_rule(0.0, 1.0, n_radial, un, uw);
  const double area = constants::pi * radius * radius;
  for (int ir = 0; ir < n_radial; ++ir) {
    const double rho = radius * std::sqrt(un[ir]);
    for (int ia = 0; ia < n_angular; ++ia) {
      const double phi = 2.0 * constants::pi * (ia + 0.5) / n_angular;
      q.points.push_back(center + rho * (std::cos(phi) * t1 + std::sin(phi) * t2));
      q.weights.push_back(area * uw[ir] / n_angular);
    }
  }
  return q;
}

AngularGrid sphere_grid(int n_theta, int n_phi) {
  if (n_theta < 1 || n_phi < 1) throw std::invalid_argument("sphere_grid: bad sizes");
  AngularGrid grid;
  grid.n_theta = n_theta;
  grid.n_phi = n_phi;
  std::vector<double> cn, cw;
  gauss_legendre(n_theta, cn, cw);
  for (int it = 0; it < n_theta; ++it) {
    const double ct = cn[it];
    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    for (int ip = 0; ip < n_phi; ++ip) {
      const double phi = 2.0 * constants::pi * ip / n_phi;
      grid.nodes.emplace_back(st * std::cos(phi), st * std::sin(phi), ct);
      grid.weights.push_back(cw[it] * 2.0 * constants::pi / n_phi);
    }
  }
  return grid;
}

int radial_order_for_count(int target_count) {
  if (target_count < 8) throw std::invalid_argument("sample_region: targetCount >= 8");
  int nr = 1;
  while (8 * (nr + 1) * (nr + 1) * (nr + 1) <= target_count) ++nr;
  return nr;
}

}  // namespace mimoscatter
