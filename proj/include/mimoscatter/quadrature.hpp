// quadrature.hpp — deterministic collocation grids for balls, shells, discs
#pragma once

#include <string>
#include <vector>

#include "mimoscatter/geom.hpp"

namespace mimoscatter {

/// Discrete carrier of a region: quadrature points and volume weights.
struct CollocationSet {
  std::string regionId;
  std::vector<Vec3> points;
  std::vector<double> weights;  // m^3, all positive

  std::size_t size() const { return points.size(); }
  double total_weight() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
  void append(const CollocationSet& other) {
    points.insert(points.end(), other.points.begin(), other.points.end());
    weights.insert(weights.end(), other.weights.begin(), other.weights.end());
  }
};

/// Gauss-Legendre nodes/weights on [-1,1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Product rule over a ball: nr Gauss points in radius (r^2-weighted),
/// 2*nr in cos(theta), 4*nr uniform in phi. Total 8*nr^3 points, weights
/// summing to the ball volume (exactly for nr >= 2).
CollocationSet ball_collocation(const Vec3& center, double radius, int nr,
                                const std::string& id = {});

/// Spherical shell r0 <= |x-center| <= r1, same angular layout.
CollocationSet shell_collocation(const Vec3& center, double r0, double r1, int nr,
                                 const std::string& id = {});

/// Polar quadrature of a disc (center, unit normal, radius); weights sum to
/// the disc area exactly. Used for wire sections.
struct DiscQuadrature {
  std::vector<Vec3> points;
  std::vector<double> weights;  // m^2
  Vec3 normal;
};
DiscQuadrature disc_quadrature(const Vec3& center, const Vec3& normal, double radius,
                               int n_radial, int n_angular);

/// S^2 angular grid: Gauss-Legendre in cos(theta) x uniform in phi,
/// weights summing to 4*pi.
struct AngularGrid {
  std::vector<Vec3> nodes;      // unit vectors
  std::vector<double> weights;  // solid angle
  int n_theta = 0, n_phi = 0;

  std::size_t size() const { return nodes.size(); }
};
AngularGrid sphere_grid(int n_theta, int n_phi);

/// Gauss-Legendre nodes on a segment [a, b].
void segment_rule(double a, double b, int n, std::vector<double>& nodes,
                  std::vector<double>& weights);

/// Map a requested point count to the radial order of ball_collocation.
int radial_order_for_count(int target_count);

}  // namespace mimoscatter
