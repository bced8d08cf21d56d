// scene.hpp — scene description, material fields, sources, separation geometry
#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mimoscatter/frequency.hpp"
#include "mimoscatter/geom.hpp"
#include "mimoscatter/quadrature.hpp"

namespace mimoscatter {

enum class Role { Transmitter, Receiver, Scatterer };

const char* role_name(Role r);

/// Smooth radial bump q(s) = (1-s^2)^4 on s = |x-c|/a <= 1; closed-form
/// first and second derivatives keep grad(ln k^2) analytic.
struct BumpProfile {
  double support_radius = 0.0;  // a, m

  double value(double s) const;
  double dvalue(double s) const;   // dq/ds
  double d2value(double s) const;  // d2q/ds2
};

struct MaterialProfile {
  Role kind = Role::Scatterer;
  double delta_eps_peak = 0.0;  // dimensionless
  double sigma_peak = 0.0;      // S/m
  BumpProfile shape;
};

struct WireSection {
  Vec3 center = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();   // unit
  double radius = 0.0;           // m
  double half_length = 0.0;      // m, axial extent of the current carrier
};

struct Region {
  std::string id;
  Role role = Role::Scatterer;
  Vec3 center = Vec3::Zero();
  MaterialProfile profile;
  std::optional<WireSection> wire;

  double support_radius() const { return profile.shape.support_radius; }
  bool contains(const Vec3& x) const {
    return (x - center).norm() <= support_radius();
  }
  double delta_eps(const Vec3& x) const;
  double sigma(const Vec3& x) const;
  Vec3 grad_delta_eps(const Vec3& x) const;
  Vec3 grad_sigma(const Vec3& x) const;
  Mat3 hess_delta_eps(const Vec3& x) const;
  Mat3 hess_sigma(const Vec3& x) const;
};

struct SolverDefaults {
  int quad_level = 1;       // radial order of region collocation
  int born_order = 8;
  int angular_theta = 16;
  int angular_phi = 32;
  double cutoff_width_frac = 0.25;  // w = frac * r
};

/// Group selector for the perturbation split.
struct RoleMask {
  bool transmitter = false, receiver = false, scatterer = false;

  static RoleMask all() { return {true, true, true}; }
  static RoleMask only(Role r);
  bool accepts(Role r) const;
};

struct SceneLayout {
  std::vector<Region> regions;
  Vec3 rx_anchor = Vec3::Zero();  // e, receiver cluster center
  double enclosure_radius = 0.0;  // r
  double cutoff_width = 0.0;      // w
  Frequency frequency{1.0};
  SolverDefaults solver;

  // derived separation geometry (filled by validation)
  double d_tr = 0.0;
  double d_m = std::numeric_limits<double>::infinity();

  std::vector<int> regions_with(Role role) const;
  const Region& region(int idx) const { return regions.at(static_cast<std::size_t>(idx)); }

  int antenna_count(Role role) const;
  /// Index into `regions` of the n-th antenna (0-based) of the given role.
  int antenna_region(Role role, int n) const;

  /// delta k^2 restricted to `mask` (total when mask = all).
  cplx delta_k2(const Vec3& x, const Frequency& f, const RoleMask& mask = RoleMask::all()) const;
  CVec3 grad_delta_k2(const Vec3& x, const Frequency& f, const RoleMask& mask = RoleMask::all()) const;
  CMat3 hess_delta_k2(const Vec3& x, const Frequency& f, const RoleMask& mask = RoleMask::all()) const;

  cplx k2(const Vec3& x, const Frequency& f) const {
    const double k0 = f.k0();
    return k0 * k0 + delta_k2(x, f);
  }
  /// grad ln(k^2); throws when |k^2| collapses (misconfigured profile).
  CVec3 grad_log_k2(const Vec3& x, const Frequency& f, const RoleMask& mask = RoleMask::all()) const;
  CMat3 hess_log_k2(const Vec3& x, const Frequency& f, const RoleMask& mask = RoleMask::all()) const;

  double epsilon(const Vec3& x) const;  // absolute permittivity, F/m
  double sigma(const Vec3& x) const;    // S/m

  /// Run all layout invariants; throws std::runtime_error naming the violation.
  void validate() const;

  /// Refresh the derived D_TR / D_M after editing regions.
  void recompute_separations();

  /// Scene surgery used by sweeps and environment-independence tests.
  SceneLayout with_scaled_antennas(double s) const;
  SceneLayout with_scaled_scatterer_distance(double m) const;
  SceneLayout without_role(Role role) const;
};

/// Normalized source current of one transmitting antenna: axially directed,
/// constant across the wire disc, smoothly tapered along the axis; unit flux
/// through the wire section.
struct SourceCurrent {
  int antennaIndex = 0;
  Vec3 axis = Vec3::UnitZ();
  Vec3 section_center = Vec3::Zero();
  double wire_radius = 0.0;
  double half_length = 0.0;
  double feed_current = 1.0;  // I_in, A

  CVec3 density(const Vec3& x) const;  // A/m^2, normalized (unit flux)
  /// Quadrature samples of the normalized density (positions, volume
  /// weights, values). Deterministic given the resolution.
  struct Samples {
    std::vector<Vec3> points;
    std::vector<double> weights;
    std::vector<CVec3> values;
  };
  Samples sample(int n_radial = 4, int n_angular = 8, int n_axial = 6) const;
  /// Flux of the normalized density through the wire section by quadrature.
  cplx flux(int n_radial = 8, int n_angular = 16) const;
};

SourceCurrent normalized_current(int n, const SceneLayout& scene);

/// Parse and validate a JSON scene document (schema 1, SI units).
SceneLayout load_scene(const std::string& text);
SceneLayout load_scene_file(const std::string& path);

/// Collocation grid of one region's support (spec: sample_region).
CollocationSet sample_region(const Region& region, int target_count);
CollocationSet sample_region_level(const Region& region, int level);

}  // namespace mimoscatter
