#include "mimoscatter/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace mimoscatter {

using nlohmann::json;

const char* role_name(Role r) {
  switch (r) {
    case Role::Transmitter: return "transmitter";
    case Role::Receiver: return "receiver";
    case Role::Scatterer: return "scatterer";
  }
  return "?";
}

double BumpProfile::value(double s) const {
  if (s >= 1.0) return 0.0;
  const double u = 1.0 - s * s;
  const double u2 = u * u;
  return u2 * u2;
}

double BumpProfile::dvalue(double s) const {
  if (s >= 1.0) return 0.0;
  const double u = 1.0 - s * s;
  return -8.0 * s * u * u * u;
}

double BumpProfile::d2value(double s) const {
  if (s >= 1.0) return 0.0;
  const double u = 1.0 - s * s;
  return -8.0 * u * u * u + 48.0 * s * s * u * u;
}

namespace {

double radial_value(const Region& r, const Vec3& x, double peak) {
  if (peak == 0.0) return 0.0;
  const double a = r.support_radius();
  const double s = (x - r.center).norm() / a;
  return peak * r.profile.shape.value(s);
}

Vec3 radial_grad(const Region& r, const Vec3& x, double peak) {
  if (peak == 0.0) return Vec3::Zero();
  const double a = r.support_radius();
  const Vec3 d = x - r.center;
  const double rho = d.norm();
  if (rho == 0.0 || rho >= a) return Vec3::Zero();
  const double s = rho / a;
  return (peak * r.profile.shape.dvalue(s) / a) * (d / rho);
}

Mat3 radial_hess(const Region& r, const Vec3& x, double peak) {
  if (peak == 0.0) return Mat3::Zero();
  const double a = r.support_radius();
  const Vec3 d = x - r.center;
  const double rho = d.norm();
  if (rho >= a) return Mat3::Zero();
  const double s = rho / a;
  const double q2 = r.profile.shape.d2value(s);
  if (rho < 1e-14 * a) return (peak * q2 / (a * a)) * Mat3::Identity();
  const double q1 = r.profile.shape.dvalue(s);
  const Vec3 u = d / rho;
  const Mat3 uu = u * u.transpose();
  return (peak / (a * a)) * (q2 * uu + (q1 / s) * (Mat3::Identity() - uu));
}

}  // namespace

double Region::delta_eps(const Vec3& x) const { return radial_value(*this, x, profile.delta_eps_peak); }
double Region::sigma(const Vec3& x) const { return radial_value(*this, x, profile.sigma_peak); }
Vec3 Region::grad_delta_eps(const Vec3& x) const { return radial_grad(*this, x, profile.delta_eps_peak); }
Vec3 Region::grad_sigma(const Vec3& x) const { return radial_grad(*this, x, profile.sigma_peak); }
Mat3 Region::hess_delta_eps(const Vec3& x) const { return radial_hess(*this, x, profile.delta_eps_peak); }
Mat3 Region::hess_sigma(const Vec3& x) const { return radial_hess(*this, x, profile.sigma_peak); }

RoleMask RoleMask::only(Role r) {
  RoleMask m;
  if (r == Role::Transmitter) m.transmitter = true;
  if (r == Role::Receiver) m.receiver = true;
  if (r == Role::Scatterer) m.scatterer = true;
  return m;
}

bool RoleMask::accepts(Role r) const {
  switch (r) {
    case Role::Transmitter: return transmitter;
    case Role::Receiver: return receiver;
    case Role::Scatterer: return scatterer;
  }
  return false;
}

std::vector<int> SceneLayout::regions_with(Role role) const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(regions.size()); ++i)
    if (regions[static_cast<std::size_t>(i)].role == role) out.push_back(i);
  return out;
}

int SceneLayout::antenna_count(Role role) const {
  return static_cast<int>(regions_with(role).size());
}

int SceneLayout::antenna_region(Role role, int n) const {
  const auto idx = regions_with(role);
  if (n < 0 || n >= static_cast<int>(idx.size())) {
    std::ostringstream os;
    os << "antenna index " << n << " out of range for role " << role_name(role);
    throw std::out_of_range(os.str());
  }
  return idx[static_cast<std::size_t>(n)];
}

cplx SceneLayout::delta_k2(const Vec3& x, const Frequency& f, const RoleMask& mask) const {
  const double k02 = f.k0() * f.k0();
  cplx out = 0.0;
  for (const Region& r : regions) {
    if (!mask.accepts(r.role) || !r.contains(x)) continue;
    out += r.delta_eps(x) * k02 - J * constants::mu0 * f.omega * r.sigma(x);
  }
  return out;
}

CVec3 SceneLayout::grad_delta_k2(const Vec3& x, const Frequency& f, const RoleMask& mask) const {
  const double k02 = f.k0() * f.k0();
  CVec3 out = CVec3::Zero();
  for (const Region& r : regions) {
    if (!mask.accepts(r.role) || !r.contains(x)) continue;
    out += k02 * r.grad_delta_eps(x).cast<cplx>() -
           J * constants::mu0 * f.omega * r.grad_sigma(x).cast<cplx>();
  }
  return out;
}

CMat3 SceneLayout::hess_delta_k2(const Vec3& x, const Frequency& f, const RoleMask& mask) const {
  const double k02 = f.k0() * f.k0();
  CMat3 out = CMat3::Zero();
  for (const Region& r : regions) {
    if (!mask.accepts(r.role) || !r.contains(x)) continue;
    out += k02 * r.hess_delta_eps(x).cast<cplx>() -
           J * constants::mu0 * f.omega * r.hess_sigma(x).cast<cplx>();
  }
  return out;
}

CVec3 SceneLayout::grad_log_k2(const Vec3& x, const Frequency& f, const RoleMask& mask) const {
  const cplx k2tot = k2(x, f);
  const double k02 = f.k0() * f.k0();
  if (std::abs(k2tot) < 1e-12 * k02)
    throw std::runtime_error("grad_log_k2: degenerate material, |k^2| ~ 0 at evaluation point");
  return grad_delta_k2(x, f, mask) / k2tot;
}

CMat3 SceneLayout::hess_log_k2(const Vec3& x, const Frequency& f, const RoleMask& mask) const {
  const cplx k2tot = k2(x, f);
  const double k02 = f.k0() * f.k0();
  if (std::abs(k2tot) < 1e-12 * k02)
    throw std::runtime_error("hess_log_k2: degenerate material at evaluation point");
  const CVec3 g = grad_delta_k2(x, f, mask);
  return hess_delta_k2(x, f, mask) / k2tot - (g * g.transpose()) / (k2tot * k2tot);
}

double SceneLayout::epsilon(const Vec3& x) const {
  double rel = 1.0;
  for (const Region& r : regions)
    if (r.contains(x)) rel += r.delta_eps(x);
  return rel * constants::eps0;
}

double SceneLayout::sigma(const Vec3& x) const {
  double s = 0.0;
  for (const Region& r : regions)
    if (r.contains(x)) s += r.sigma(x);
  return s;
}

namespace {

double surface_distance(const Region& a, const Region& b) {
  return (a.center - b.center).norm() - a.support_radius() - b.support_radius();
}

void check_wire(const Region& r) {
  if (!r.wire) return;
  const WireSection& w = *r.wire;
  const double reach = (w.center - r.center).norm() +
                       std::sqrt(w.half_length * w.half_length + w.radius * w.radius);
  if (reach > r.support_radius()) {
    std::ostringstream os;
    os << "wire section of region '" << r.id << "' exits the region support";
    throw std::runtime_error(os.str());
  }
  if (std::abs(w.normal.norm() - 1.0) > 1e-9)
    throw std::runtime_error("wire normal of region '" + r.id + "' is not a unit vector");
}

}  // namespace

void SceneLayout::validate() const {
  if (regions.empty()) throw std::runtime_error("scene has no regions");
  if (enclosure_radius <= 0.0) throw std::runtime_error("enclosure radius must be positive");
  if (!(cutoff_width > 0.0 && cutoff_width < enclosure_radius))
    throw std::runtime_error("cutoff transition width must lie in (0, r)");

  for (const Region& r : regions) {
    if (r.support_radius() <= 0.0)
      throw std::runtime_error("region '" + r.id + "' has nonpositive support radius");
    if (1.0 + r.profile.delta_eps_peak <= 0.0)
      throw std::runtime_error("region '" + r.id + "' drives relative permittivity nonpositive");
    if (r.profile.sigma_peak < 0.0)
      throw std::runtime_error("region '" + r.id + "' has negative conductivity");
    if (r.role == Role::Scatterer && r.profile.sigma_peak != 0.0)
      throw std::runtime_error("scatterer '" + r.id + "' must have zero conductivity");
    if ((r.role == Role::Transmitter || r.role == Role::Receiver) && !r.wire)
      throw std::runtime_error("antenna '" + r.id + "' is missing a wire section");
    check_wire(r);
  }

  for (std::size_t i = 0; i < regions.size(); ++i)
    for (std::size_t k = i + 1; k < regions.size(); ++k)
      if (surface_distance(regions[i], regions[k]) <= 0.0) {
        std::ostringstream os;
        os << "disjoint supports violated: regions '" << regions[i].id << "' and '"
           << regions[k].id << "' overlap";
        throw std::runtime_error(os.str());
      }

  const auto tx = regions_with(Role::Transmitter);
  const auto rx = regions_with(Role::Receiver);
  const auto sc = regions_with(Role::Scatterer);
  if (tx.empty()) throw std::runtime_error("scene has no transmitting antenna");
  if (rx.empty()) throw std::runtime_error("scene has no receiving antenna");

  double dtr = std::numeric_limits<double>::infinity();
  for (int i : tx)
    for (int k : rx) dtr = std::min(dtr, surface_distance(region(i), region(k)));
  if (!(dtr > 0.0)) throw std::runtime_error("transmitter/receiver separation D_TR must be positive");

  double dm = std::numeric_limits<double>::infinity();
  for (int s : sc)
    for (int a : tx)
      dm = std::min(dm, surface_distance(region(s), region(a)));
  for (int s : sc)
    for (int a : rx)
      dm = std::min(dm, surface_distance(region(s), region(a)));
  if (!sc.empty() && !(dm > 0.0))
    throw std::runtime_error("antenna/scatterer separation D_M must be positive");

  const double r = enclosure_radius;
  const double limit = std::min(dtr / 2.0, sc.empty() ? std::numeric_limits<double>::infinity() : dm / 2.0);
  if (r > limit) {
    std::ostringstream os;
    os << "enclosure radius too large: r = " << r << " exceeds min(D_M/2, D_TR/2) = " << limit;
    throw std::runtime_error(os.str());
  }

  // Cutoff plateaus must cover the antenna clusters and the annuli must be
  // clear of every support (the annuli live in free space).
  const double w = cutoff_width;
  for (int i : tx) {
    const Region& rg = region(i);
    if (rg.center.norm() + rg.support_radius() >= r - w)
      throw std::runtime_error("transmitter '" + rg.id + "' is not inside the J_T plateau |x| <= r-w");
  }
  for (int i : rx) {
    const Region& rg = region(i);
    if ((rg.center - rx_anchor).norm() + rg.support_radius() >= r - w)
      throw std::runtime_error("receiver '" + rg.id + "' is not inside the J_R plateau |x-e| <= r-w");
  }
  for (const Region& rg : regions) {
    for (const Vec3& anchor : {Vec3(Vec3::Zero()), rx_anchor}) {
      const double d = (rg.center - anchor).norm();
      const double lo = d - rg.support_radius(), hi = d + rg.support_radius();
      if (hi >= r - w && lo <= r) {
        std::ostringstream os;
        os << "region '" << rg.id << "' intersects the cutoff annulus about "
           << (anchor.isZero() ? "the origin" : "e");
        throw std::runtime_error(os.str());
      }
    }
  }
  if (rx_anchor.norm() <= 2.0 * r)
    throw std::runtime_error("cutoff annuli about the origin and e overlap: |e| <= 2r");
}

void SceneLayout::recompute_separations() {
  const auto tx = regions_with(Role::Transmitter);
  const auto rx = regions_with(Role::Receiver);
  const auto sc = regions_with(Role::Scatterer);
  d_tr = std::numeric_limits<double>::infinity();
  for (int i : tx)
    for (int k : rx) d_tr = std::min(d_tr, surface_distance(region(i), region(k)));
  d_m = std::numeric_limits<double>::infinity();
  for (int s : sc) {
    for (int a : tx) d_m = std::min(d_m, surface_distance(region(s), region(a)));
    for (int a : rx) d_m = std::min(d_m, surface_distance(region(s), region(a)));
  }
}

SceneLayout SceneLayout::with_scaled_antennas(double s) const {
  if (!(s > 0.0 && s <= 1.0))
    throw std::invalid_argument("antenna scale factor must lie in (0, 1]");
  SceneLayout out = *this;
  for (Region& r : out.regions) {
    if (r.role == Role::Scatterer) continue;
    r.profile.shape.support_radius *= s;
    if (r.wire) {
      r.wire->center = r.center + s * (r.wire->center - r.center);
      r.wire->radius *= s;
      r.wire->half_length *= s;
    }
  }
  out.recompute_separations();
  return out;
}

SceneLayout SceneLayout::with_scaled_scatterer_distance(double m) const {
  if (!(m >= 1.0)) throw std::invalid_argument("distance multiplier must be >= 1");
  SceneLayout out = *this;
  const Vec3 mid = 0.5 * rx_anchor;
  for (Region& r : out.regions)
    if (r.role == Role::Scatterer) r.center = mid + m * (r.center - mid);
  out.recompute_separations();
  return out;
}

SceneLayout SceneLayout::without_role(Role role) const {
  SceneLayout out = *this;
  out.regions.clear();
  for (const Region& r : regions)
    if (r.role != role) out.regions.push_back(r);
  out.recompute_separations();
  return out;
}

CVec3 SourceCurrent::density(const Vec3& x) const {
  const Vec3 d = x - section_center;
  const double xi = d.dot(axis);
  if (std::abs(xi) >= half_length) return CVec3::Zero();
  const double rho = (d - xi * axis).norm();
  if (rho > wire_radius) return CVec3::Zero();
  const double t = xi / half_length;
  const double taper = (1.0 - t * t) * (1.0 - t * t);
  const double amp = taper / (constants::pi * wire_radius * wire_radius);
  return amp * axis.cast<cplx>();
}

SourceCurrent::Samples SourceCurrent::sample(int n_radial, int n_angular, int n_axial) const {
  Samples s;
  std::vector<double> xn, xw;
  segment_rule(-half_length, half_length, n_axial, xn, xw);
  const DiscQuadrature disc = disc_quadrature(section_center, axis, wire_radius, n_radial, n_angular);
  for (int ia = 0; ia < n_axial; ++ia) {
    for (std::size_t id = 0; id < disc.points.size(); ++id) {
      const Vec3 p = disc.points[id] + xn[static_cast<std::size_t>(ia)] * axis;
      s.points.push_back(p);
      s.weights.push_back(disc.weights[id] * xw[static_cast<std::size_t>(ia)]);
      s.values.push_back(density(p));
    }
  }
  return s;
}

cplx SourceCurrent::flux(int n_radial, int n_angular) const {
  const DiscQuadrature disc = disc_quadrature(section_center, axis, wire_radius, n_radial, n_angular);
  cplx f = 0.0;
  for (std::size_t i = 0; i < disc.points.size(); ++i)
    f += disc.weights[i] * density(disc.points[i]).dot(axis.cast<cplx>().conjugate());
  return f;
}

SourceCurrent normalized_current(int n, const SceneLayout& scene) {
  const Region& r = scene.region(scene.antenna_region(Role::Transmitter, n));
  if (!r.wire) throw std::runtime_error("antenna '" + r.id + "' is missing a wire section");
  SourceCurrent s;
  s.antennaIndex = n;
  s.axis = r.wire->normal;
  s.section_center = r.wire->center;
  s.wire_radius = r.wire->radius;
  s.half_length = r.wire->half_length;
  return s;
}

CollocationSet sample_region(const Region& region, int target_count) {
  const int nr = radial_order_for_count(target_count);
  return ball_collocation(region.center, region.support_radius(), nr, region.id);
}

CollocationSet sample_region_level(const Region& region, int level) {
  if (level < 0) throw std::invalid_argument("quad level must be >= 0");
  return ball_collocation(region.center, region.support_radius(), level + 2, region.id);
}

namespace {

Vec3 parse_vec3(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3)
    throw std::runtime_error("scene parse error: '" + what + "' must be a 3-array");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

Role parse_role(const std::string& s) {
  if (s == "transmitter") return Role::Transmitter;
  if (s == "receiver") return Role::Receiver;
  if (s == "scatterer") return Role::Scatterer;
  throw std::runtime_error("scene parse error: unknown role '" + s + "'");
}

}  // namespace

SceneLayout load_scene(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("scene parse error: ") + e.what());
  }
  if (!doc.contains("schema") || doc["schema"].get<int>() != 1)
    throw std::runtime_error("scene parse error: expected \"schema\": 1");

  SceneLayout scene{};

  const json& fq = doc.at("frequency");
  const double eta = fq.value("eta", 0.0);
  if (fq.contains("omega"))
    scene.frequency = Frequency(fq["omega"].get<double>(), eta);
  else if (fq.contains("f_hz"))
    scene.frequency = Frequency::from_hz(fq["f_hz"].get<double>(), eta);
  else
    throw std::runtime_error("scene parse error: frequency needs 'omega' or 'f_hz'");

  const json& geom = doc.at("geometry");
  scene.rx_anchor = parse_vec3(geom.at("rx_anchor"), "geometry.rx_anchor");
  scene.enclosure_radius = geom.at("enclosure_radius").get<double>();

  if (doc.contains("solver")) {
    const json& sv = doc["solver"];
    scene.solver.quad_level = sv.value("quad_level", scene.solver.quad_level);
    scene.solver.born_order = sv.value("born_order", scene.solver.born_order);
    if (sv.contains("angular")) {
      scene.solver.angular_theta = sv["angular"][0].get<int>();
      scene.solver.angular_phi = sv["angular"][1].get<int>();
    }
    scene.solver.cutoff_width_frac = sv.value("cutoff_width_frac", scene.solver.cutoff_width_frac);
  }
  scene.cutoff_width = scene.solver.cutoff_width_frac * scene.enclosure_radius;

  for (const json& jr : doc.at("regions")) {
    Region r;
    r.id = jr.at("id").get<std::string>();
    r.role = parse_role(jr.at("role").get<std::string>());
    r.center = parse_vec3(jr.at("center"), "region center");
    r.profile.kind = r.role;
    r.profile.shape.support_radius = jr.at("support_radius").get<double>();
    r.profile.delta_eps_peak = jr.value("delta_eps_peak", 0.0);
    r.profile.sigma_peak = jr.value("sigma_peak", 0.0);
    if (jr.contains("wire")) {
      WireSection w;
      const json& jw = jr["wire"];
      w.center = jw.contains("center") ? parse_vec3(jw["center"], "wire center") : r.center;
      w.normal = parse_vec3(jw.at("normal"), "wire normal").normalized();
      w.radius = jw.at("radius").get<double>();
      w.half_length = jw.at("half_length").get<double>();
      r.wire = w;
    }
    scene.regions.push_back(std::move(r));
  }

  scene.recompute_separations();
  scene.validate();
  return scene;
}

SceneLayout load_scene_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scene file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return load_scene(os.str());
}

}  // namespace mimoscatter
