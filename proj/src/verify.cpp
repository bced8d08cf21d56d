#include "mimoscatter/verify.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "mimoscatter/report.hpp"
#include "mimoscatter/spread.hpp"

namespace mimoscatter {

namespace {

constexpr const char* kBasic = R"({
  "schema": 1,
  "frequency": {"f_hz": 1.5e8},
  "geometry": {"rx_anchor": [3.2, 0.0, 0.0], "enclosure_radius": 0.6},
  "solver": {"quad_level": 0, "born_order": 8, "angular": [12, 24]},
  "regions": [
    {"id": "tx1", "role": "transmitter", "center": [0.0, 0.22, 0.0], "support_radius": 0.12,
     "sigma_peak": 0.02,
     "wire": {"normal": [0, 0, 1], "radius": 0.03, "half_length": 0.05}},
    {"id": "tx2", "role": "transmitter", "center": [0.0, -0.22, 0.0], "support_radius": 0.12,
     "sigma_peak": 0.02,
     "wire": {"normal": [0, 0, 1], "radius": 0.03, "half_length": 0.05}},
    {"id": "rx1", "role": "receiver", "center": [3.2, 0.22, 0.0], "support_radius": 0.12,
     "sigma_peak": 0.02,
     "wire": {"normal": [0, 0, 1], "radius": 0.03, "half_length": 0.05}},
    {"id": "rx2", "role": "receiver", "center": [3.2, -0.22, 0.0], "support_radius": 0.12,
     "sigma_peak": 0.02,
     "wire": {"normal": [0, 0, 1], "radius": 0.03, "half_length": 0.05}},
    {"id": "sc1", "role": "scatterer", "center": [1.6, 1.35, 0.25], "support_radius": 0.25,
     "delta_eps_peak": 1.2},
    {"id": "sc2", "role": "scatterer", "center": [1.45, -1.3, -0.2], "support_radius": 0.25,
     "delta_eps_peak": 1.2}
  ]
})";

constexpr const char* kPair = R"({
  "schema": 1,
  "frequency": {"f_hz": 1.5e8},
  "geometry": {"rx_anchor": [3.2, 0.0, 0.0], "enclosure_radius": 0.6},
  "solver": {"quad_level": 0, "born_order": 8, "angular": [12, 24]},
  "regions": [
    {"id": "tx1", "role": "transmitter", "center": [0.0, 0.0, 0.0], "support_radius": 0.12,
     "sigma_peak": 0.02,
     "wire": {"normal": [0, 0, 1], "radius": 0.03, "half_length": 0.05}},
    {"id": "rx1", "role": "receiver", "center": [3.2, 0.0, 0.0], "support_radius": 0.12,
     "sigma_peak": 0.02,
     "wire": {"normal": [0, 0, 1], "radius": 0.03, "half_length": 0.05}}
  ]
})";

constexpr const char* kBorn = R"({
  "schema": 1,
  "frequency": {"f_hz": 1.5e8},
  "geometry": {"rx_anchor": [3.2, 0.0, 0.0], "enclosure_radius": 0.6},
  "solver": {"quad_level": 0, "born_order": 8, "angular": [12, 24]},
  "regions": [
    {"id": "tx1", "role": "transmitter", "center": [0.0, 0.0, 0.0], "support_radius": 0.12,
     "sigma_peak": 0.02,
     "wire": {"normal": [0, 0, 1], "radius": 0.03, "half_length": 0.05}},
    {"id": "rx1", "role": "receiver", "center": [3.2, 0.0, 0.0], "support_radius": 0.12,
     "sigma_peak": 0.02,
     "wire": {"normal": [0, 0, 1], "radius": 0.03, "half_length": 0.05}},
    {"id": "sc1", "role": "scatterer", "center": [1.6, 1.25, 0.0], "support_radius": 0.35,
     "delta_eps_peak": 4.0},
    {"id": "sc2", "role": "scatterer", "center": [1.75, 2.03, 0.1], "support_radius": 0.35,
     "delta_eps_peak": 4.0}
  ]
})";

constexpr const char* kFar = R"({
  "schema": 1,
  "frequency": {"f_hz": 1.5e8},
  "geometry": {"rx_anchor": [3.2, 0.0, 0.0], "enclosure_radius": 0.6},
  "solver": {"quad_level": 0, "born_order": 8, "angular": [10, 20]},
  "regions": [
    {"id": "tx1", "role": "transmitter", "center": [0.0, 0.0, 0.0], "support_radius": 0.12,
     "sigma_peak": 0.02,
     "wire": {"normal": [0, 0, 1], "radius": 0.03, "half_length": 0.05}},
    {"id": "rx1", "role": "receiver", "center": [3.2, 0.0, 0.0], "support_radius": 0.12,
     "sigma_peak": 0.02,
     "wire": {"normal": [0, 0, 1], "radius": 0.03, "half_length": 0.05}},
    {"id": "sc1", "role": "scatterer", "center": [2.0, 10.0, -0.6], "support_radius": 0.35,
     "delta_eps_peak": 1.0}
  ]
})";

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

// ---------------------------------------------------------------- checks

CheckResult check_green_residual() {
  CheckResult res{"green-residual", false, "", 0.0};
  const auto t0 = Clock::now();
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double k0 = 2.0;
  std::vector<double> orders;
  const double h0 = 1e-2;
  while (orders.size() < 200) {
    const Vec3 x(u(rng), u(rng), u(rng));
    const Vec3 y(u(rng), u(rng), u(rng));
    if ((x - y).norm() < 0.3) continue;
    const auto residual = [&](double h) {
      cplx lap = 0.0;
      const cplx center = g0_scalar(x, y, k0);
      for (int c = 0; c < 3; ++c) {
        Vec3 dx = Vec3::Zero();
        dx[c] = h;
        lap += g0_scalar(x + dx, y, k0) + g0_scalar(x - dx, y, k0) - 2.0 * center;
      }
      lap /= h * h;
      return std::abs(-lap - k0 * k0 * center);
    };
    const double r1 = residual(h0), r2 = residual(h0 / 2.0), r3 = residual(h0 / 4.0);
    if (r1 <= 0.0 || r2 <= 0.0 || r3 <= 0.0) continue;
    orders.push_back(std::log2(r1 / r2));
    orders.push_back(std::log2(r2 / r3));
  }
  std::sort(orders.begin(), orders.end());
  const double median = orders[orders.size() / 2];
  res.seconds = seconds_since(t0);
  res.pass = std::abs(median - 2.0) <= 0.3 && res.seconds < 5.0;
  res.details = "median order " + fmt(median) + " over 100 points";
  return res;
}

CheckResult check_oracle_equivalence() {
  CheckResult res{"oracle-equivalence", false, "", 0.0};
  const auto t0 = Clock::now();
  const SceneLayout scene = bench_born();
  const Frequency f = scene.frequency;
  const auto sys = build_full_system(scene, f, 0);

  const ScatterSolution direct = solve_full(sys);
  const double contraction = direct.report().contraction_estimate;

  const SourceTerm src = SourceTerm::from_current(normalized_current(0, scene).sample());
  const VectorXcd x_direct = direct.coupling_for(src);

  SolveReport born_rep;
  const ScatterSolution born = born_series(sys, 8);
  const VectorXcd x_born = born.coupling_for(src, &born_rep);

  const double rel = (x_born - x_direct).norm() / x_direct.norm();

  // late-order geometric decay ratio vs the contraction estimate
  const auto& norms = born_rep.born_order_norms;
  double ratio = 0.0;
  int cnt = 0;
  for (std::size_t i = norms.size() >= 4 ? norms.size() - 4 : 1; i + 1 < norms.size(); ++i)
    if (norms[i] > 0.0) {
      ratio += norms[i + 1] / norms[i];
      ++cnt;
    }
  ratio = cnt > 0 ? ratio / cnt : 0.0;
  const double ratio_err = contraction > 0.0 ? std::abs(ratio - contraction) / contraction : 1.0;

  res.seconds = seconds_since(t0);
  res.pass = contraction <= 0.5 && rel <= 1e-6 && ratio_err <= 0.3 && res.seconds < 60.0;
  res.details = "born-vs-direct rel " + fmt(rel) + ", contraction " + fmt(contraction) +
                ", late decay ratio " + fmt(ratio);
  return res;
}

CheckResult check_lemma1() {
  CheckResult res{"lemma1", false, "", 0.0};
  const auto t0 = Clock::now();
  const SceneLayout scene = bench_pair();
  const Frequency f = scene.frequency;
  std::vector<double> disc;
  for (int level = 0; level <= 2; ++level)
    disc.push_back(lemma1_factorized(scene, 0, f, level).rel_discrepancy);
  res.seconds = seconds_since(t0);
  const double q1 = disc[0] / disc[1], q2 = disc[1] / disc[2];
  res.pass = q1 >= 2.0 && q2 >= 2.0 && res.seconds < 300.0;
  res.details = "discrepancies " + fmt(disc[0]) + " -> " + fmt(disc[1]) + " -> " + fmt(disc[2]);
  return res;
}

CheckResult check_lemma2_scaling() {
  CheckResult res{"lemma2-scaling", false, "", 0.0};
  const auto t0 = Clock::now();
  const SceneLayout base = bench_pair();
  const Frequency f = base.frequency;
  const int level = 1;
  std::vector<double> sqrt_vol, err;
  for (double s : {1.0, 0.5, 0.25, 0.125}) {
    const SceneLayout scene = base.with_scaled_antennas(s);
    const KernelField full_chain = factorized_vector_potential(scene, 0, f, level);
    const KernelField dec_chain = decoupled_vector_potential(scene, 0, f, level);
    CollocationSet probes;
    for (int idx : scene.regions_with(Role::Receiver)) {
      const Region& r = scene.region(idx);
      probes.append(ball_collocation(r.center, 0.55 * r.support_radius(), 1, r.id));
    }
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < probes.size(); ++i) {
      num = std::max(num, (full_chain.value(probes.points[i]) - dec_chain.value(probes.points[i]))
                              .norm());
      den = std::max(den, full_chain.value(probes.points[i]).norm());
    }
    err.push_back(num / den);
    double vol = 0.0;
    for (const Region& r : scene.regions)
      if (r.role != Role::Scatterer)
        vol += 4.0 / 3.0 * constants::pi * std::pow(r.support_radius(), 3);
    sqrt_vol.push_back(std::sqrt(vol));
  }
  const SlopeFit fit = fit_loglog_slope(sqrt_vol, err);
  res.seconds = seconds_since(t0);
  res.pass = fit.slope >= 0.45 && fit.r_squared >= 0.9 && res.seconds < 600.0;
  res.details = "slope " + fmt(fit.slope) + " (R2 " + fmt(fit.r_squared) + "), errors " +
                fmt(err[0]) + ".." + fmt(err[3]);
  return res;
}

CheckResult check_farfield_decay() {
  CheckResult res{"farfield-decay", false, "", 0.0};
  const auto t0 = Clock::now();
  const SceneLayout base = bench_far();
  const Frequency f = base.frequency;
  const int level = 0;
  const AngularGrid grid = sphere_grid(base.solver.angular_theta, base.solver.angular_phi);

  // g-vectors depend only on the antenna sides; reuse across the sweep
  std::vector<GVector> gts = {g_vector_tx(base, 0, f, grid, level)};
  std::vector<GVector> grs = {g_vector_rx(base, 0, f, grid, level)};
  std::vector<HVector> hts = {h_vector(Role::Transmitter, gts[0], f, grid, base.enclosure_radius)};
  std::vector<HVector> hrs = {h_vector(Role::Receiver, grs[0], f, grid, base.enclosure_radius)};

  std::vector<double> dms, lead, gap;
  for (double mult : {1.0, 2.0, 4.0}) {
    const SceneLayout scene = base.with_scaled_scatterer_distance(mult);
    const MidSpreadTable mid_exact = mid_spread(scene, f, grid, level, false);
    const MidSpreadTable mid_free = mid_spread(scene, f, grid, level, true);
    const MatrixXcd h_ref = contract_transfer(grs, mid_exact, gts, scene.enclosure_radius) -
                            contract_transfer(grs, mid_free, gts, scene.enclosure_radius);

    auto kernel = scattering_kernel(scene, f, level);
    SpreadTable table;
    table.kernel = kernel;
    table.grid_r = grid;
    table.grid_t = grid;
    table.enclosure_radius = scene.enclosure_radius;
    const MatrixXcd h_scatt = scatt_transfer(table, hrs, hts, f).transfer.entries;

    dms.push_back(scene.d_m);
    lead.push_back(h_ref.cwiseAbs().maxCoeff());
    gap.push_back((h_scatt - h_ref).cwiseAbs().maxCoeff());
  }
  const SlopeFit lead_fit = fit_loglog_slope(dms, lead);
  const SlopeFit gap_fit = fit_loglog_slope(dms, gap);
  res.seconds = seconds_since(t0);
  res.pass = gap_fit.slope <= lead_fit.slope - 1.0 && res.seconds < 600.0;
  res.details = "lead slope " + fmt(lead_fit.slope) + ", gap slope " + fmt(gap_fit.slope);
  return res;
}

CheckResult check_reciprocity(const std::optional<SceneLayout>& given) {
  CheckResult res{"reciprocity", false, "", 0.0};
  const auto t0 = Clock::now();
  const SceneLayout conducting = given.value_or(bench_basic());
  const SceneLayout lossless = bench_lossless();
  const double m1 = reciprocity_check(conducting, conducting.frequency, 0).max_rel_mismatch;
  const double m2 = reciprocity_check(lossless, lossless.frequency, 0).max_rel_mismatch;
  res.seconds = seconds_since(t0);
  res.pass = m1 <= 1e-8 && m2 <= 1e-8 && res.seconds < 30.0;
  res.details = "max rel mismatch: conducting " + fmt(m1) + ", lossless " + fmt(m2);
  return res;
}

CheckResult check_gvector_env() {
  CheckResult res{"gvector-env", false, "", 0.0};
  const auto t0 = Clock::now();
  const SceneLayout with_env = bench_basic();
  const SceneLayout no_env = with_env.without_role(Role::Scatterer);
  const Frequency f = with_env.frequency;
  const AngularGrid grid = sphere_grid(8, 16);
  double worst = 0.0, scale = 0.0;
  for (int n = 0; n < with_env.antenna_count(Role::Transmitter); ++n) {
    const GVector a = g_vector_tx(with_env, n, f, grid, 0);
    const GVector b = g_vector_tx(no_env, n, f, grid, 0);
    for (std::size_t i = 0; i < grid.size(); ++i)
      for (int blk = 0; blk < 2; ++blk) {
        worst = std::max(worst, (a.per_node[i][static_cast<std::size_t>(blk)] -
                                 b.per_node[i][static_cast<std::size_t>(blk)])
                                    .norm());
        scale = std::max(scale, a.per_node[i][static_cast<std::size_t>(blk)].norm());
      }
  }
  for (int m = 0; m < with_env.antenna_count(Role::Receiver); ++m) {
    const GVector a = g_vector_rx(with_env, m, f, grid, 0);
    const GVector b = g_vector_rx(no_env, m, f, grid, 0);
    for (std::size_t i = 0; i < grid.size(); ++i)
      for (int blk = 0; blk < 2; ++blk) {
        worst = std::max(worst, (a.per_node[i][static_cast<std::size_t>(blk)] -
                                 b.per_node[i][static_cast<std::size_t>(blk)])
                                    .norm());
        scale = std::max(scale, a.per_node[i][static_cast<std::size_t>(blk)].norm());
      }
  }
  const double rel = worst / scale;
  res.seconds = seconds_since(t0);
  res.pass = rel <= 1e-12 && res.seconds < 30.0;
  res.details = "scene-surgery relative change " + fmt(rel);
  return res;
}

CheckResult check_trivial_forms() {
  CheckResult res{"trivial-forms", false, "", 0.0};
  const auto t0 = Clock::now();

  const double cap = capacity(MatrixXcd::Identity(2, 2), 3.0);
  const double cap_err = std::abs(cap - 2.0 * std::log2(2.5));

  const SceneLayout pair = bench_pair();
  const cplx flux = normalized_current(0, pair).flux();
  const double flux_err = std::abs(flux - cplx(1.0, 0.0));

  const Frequency f = pair.frequency;
  const AngularGrid grid = sphere_grid(6, 12);
  auto kernel = scattering_kernel(pair, f, 0);
  SpreadTable table;
  table.kernel = kernel;
  table.grid_r = grid;
  table.grid_t = grid;
  table.enclosure_radius = pair.enclosure_radius;
  const GVector gt = g_vector_tx(pair, 0, f, grid, 0);
  const GVector gr = g_vector_rx(pair, 0, f, grid, 0);
  const std::vector<HVector> ht = {h_vector(Role::Transmitter, gt, f, grid, pair.enclosure_radius)};
  const std::vector<HVector> hr = {h_vector(Role::Receiver, gr, f, grid, pair.enclosure_radius)};
  const double empty_scatt = scatt_transfer(table, hr, ht, f).transfer.entries.cwiseAbs().maxCoeff();

  res.seconds = seconds_since(t0);
  res.pass = cap_err <= 1e-12 && flux_err <= 1e-10 && empty_scatt == 0.0;
  res.details = "capacity err " + fmt(cap_err) + ", flux err " + fmt(flux_err) +
                ", empty-env scatt " + fmt(empty_scatt);
  return res;
}

CheckResult check_maxwell(const std::optional<SceneLayout>& given) {
  CheckResult res{"maxwell", false, "", 0.0};
  const auto t0 = Clock::now();
  const SceneLayout scene = given.value_or(bench_basic());
  const Frequency f = scene.frequency;
  const ScatterSolution sol = solve_full(build_full_system(scene, f, 0));
  const KernelField A = vector_potential(scene, sol, 0);

  // free-space probes between the clusters, away from every support
  std::vector<Vec3> probes = {{1.6, 0.5, 0.4},  {1.2, -0.5, 0.35}, {2.0, 0.3, -0.45},
                              {1.0, 0.55, -0.3}, {2.3, -0.4, 0.3},  {1.6, 0.0, 0.8}};
  const MaxwellResidualReport rep = maxwell_residual(scene, A, f, probes, 0.02);

  bool orders_ok = true;
  std::ostringstream det;
  for (const auto& eq : rep.equations) {
    if (std::abs(eq.order - 2.0) > 0.45) orders_ok = false;
    det << eq.name << " order " << fmt(eq.order) << " ";
  }
  res.seconds = seconds_since(t0);
  res.pass = orders_ok && rep.max_relative_residual < 1e-3 && res.seconds < 120.0;
  res.details = det.str() + "max rel residual " + fmt(rep.max_relative_residual);
  return res;
}

}  // namespace

SceneLayout bench_basic() { return load_scene(kBasic); }
SceneLayout bench_lossless() {
  SceneLayout s = load_scene(kBasic);
  for (Region& r : s.regions) {
    if (r.role == Role::Scatterer) continue;
    r.profile.sigma_peak = 0.0;
    r.profile.delta_eps_peak = 1.0;
  }
  return s;
}
SceneLayout bench_pair() { return load_scene(kPair); }
SceneLayout bench_born() { return load_scene(kBorn); }
SceneLayout bench_far() { return load_scene(kFar); }

std::vector<std::string> verify_check_names() {
  return {"green-residual", "oracle-equivalence", "lemma1",      "lemma2-scaling",
          "farfield-decay", "reciprocity",        "gvector-env", "trivial-forms",
          "maxwell"};
}

CheckResult run_verify_check(const std::string& name, const std::optional<SceneLayout>& scene) {
  if (name == "green-residual") return check_green_residual();
  if (name == "oracle-equivalence") return check_oracle_equivalence();
  if (name == "lemma1") return check_lemma1();
  if (name == "lemma2-scaling") return check_lemma2_scaling();
  if (name == "farfield-decay") return check_farfield_decay();
  if (name == "reciprocity") return check_reciprocity(scene);
  if (name == "gvector-env") return check_gvector_env();
  if (name == "trivial-forms") return check_trivial_forms();
  if (name == "maxwell") return check_maxwell(scene);
  throw std::invalid_argument("unknown check: " + name);
}

std::vector<CheckResult> run_all_checks(const std::optional<SceneLayout>& scene) {
  std::vector<CheckResult> out;
  for (const std::string& name : verify_check_names()) out.push_back(run_verify_check(name, scene));
  return out;
}

}  // namespace mimoscatter
