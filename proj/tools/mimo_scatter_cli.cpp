// mimo-scatter — scene validation, transfer-matrix runs, verification
// suite and sweep drivers around the scattering library
#include <CLI11.hpp>
#include <atomic>
#include <cstdlib>
#include <future>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>

#include "mimoscatter/report.hpp"
#include "mimoscatter/spread.hpp"
#include "mimoscatter/verify.hpp"

namespace ms = mimoscatter;
using nlohmann::json;

namespace {

std::mutex g_write_mutex;

void write_atomic_locked(const std::string& path, const std::string& content) {
  std::lock_guard<std::mutex> lock(g_write_mutex);
  ms::write_file_atomic(path, content);
}

int thread_cap() {
  if (const char* env = std::getenv("MIMO_SCATTER_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

std::pair<int, int> parse_angular(const std::string& spec, int def_t, int def_p) {
  if (spec.empty()) return {def_t, def_p};
  const auto xpos = spec.find('x');
  if (xpos == std::string::npos)
    throw CLI::ValidationError("--angular", "expected THETAxPHI, e.g. 16x32");
  return {std::stoi(spec.substr(0, xpos)), std::stoi(spec.substr(xpos + 1))};
}

std::string freq_tag(double omega) {
  std::ostringstream os;
  os << static_cast<long long>(std::llround(omega / (2.0 * ms::constants::pi))) << "Hz";
  return os.str();
}

struct TransferOutputs {
  json report;
  bool failed = false;
};

TransferOutputs run_transfer_one(const ms::SceneLayout& scene, double f_hz, int quad_level,
                                 const ms::AngularGrid& grid, const std::string& outdir) {
  TransferOutputs out;
  const ms::Frequency f = ms::Frequency::from_hz(f_hz, scene.frequency.eta);
  const std::string tag = freq_tag(f.omega);
  out.report["f_hz"] = f_hz;
  try {
    ms::SolveReport rep;
    const ms::TransferMatrix full = ms::transfer_matrix(scene, f, quad_level, &rep);
    std::cerr << "[solve] stage=full f=" << tag << " n=" << rep.system_size
              << " cond=" << rep.condition_estimate
              << " contraction=" << rep.contraction_estimate << "\n";
    out.report["full_solve"] = ms::solve_report_json(rep);
    write_atomic_locked(outdir + "/H_full_" + tag + ".csv", ms::transfer_matrix_csv(full));

    const ms::TransferMatrix dec = ms::decoupled_transfer(scene, f, grid, quad_level);
    write_atomic_locked(outdir + "/H_decoupled_" + tag + ".csv", ms::transfer_matrix_csv(dec));
    std::cerr << "[solve] stage=decoupled f=" << tag << " nodes=" << grid.size() << "\n";

    // far-field mode: free-space part plus the scattering contribution
    ms::TransferMatrix far;
    far.mode = ms::TransferMatrix::Mode::SpreadFarfield;
    far.omega = f.omega;
    {
      const ms::TransferMatrix free_part =
          ms::decoupled_transfer(scene, f, grid, quad_level, /*free_kernel=*/true);
      auto kernel = ms::scattering_kernel(scene, f, quad_level);
      if (kernel->farfield_weak() && !kernel->empty())
        std::cerr << "[warn] D_M < 10 r: far-field reduction is weak\n";
      ms::SpreadTable table;
      table.kernel = kernel;
      table.grid_r = grid;
      table.grid_t = grid;
      table.enclosure_radius = scene.enclosure_radius;
      std::vector<ms::HVector> hts, hrs;
      for (int n = 0; n < scene.antenna_count(ms::Role::Transmitter); ++n)
        hts.push_back(ms::h_vector(ms::Role::Transmitter,
                                   ms::g_vector_tx(scene, n, f, grid, quad_level), f, grid,
                                   scene.enclosure_radius));
      for (int m = 0; m < scene.antenna_count(ms::Role::Receiver); ++m)
        hrs.push_back(ms::h_vector(ms::Role::Receiver,
                                   ms::g_vector_rx(scene, m, f, grid, quad_level), f, grid,
                                   scene.enclosure_radius));
      const ms::ScattTransferResult scatt = ms::scatt_transfer(table, hrs, hts, f);
      far.entries = free_part.entries + scatt.transfer.entries;
      out.report["farfield_error_bound"] = scatt.error_bound;
    }
    write_atomic_locked(outdir + "/H_spread-farfield_" + tag + ".csv",
                        ms::transfer_matrix_csv(far));

    const std::vector<double> snrs = {0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0};
    write_atomic_locked(outdir + "/capacity_full_" + tag + ".csv",
                        ms::capacity_csv(full.entries, snrs));
    out.report["ok"] = true;
  } catch (const std::exception& e) {
    out.failed = true;
    out.report["ok"] = false;
    out.report["error"] = e.what();
    std::cerr << "[error] f=" << tag << ": " << e.what() << "\n";
  }
  return out;
}

int cmd_validate(const std::string& scene_path) {
  try {
    const ms::SceneLayout scene = ms::load_scene_file(scene_path);
    std::cout << "scene OK: " << scene.regions.size() << " regions, "
              << scene.antenna_count(ms::Role::Transmitter) << " TX, "
              << scene.antenna_count(ms::Role::Receiver) << " RX\n";
    std::cout << "separations: D_TR = " << scene.d_tr << " m, D_M = " << scene.d_m
              << " m, r = " << scene.enclosure_radius << " m, w = " << scene.cutoff_width
              << " m\n";
    const ms::Frequency& f = scene.frequency;
    std::cout << "frequency: omega = " << f.omega << " rad/s, k0 = " << f.k0() << " 1/m\n";
    for (const ms::Region& r : scene.regions) {
      const ms::CollocationSet set = ms::sample_region_level(r, scene.solver.quad_level);
      const double exact = 4.0 / 3.0 * ms::constants::pi * std::pow(r.support_radius(), 3);
      std::cout << "  region " << r.id << " (" << ms::role_name(r.role) << "): support vol "
                << exact << " m^3, quadrature vol " << set.total_weight() << " (" << set.size()
                << " pts)\n";
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "invalid scene: " << e.what() << "\n";
    return 2;
  }
}

int cmd_transfer(const std::string& scene_path, std::vector<double> freqs, int quad_level,
                 const std::string& angular, const std::string& outdir) {
  const ms::SceneLayout scene = ms::load_scene_file(scene_path);
  const auto [nt, np] = parse_angular(angular, scene.solver.angular_theta, scene.solver.angular_phi);
  const ms::AngularGrid grid = ms::sphere_grid(nt, np);
  if (quad_level < 0) quad_level = scene.solver.quad_level;
  if (freqs.empty()) freqs.push_back(scene.frequency.omega / (2.0 * ms::constants::pi));

  json report;
  report["scene"] = scene_path;
  auto& runs = report["frequencies"] = json::array();

  const int cap = thread_cap();
  std::vector<TransferOutputs> results(freqs.size());
  for (std::size_t base = 0; base < freqs.size(); base += static_cast<std::size_t>(cap)) {
    std::vector<std::future<TransferOutputs>> batch;
    for (std::size_t i = base; i < std::min(freqs.size(), base + static_cast<std::size_t>(cap)); ++i)
      batch.push_back(std::async(std::launch::async, run_transfer_one, std::cref(scene), freqs[i],
                                 quad_level, std::cref(grid), std::cref(outdir)));
    for (std::size_t i = 0; i < batch.size(); ++i) results[base + i] = batch[i].get();
  }
  bool any_failed = false;
  for (auto& r : results) {
    any_failed = any_failed || r.failed;
    runs.push_back(std::move(r.report));
  }
  write_atomic_locked(outdir + "/transfer_report.json", report.dump(2) + "\n");
  std::cout << (any_failed ? "completed with per-frequency failures\n" : "completed\n");
  return 0;
}

int cmd_verify(const std::string& scene_path, const std::string& only, const std::string& outdir) {
  std::optional<ms::SceneLayout> scene;
  if (!scene_path.empty()) scene = ms::load_scene_file(scene_path);

  std::vector<ms::CheckResult> results;
  if (!only.empty())
    results.push_back(ms::run_verify_check(only, scene));
  else
    results = ms::run_all_checks(scene);

  json report = json::array();
  bool all_pass = true;
  for (const auto& r : results) {
    all_pass = all_pass && r.pass;
    std::cout << (r.pass ? "PASS" : "FAIL") << "  " << r.name << "  (" << r.details << ")  ["
              << r.seconds << " s]\n";
    report.push_back(
        {{"name", r.name}, {"pass", r.pass}, {"details", r.details}, {"seconds", r.seconds}});
  }
  if (!outdir.empty()) write_atomic_locked(outdir + "/verify_report.json", report.dump(2) + "\n");
  return all_pass ? 0 : 1;
}

int cmd_sweep(const std::string& scene_path, const std::string& kind, std::vector<double> points,
              int quad_level, const std::string& outdir) {
  ms::SceneLayout scene = scene_path.empty()
                              ? (kind == "dm-distance" ? ms::bench_far() : ms::bench_pair())
                              : ms::load_scene_file(scene_path);
  if (quad_level < 0) quad_level = scene.solver.quad_level;
  json report;
  report["kind"] = kind;

  if (kind == "antenna-scale") {
    if (points.empty()) points = {1.0, 0.5, 0.25, 0.125};
    if (points.size() < 3) throw std::runtime_error("sweep needs at least 3 points");
    std::vector<double> sqrt_vol, err;
    auto& rows = report["points"] = json::array();
    for (double s : points) {
      const ms::SceneLayout sc = scene.with_scaled_antennas(s);
      const ms::Frequency f = sc.frequency;
      const ms::KernelField full = ms::factorized_vector_potential(sc, 0, f, quad_level);
      const ms::KernelField dec = ms::decoupled_vector_potential(sc, 0, f, quad_level);
      double num = 0.0, den = 0.0;
      for (int idx : sc.regions_with(ms::Role::Receiver)) {
        const ms::Region& r = sc.region(idx);
        const ms::CollocationSet probes =
            ms::ball_collocation(r.center, 0.55 * r.support_radius(), 1, r.id);
        for (const ms::Vec3& x : probes.points) {
          num = std::max(num, (full.value(x) - dec.value(x)).norm());
          den = std::max(den, full.value(x).norm());
        }
      }
      double vol = 0.0;
      for (const ms::Region& r : sc.regions)
        if (r.role != ms::Role::Scatterer)
          vol += 4.0 / 3.0 * ms::constants::pi * std::pow(r.support_radius(), 3);
      sqrt_vol.push_back(std::sqrt(vol));
      err.push_back(num / den);
      rows.push_back({{"scale", s}, {"sqrt_volume", sqrt_vol.back()}, {"rel_error", err.back()}});
    }
    const ms::SlopeFit fit = ms::fit_loglog_slope(sqrt_vol, err);
    report["slope"] = fit.slope;
    report["r_squared"] = fit.r_squared;
  } else if (kind == "dm-distance") {
    if (points.empty()) points = {1.0, 2.0, 4.0};
    if (points.size() < 3) throw std::runtime_error("sweep needs at least 3 points");
    const ms::Frequency f = scene.frequency;
    const ms::AngularGrid grid = ms::sphere_grid(scene.solver.angular_theta, scene.solver.angular_phi);
    std::vector<ms::GVector> gts = {ms::g_vector_tx(scene, 0, f, grid, quad_level)};
    std::vector<ms::GVector> grs = {ms::g_vector_rx(scene, 0, f, grid, quad_level)};
    std::vector<ms::HVector> hts = {
        ms::h_vector(ms::Role::Transmitter, gts[0], f, grid, scene.enclosure_radius)};
    std::vector<ms::HVector> hrs = {
        ms::h_vector(ms::Role::Receiver, grs[0], f, grid, scene.enclosure_radius)};
    std::vector<double> dms, lead, gap;
    auto& rows = report["points"] = json::array();
    for (double mult : points) {
      const ms::SceneLayout sc = scene.with_scaled_scatterer_distance(mult);
      const ms::MidSpreadTable mid_exact = ms::mid_spread(sc, f, grid, quad_level, false);
      const ms::MidSpreadTable mid_free = ms::mid_spread(sc, f, grid, quad_level, true);
      const ms::MatrixXcd ref = ms::contract_transfer(grs, mid_exact, gts, sc.enclosure_radius) -
                                ms::contract_transfer(grs, mid_free, gts, sc.enclosure_radius);
      auto kernel = ms::scattering_kernel(sc, f, quad_level);
      ms::SpreadTable table;
      table.kernel = kernel;
      table.grid_r = grid;
      table.grid_t = grid;
      table.enclosure_radius = sc.enclosure_radius;
      const ms::MatrixXcd scatt = ms::scatt_transfer(table, hrs, hts, f).transfer.entries;
      dms.push_back(sc.d_m);
      lead.push_back(ref.cwiseAbs().maxCoeff());
      gap.push_back((scatt - ref).cwiseAbs().maxCoeff());
      rows.push_back({{"multiplier", mult}, {"d_m", dms.back()}, {"lead", lead.back()},
                      {"gap", gap.back()}});
    }
    report["lead_slope"] = ms::fit_loglog_slope(dms, lead).slope;
    report["gap_slope"] = ms::fit_loglog_slope(dms, gap).slope;
  } else if (kind == "frequency") {
    if (points.size() < 3) throw std::runtime_error("sweep needs at least 3 points");
    auto& rows = report["points"] = json::array();
    auto& skipped = report["skipped"] = json::array();
    for (double f_hz : points) {
      try {
        ms::SolveReport rep;
        const ms::TransferMatrix H =
            ms::transfer_matrix(scene, ms::Frequency::from_hz(f_hz), quad_level, &rep);
        rows.push_back({{"f_hz", f_hz},
                        {"h_max", H.entries.cwiseAbs().maxCoeff()},
                        {"condition", rep.condition_estimate}});
      } catch (const std::exception& e) {
        skipped.push_back({{"f_hz", f_hz}, {"reason", e.what()}});
      }
    }
  } else {
    throw std::runtime_error("unknown sweep kind: " + kind);
  }

  const std::string path = outdir + "/sweep_" + kind + ".json";
  write_atomic_locked(path, report.dump(2) + "\n");
  std::cout << "wrote " << path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic MIMO channel simulator (volume-integral multiple scattering)"};
  app.require_subcommand(1);

  std::string scene_path, outdir = "out", angular, only, sweep_kind = "antenna-scale";
  std::vector<double> freqs, sweep_points;
  int quad_level = -1;

  auto* validate = app.add_subcommand("validate", "check a scene document");
  validate->add_option("--scene", scene_path, "scene JSON path")->required();

  auto* transfer = app.add_subcommand("transfer", "compute transfer matrices and capacity");
  transfer->add_option("--scene", scene_path, "scene JSON path")->required();
  transfer->add_option("--freq", freqs, "frequencies in Hz")->delimiter(',');
  transfer->add_option("--quad-level", quad_level, "collocation refinement level");
  transfer->add_option("--angular", angular, "angular grid THETAxPHI");
  transfer->add_option("--out", outdir, "output directory");

  auto* verify = app.add_subcommand("verify", "run the verification suite");
  verify->add_option("--scene", scene_path, "scene JSON path (optional)");
  verify->add_option("--only", only, "run a single named check");
  verify->add_option("--out", outdir, "output directory");

  auto* sweep = app.add_subcommand("sweep", "parameter sweeps with fitted slopes");
  sweep->add_option("--scene", scene_path, "scene JSON path (optional)");
  sweep->add_option("--kind", sweep_kind, "antenna-scale | dm-distance | frequency");
  sweep->add_option("--points", sweep_points, "sweep points")->delimiter(',');
  sweep->add_option("--quad-level", quad_level, "collocation refinement level");
  sweep->add_option("--out", outdir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(validate)) return cmd_validate(scene_path);
    if (app.got_subcommand(transfer))
      return cmd_transfer(scene_path, freqs, quad_level, angular, outdir);
    if (app.got_subcommand(verify)) return cmd_verify(scene_path, only, outdir);
    if (app.got_subcommand(sweep))
      return cmd_sweep(scene_path, sweep_kind, sweep_points, quad_level, outdir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
