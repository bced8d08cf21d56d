#include "mimoscatter/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mimoscatter {

SlopeFit fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3)
    throw std::invalid_argument("fit_loglog_slope: need at least 3 points");
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw std::invalid_argument("fit_loglog_slope: positive data required");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    syy += ly * ly;
  }
  const double dn = static_cast<double>(n);
  const double denom = dn * sxx - sx * sx;
  SlopeFit fit;
  fit.slope = (dn * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / dn;
  const double ss_tot = syy - sy * sy / dn;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pred = fit.intercept + fit.slope * std::log(x[i]);
    ss_res += (std::log(y[i]) - pred) * (std::log(y[i]) - pred);
  }
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out << content;
  }
  fs::rename(tmp, target);
}

std::string transfer_matrix_csv(const TransferMatrix& H) {
  std::ostringstream os;
  os.precision(17);
  os << "m,n,re,im\n";
  for (Eigen::Index m = 0; m < H.entries.rows(); ++m)
    for (Eigen::Index n = 0; n < H.entries.cols(); ++n)
      os << m << "," << n << "," << H.entries(m, n).real() << "," << H.entries(m, n).imag()
         << "\n";
  return os.str();
}

nlohmann::json transfer_matrix_json(const TransferMatrix& H) {
  nlohmann::json j;
  j["mode"] = TransferMatrix::mode_name(H.mode);
  j["omega"] = H.omega;
  j["rows"] = H.entries.rows();
  j["cols"] = H.entries.cols();
  auto& data = j["entries"] = nlohmann::json::array();
  for (Eigen::Index m = 0; m < H.entries.rows(); ++m)
    for (Eigen::Index n = 0; n < H.entries.cols(); ++n)
      data.push_back({{"m", m},
                      {"n", n},
                      {"re", H.entries(m, n).real()},
                      {"im", H.entries(m, n).imag()}});
  return j;
}

nlohmann::json solve_report_json(const SolveReport& rep) {
  nlohmann::json j;
  j["system_size"] = rep.system_size;
  j["condition_estimate"] = rep.condition_estimate;
  j["contraction_estimate"] = rep.contraction_estimate;
  j["born_order_norms"] = rep.born_order_norms;
  j["near_singular"] = rep.near_singular;
  if (!rep.note.empty()) j["note"] = rep.note;
  return j;
}

nlohmann::json maxwell_report_json(const MaxwellResidualReport& rep) {
  nlohmann::json j;
  j["scale"] = rep.scale;
  j["max_relative_residual"] = rep.max_relative_residual;
  auto& eqs = j["equations"] = nlohmann::json::array();
  for (const auto& e : rep.equations)
    eqs.push_back(
        {{"name", e.name}, {"res_h", e.res_h}, {"res_h2", e.res_h2}, {"order", e.order}});
  return j;
}

std::string capacity_csv(const MatrixXcd& H, const std::vector<double>& snrs) {
  std::ostringstream os;
  os.precision(17);
  os << "snr,capacity_bits_s_hz\n";
  for (double s : snrs) os << s << "," << capacity(H, s) << "\n";
  return os.str();
}

}  // namespace mimoscatter
