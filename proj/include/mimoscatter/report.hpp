// report.hpp — CSV/JSON emission, atomic writes, log-log slope fits
#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "mimoscatter/channel.hpp"

namespace mimoscatter {

/// Least-squares fit of log(y) vs log(x); returns slope and R^2.
struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};
SlopeFit fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Write text to `path` via a temp file and atomic rename.
void write_file_atomic(const std::string& path, const std::string& content);

/// Transfer matrix as CSV rows "m,n,re,im".
std::string transfer_matrix_csv(const TransferMatrix& H);
nlohmann::json transfer_matrix_json(const TransferMatrix& H);

nlohmann::json solve_report_json(const SolveReport& rep);
nlohmann::json maxwell_report_json(const MaxwellResidualReport& rep);

/// Capacity curve rows "snr,bits_per_s_per_hz".
std::string capacity_csv(const MatrixXcd& H, const std::vector<double>& snrs);

}  // namespace mimoscatter
