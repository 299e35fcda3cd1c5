#include "rydmix/calibration.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <istream>
#include <string>

#include "rydmix/csv.hpp"

namespace rydmix {

namespace {

void check_points(std::span<const CalibrationPoint> points, const char* who) {
  if (points.size() < 2) {
    throw InsufficientDataError(std::string(who) + ": need at least 2 calibration points, got " +
                                std::to_string(points.size()));
  }
  for (const auto& p : points) {
    if (!(p.e_ff > 0) || !(p.e_cell_measured > 0)) {
      throw DomainError(std::string(who) + ": calibration fields must be positive");
    }
  }
}

}  // namespace

CellFactor<double> fit_cell_factor(std::span<const CalibrationPoint> points) {
  check_points(points, "fit_cell_factor");
  const auto n = Eigen::Index(points.size());
  Eigen::ArrayXd log_ratio(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    log_ratio[i] = std::log(points[i].e_cell_measured) - std::log(points[i].e_ff);
  }
  const double mean = log_ratio.mean();
  const double ss = (log_ratio - mean).square().sum();
  const double std_resid = std::sqrt(ss / double(n - 1));
  CellFactor<double> cf;
  cf.value = std::exp(mean);
  cf.fit_uncertainty = cf.value * std_resid / std::sqrt(double(n));
  return cf;
}

LogLogFit fit_log_log(std::span<const CalibrationPoint> points) {
  check_points(points, "fit_log_log");
  const auto n = Eigen::Index(points.size());
  Eigen::MatrixXd design(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = std::log10(points[i].e_ff);
    design(i, 1) = 1.0;
    y[i] = std::log10(points[i].e_cell_measured);
  }
  const Eigen::Vector2d beta = design.colPivHouseholderQr().solve(y);
  const Eigen::VectorXd resid = y - design * beta;

  LogLogFit fit;
  fit.slope = beta[0];
  fit.intercept = beta[1];
  const double ss_res = resid.squaredNorm();
  const double ss_tot = (y.array() - y.mean()).square().sum();
  fit.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  if (n > 2) {
    const double sigma2 = ss_res / double(n - 2);
    const Eigen::Matrix2d cov = sigma2 * (design.transpose() * design).inverse();
    fit.slope_stderr = std::sqrt(cov(0, 0));
    fit.intercept_stderr = std::sqrt(cov(1, 1));
  }
  return fit;
}

double combine_uncertainty(std::span<const double> rel_components) {
  double sum_sq = 0;
  for (const double c : rel_components) {
    if (c < 0) throw DomainError("combine_uncertainty: components must be non-negative");
    sum_sq += c * c;
  }
  return std::sqrt(sum_sq);
}

double gain_field_uncertainty(const AntennaLink<double>& link) {
  return std::pow(10.0, link.gain_uncertainty_db / 20.0) - 1.0;
}

CalibrationPoint make_calibration_point(double p_rf_watts, double at_splitting_hz,
                                        const AntennaLink<double>& link,
                                        const RydbergTransition<double>& transition) {
  CalibrationPoint p;
  p.p_rf = p_rf_watts;
  p.e_ff = e_far_field(p_rf_watts, link);
  p.e_cell_measured = e_from_at_splitting(at_splitting_hz, transition);
  return p;
}

std::vector<CalibrationPoint> read_calibration_csv(std::istream& in,
                                                   const AntennaLink<double>& link,
                                                   const RydbergTransition<double>& transition) {
  const CsvTable table = read_csv(in);
  const bool power_form = table.has_columns({"p_rf_dbm", "delta_f_hz"});
  const bool field_form = table.has_columns({"e_ff_vpm", "e_cell_vpm"});
  if (!power_form && !field_form) {
    throw ConfigError(
        "calibration CSV header must be 'p_rf_dbm,delta_f_hz' or 'e_ff_vpm,e_cell_vpm'");
  }
  std::vector<CalibrationPoint> points;
  points.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    if (power_form) {
      const double p_w = dbm_to_watts(table.number(r, "p_rf_dbm"));
      points.push_back(make_calibration_point(p_w, table.number(r, "delta_f_hz"), link, transition));
    } else {
      CalibrationPoint p;
      p.e_ff = table.number(r, "e_ff_vpm");
      p.e_cell_measured = table.number(r, "e_cell_vpm");
      points.push_back(p);
    }
  }
  return points;
}

}  // namespace rydmix
