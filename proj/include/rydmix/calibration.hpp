#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "rydmix/atoms.hpp"
#include "rydmix/linkbudget.hpp"

namespace rydmix {

/// One (far-field, in-cell) field pair taken in the AT-resolvable regime.
struct CalibrationPoint {
  double p_rf = 0;             // W at the horn
  double e_ff = 0;             // V/m, from the link budget
  double e_cell_measured = 0;  // V/m, from AT splitting
  int n_averages = 3;
  double rel_std = 0.05;
};

/// Inverse of at_splitting: the field that produces a splitting of delta_f Hz.
template <typename Scalar>
Scalar e_from_at_splitting(Scalar delta_f, const RydbergTransition<Scalar>& t) {
  if (delta_f < 0) throw DomainError("e_from_at_splitting: splitting must be non-negative");
  return delta_f / detail::at_splitting_per_field(t);
}

/// Unit-slope log-log fit: log C_f = mean(log E_cell - log E_ff). The uncertainty is the
/// standard error of that mean carried to C_f (zero for a single-valued ratio).
CellFactor<double> fit_cell_factor(std::span<const CalibrationPoint> points);

/// Unconstrained log10(E_cell) = slope * log10(E_ff) + intercept, as a diagnostic of how
/// well the unit-slope assumption holds.
struct LogLogFit {
  double slope = 0;
  double intercept = 0;
  double slope_stderr = 0;
  double intercept_stderr = 0;
  double r_squared = 0;
};

LogLogFit fit_log_log(std::span<const CalibrationPoint> points);

/// Root-sum-square of relative uncertainty components.
double combine_uncertainty(std::span<const double> rel_components);

/// Relative field uncertainty from the antenna gain tolerance (E scales as sqrt(G)).
double gain_field_uncertainty(const AntennaLink<double>& link);

CalibrationPoint make_calibration_point(double p_rf_watts, double at_splitting_hz,
                                        const AntennaLink<double>& link,
                                        const RydbergTransition<double>& transition);

/// Reads `p_rf_dbm,delta_f_hz` or `e_ff_vpm,e_cell_vpm` CSV (header selects the form;
/// `#` lines are comments).
std::vector<CalibrationPoint> read_calibration_csv(std::istream& in,
                                                   const AntennaLink<double>& link,
                                                   const RydbergTransition<double>& transition);

}  // namespace rydmix
