#pragma once

// Experiment drivers. Each run_* function computes its result from a ScenarioConfig and,
// when RunOptions::write_files is set, writes CSV files into RunOptions::out_dir. Every file
// starts with `#` metadata lines (config hash, seed, cutoff convention, pole count, and a
// generation timestamp unless reproducible output was requested).

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rydmix/calibration.hpp"
#include "rydmix/config.hpp"
#include "rydmix/csv.hpp"

namespace rydmix {

struct RunOptions {
  std::filesystem::path out_dir = ".";
  bool reproducible = false;
  bool write_files = true;
};

Metadata base_metadata(const ScenarioConfig& cfg, const RunOptions& opts,
                       std::string_view scenario);

/// Non-fatal conditions worth reporting: large relative detuning, horn inside the far field.
std::vector<std::string> scenario_warnings(const ScenarioConfig& cfg);

// --- probe spectrum -------------------------------------------------------------------------

struct SpectrumCurve {
  double e_field = 0;
  Eigen::ArrayXd detuning_hz;
  Eigen::ArrayXd transmission;
  std::vector<double> peaks_hz;  // local maxima, parabola-refined
  double peak_separation_hz = 0;
};

std::vector<double> find_peaks(const Eigen::ArrayXd& x, const Eigen::ArrayXd& y);
std::vector<SpectrumCurve> run_spectrum(const ScenarioConfig& cfg, const RunOptions& opts);

// --- IF traces ------------------------------------------------------------------------------

struct IfTraceResult {
  double e_sig = 0;
  TimeSeries envelope;
  TimeSeries photodiode;
  double envelope_peak_to_peak = 0;
  double photodiode_if_amplitude = 0;
  double fft_peak_hz = 0;
};

std::vector<IfTraceResult> run_if_trace(const ScenarioConfig& cfg, const RunOptions& opts);

// --- weak-field detection sweep -------------------------------------------------------------

enum RegimeFlag : unsigned {
  kRegimeSignal = 0,
  kRegimeNoiseFloor = 1u << 0,
  kRegimeAtRolloff = 1u << 1,
  kRegimeStrongSignal = 1u << 2,  // E_sig >= E_lo
};

std::string regime_flag_string(unsigned flags);

struct WeakFieldRow {
  double sweep_value = 0;
  double p_rf_watts = 0;
  double e_cell = 0;
  double lockin_r = 0;
  unsigned flags = kRegimeSignal;

  double sqrt_p_rf() const;
};

struct SweepResult {
  std::vector<WeakFieldRow> rows;
  Metadata metadata;
  double floor_mean = 0;  // zero-signal lock-in R, mean over floor runs
  double floor_std = 0;   // single-run standard deviation of the same
  double threshold = 0;   // floor_mean + 3 floor_std / sqrt(averages)
  std::optional<double> knee_e_cell;
};

/// Per point: exact two-tone envelope, noisy photodiode, lock-in at f_IF, R averaged over
/// sweep.averages independent noise realizations. Points whose R falls below the
/// threshold mark the noise floor; the flagged set is every point up to and including the
/// strongest such point (outside the AT-rolloff region), and the knee is where R crosses
/// the threshold, interpolated log-log.
SweepResult run_weak_field_sweep(const ScenarioConfig& cfg, const RunOptions& opts);

struct NoiseCalibration {
  double noise_density = 0;
  double knee = 0;  // geometric-mean knee over the calibration seeds
  int iterations = 0;
};

/// Adjusts noise.density_v_rthz until the geometric-mean noise-floor knee over `seeds` lands
/// on target_knee (relative tolerance 2%). Throws NumericalError if the search brackets the
/// target but cannot get within 5% of it.
using CalibrationProgress = std::function<void(double density, std::optional<double> knee)>;

NoiseCalibration calibrate_noise_density(ScenarioConfig cfg, double target_knee,
                                         std::span<const std::uint64_t> seeds,
                                         const CalibrationProgress& progress = {});

// --- isolation of neighbouring signals ------------------------------------------------------

struct IsolationRow {
  double ratio_db = 0;
  double e_delta = 0;
  double leakage_r = 0;       // interferer alone, noiseless
  double leakage_db = 0;      // relative to the in-tune response
  double combined_db = 0;     // in-tune + interferer, noiseless, relative to in-tune alone
  double normalized_db = 0;   // leakage clamped at the noise floor
};

struct IsolationCurve {
  double detuning_hz = 0;
  std::vector<IsolationRow> rows;
  std::optional<double> crossing_db;  // first ratio where normalized_db reaches -3 dB
  bool crossing_at_start = false;     // already above -3 dB at the first ratio
};

struct IsolationResult {
  double reference_r = 0;  // lock-in R for LO + E_o
  double floor_r = 0;      // mean noise-only R (0 with noise disabled)
  double floor_db = 0;
  std::vector<IsolationCurve> curves;
  Metadata metadata;
};

IsolationResult run_isolation_sweep(const ScenarioConfig& cfg, const RunOptions& opts);

// --- link budget and cell-factor calibration ------------------------------------------------

struct LinkBudgetRow {
  double p_dbm = 0;
  double p_watts = 0;
  double e_ff = 0;
  double e_cell = 0;
};

std::vector<LinkBudgetRow> run_linkbudget(const ScenarioConfig& cfg, const RunOptions& opts);

struct CalibrationReport {
  CellFactor<double> cell_factor;
  LogLogFit free_fit;
  std::size_t n_points = 0;
  double field_rel_uncertainty = 0;  // gain tolerance, fit, and 5% AT budget in quadrature
};

/// Synthetic AT-regime calibration set: powers spanning E_AT..10 E_AT at the cell, each
/// E_cell drawn with multiplicative Gaussian noise of relative size rel_noise.
std::vector<CalibrationPoint> synthetic_calibration_points(const ScenarioConfig& cfg,
                                                           std::size_t n, double rel_noise,
                                                           std::uint64_t seed);

CalibrationReport run_calibrate(const ScenarioConfig& cfg, const RunOptions& opts,
                                std::span<const CalibrationPoint> points);

}  // namespace rydmix
