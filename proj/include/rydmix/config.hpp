#pragma once

// Scenario configuration: built-in defaults, overlaid by a flat `section.key = value` file,
// overlaid by command-line assignments. Unknown keys are errors.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rydmix/atoms.hpp"
#include "rydmix/fields.hpp"
#include "rydmix/linkbudget.hpp"
#include "rydmix/lockin.hpp"
#include "rydmix/pipeline.hpp"
#include "rydmix/transducer.hpp"

namespace rydmix {

/// Photodiode noise density that places the weak-field noise-floor onset at 46 uV/m with
/// the default chain (tau = 3 s, 24 dB/oct, 3 averages). Fitted at tau = 10 ms with
/// tools/calibrate_noise.sh (1.659e-6 V/rtHz) and scaled by sqrt(3 / 0.01).
/// The lock-in floor scales as density / sqrt(tau), so other time constants shift the knee.
inline constexpr double kDefaultNoiseDensity = 2.8736e-5;

inline constexpr double kTargetKneeField = 46e-6;  // V/m

struct SweepSpec {
  std::string domain = "power_dbm";  // power_dbm | e_sig_vpm
  double start = -140.0;
  double stop = -10.0;
  int points = 131;
  bool log_spacing = false;
  int averages = 3;
  int floor_runs = 64;

  std::vector<double> values() const;
};

struct IsolationSpec {
  double e_o_vpm = 181e-6;
  double setpoint_dbm = -40.0;
  std::vector<double> detunings_hz{0.1, 1.0, 10.0};
  double ratio_start_db = 0.0;
  double ratio_stop_db = 70.0;
  int ratio_points = 36;
  int floor_runs = 8;
};

struct SpectrumSpec {
  std::vector<double> e_list_eat{0.0, 0.5, 1.0, 2.0};  // multiples of E_AT
  double span_hz = 30e6;
  int points = 1201;
};

struct IfTraceSpec {
  std::vector<double> e_sig_vpm{0.187, 0.0591, 0.0187};
  double duration_s = 1e-3;
  EnvelopeForm form = EnvelopeForm::exact;
  bool noise = true;
};

struct LinkSweepSpec {
  double start_dbm = -180.0;
  double stop_dbm = 10.0;
  int points = 20;
};

struct ScenarioConfig {
  double probe_wavelength_m = 852e-9;
  double coupling_wavelength_m = 511.148e-9;
  double dipole_radial = 1476.6048;
  double dipole_angular = 0.48989;
  double rf_resonance_hz = 19.626e9;
  double eit_linewidth_hz = 4e6;

  double f_lo_hz = 19.626000e9;
  double f_sig_hz = 19.626090e9;
  double e_lo_vpm = 0.72;
  double phase_lo_rad = 0.0;
  double phase_sig_rad = 0.0;

  AntennaLink<double> link;
  double cell_factor = 0.90;
  std::vector<double> chain_losses_db;

  double contrast = 0.5;
  double background = 0.3;
  double pd_gain_v = 1.0;
  double pd_dark_v = 0.0;
  double noise_density = kDefaultNoiseDensity;
  bool noise_enabled = true;

  double tau_s = 3.0;
  int slope_db_oct = 24;
  double sample_rate_hz = 2e6;
  double settle_factor = 10.0;
  double duration_tau = 10.0;
  CutoffConvention fc_convention = CutoffConvention::inv_2pi_tau;

  SweepSpec sweep;
  IsolationSpec isolation;
  SpectrumSpec spectrum;
  IfTraceSpec iftrace;
  LinkSweepSpec linkbudget;

  std::uint64_t seed = 0;
  unsigned threads = 0;

  RydbergTransition<double> transition() const;
  TonePair<double> tone_pair(double e_sig) const;
  double if_frequency() const { return std::abs(f_lo_hz - f_sig_hz); }
  EitModel<double> eit_model() const;
  PhotodiodeModel photodiode() const;
  LockInConfig lockin_config() const;  // f_ref = f_IF
  DetectionChain detection_chain() const;
  CellFactor<double> cell() const { return {cell_factor, 0.0}; }
  double measurement_duration() const { return duration_tau * tau_s; }

  /// Throws ConfigError naming the first offending key.
  void validate() const;
};

ScenarioConfig parse_config(const std::filesystem::path& path);
void apply_config_text(ScenarioConfig& cfg, std::string_view text, std::string_view source);
/// `section.key=value`
void apply_override(ScenarioConfig& cfg, std::string_view assignment);
void set_config_value(ScenarioConfig& cfg, std::string_view key, std::string_view value);

/// Every key with its current value, in a fixed order.
std::vector<std::pair<std::string, std::string>> config_entries(const ScenarioConfig& cfg);
/// 64-bit FNV-1a of the canonical entry list, as 16 hex digits.
std::string config_hash(const ScenarioConfig& cfg);

}  // namespace rydmix
