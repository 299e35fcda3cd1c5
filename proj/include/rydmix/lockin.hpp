#pragma once

// Dual-phase digital lock-in: mix with cos/sin at f_ref, low-pass both arms through n
// identical one-pole IIR stages (n = slope / 6), report R and theta.
//
//   x(t) = LPF[in(t) cos(2 pi f_ref t)]      y(t) = LPF[in(t) sin(2 pi f_ref t)]
//
// A tone A cos(2 pi f_ref t + phi) settles to x = (A/2) cos phi, y = -(A/2) sin phi, so
// R = A/2 and theta = atan2(-y, x) = phi.
//
// Each pole has coefficient a = exp(-2 pi f_c / fs) where f_c is the per-pole corner given
// by the cutoff convention: 1/(2 pi tau) (RC time constant, default) or 1/tau.

#include <Eigen/Core>

#include <array>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rydmix/fields.hpp"

namespace rydmix {

enum class CutoffConvention { inv_2pi_tau, inv_tau };

std::string to_string(CutoffConvention convention);
CutoffConvention parse_cutoff_convention(std::string_view text);

inline constexpr int kMaxPoles = 4;

struct LockInConfig {
  double f_ref = 90e3;
  double time_constant = 3.0;
  int slope_db_per_octave = 24;
  double sample_rate = 2e6;
  double settle_factor = 10.0;
  CutoffConvention convention = CutoffConvention::inv_2pi_tau;

  void validate() const;
};

int pole_count(int slope_db_per_octave);

/// Per-pole -3 dB frequency under the configured convention.
double cutoff_frequency(const LockInConfig& cfg);

/// Steady-state amplitude response of the pole cascade to a tone `detuning` Hz off f_ref.
double rejection_db(const LockInConfig& cfg, double detuning);

struct LockInOutput {
  double r = 0;
  double theta = 0;
  double x = 0;
  double y = 0;
  bool settled = false;
  std::optional<std::string> warning;
};

struct LockInTrace {
  TimeSeries r;
  Eigen::VectorXd theta;
};

/// Streaming demodulator. The total sample count must be known up front so the final
/// time-constant averaging window can be located without buffering the input.
class LockInAmplifier {
 public:
  LockInAmplifier(const LockInConfig& cfg, std::size_t total_samples, double start_time = 0.0,
                  std::size_t trace_stride = 0);

  void process(std::span<const double> block);
  LockInOutput result() const;
  std::optional<LockInTrace> trace() const;

  std::size_t processed() const { return index_; }
  std::size_t total_samples() const { return total_; }

 private:
  LockInConfig cfg_;
  int poles_;
  double b_;  // 1 - a
  std::size_t total_;
  std::size_t window_start_;
  double start_time_;
  std::size_t trace_stride_;

  std::size_t index_ = 0;
  std::complex<double> ref_{1.0, 0.0};
  std::complex<double> ref_step_;
  std::array<double, kMaxPoles> sx_{};
  std::array<double, kMaxPoles> sy_{};

  double sum_r_ = 0;
  double sum_x_ = 0;
  double sum_y_ = 0;
  std::size_t window_count_ = 0;

  std::vector<double> trace_r_;
  std::vector<double> trace_theta_;
};

struct Demodulation {
  LockInOutput output;
  std::optional<LockInTrace> trace;
};

/// Demodulates a whole series. trace_stride > 0 additionally records every stride-th
/// (r, theta) sample.
Demodulation demodulate(const TimeSeries& input, const LockInConfig& cfg,
                        std::size_t trace_stride = 0);

}  // namespace rydmix
