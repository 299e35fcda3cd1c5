#include "rydmix/lockin.hpp"

#include <cmath>

namespace rydmix {

namespace {

constexpr std::size_t kRefResync = 4096;

std::complex<double> reference_phasor(double f_ref, double t) {
  const double cycles = f_ref * t;
  return std::polar(1.0, 2.0 * kPi<double> * (cycles - std::floor(cycles)));
}

}  // namespace

std::string to_string(CutoffConvention convention) {
  return convention == CutoffConvention::inv_tau ? "inv-tau" : "inv-2pi-tau";
}

CutoffConvention parse_cutoff_convention(std::string_view text) {
  if (text == "inv-tau") return CutoffConvention::inv_tau;
  if (text == "inv-2pi-tau") return CutoffConvention::inv_2pi_tau;
  throw ConfigError("unknown cutoff convention '" + std::string(text) +
                        "' (expected inv-tau or inv-2pi-tau)",
                    "lockin.fc_convention");
}

int pole_count(int slope_db_per_octave) {
  switch (slope_db_per_octave) {
    case 6:
    case 12:
    case 18:
    case 24:
      return slope_db_per_octave / 6;
    default:
      throw ConfigError("unsupported filter slope " + std::to_string(slope_db_per_octave) +
                            " dB/octave (expected 6, 12, 18 or 24)",
                        "lockin.slope_db_oct");
  }
}

void LockInConfig::validate() const {
  if (!(f_ref > 0)) throw ConfigError("lock-in f_ref must be positive", "lockin.f_ref_hz");
  if (!(time_constant > 0)) {
    throw ConfigError("lock-in time constant must be positive", "lockin.tau_s");
  }
  if (!(sample_rate > 4.0 * f_ref)) {
    throw ConfigError("lock-in sample rate " + std::to_string(sample_rate) +
                          " Hz must exceed 4 x f_ref = " + std::to_string(4.0 * f_ref) + " Hz",
                      "lockin.sample_rate_hz");
  }
  if (!(settle_factor > 0)) {
    throw ConfigError("lock-in settle factor must be positive", "lockin.settle_factor");
  }
  pole_count(slope_db_per_octave);
}

double cutoff_frequency(const LockInConfig& cfg) {
  return cfg.convention == CutoffConvention::inv_tau
             ? 1.0 / cfg.time_constant
             : 1.0 / (2.0 * kPi<double> * cfg.time_constant);
}

double rejection_db(const LockInConfig& cfg, double detuning) {
  if (detuning < 0) throw DomainError("rejection_db: detuning must be non-negative");
  const double ratio = detuning / cutoff_frequency(cfg);
  const int n = pole_count(cfg.slope_db_per_octave);
  return -10.0 * double(n) * std::log10(1.0 + ratio * ratio);
}

LockInAmplifier::LockInAmplifier(const LockInConfig& cfg, std::size_t total_samples,
                                 double start_time, std::size_t trace_stride)
    : cfg_(cfg),
      poles_(pole_count(cfg.slope_db_per_octave)),
      total_(total_samples),
      start_time_(start_time),
      trace_stride_(trace_stride) {
  cfg_.validate();
  if (total_samples == 0) throw ConfigError("lock-in input must be non-empty");
  b_ = -std::expm1(-2.0 * kPi<double> * cutoff_frequency(cfg_) / cfg_.sample_rate);
  const auto window =
      std::max<std::size_t>(1, std::size_t(std::llround(cfg_.time_constant * cfg_.sample_rate)));
  window_start_ = window >= total_ ? 0 : total_ - window;
  ref_step_ = std::polar(1.0, 2.0 * kPi<double> * cfg_.f_ref / cfg_.sample_rate);
  if (trace_stride_ > 0) {
    trace_r_.reserve(total_ / trace_stride_ + 1);
    trace_theta_.reserve(total_ / trace_stride_ + 1);
  }
}

void LockInAmplifier::process(std::span<const double> block) {
  for (const double v : block) {
    if (index_ % kRefResync == 0) {
      ref_ = reference_phasor(cfg_.f_ref, start_time_ + double(index_) / cfg_.sample_rate);
    }
    double in_x = v * ref_.real();
    double in_y = v * ref_.imag();
    for (int p = 0; p < poles_; ++p) {
      sx_[p] += b_ * (in_x - sx_[p]);
      sy_[p] += b_ * (in_y - sy_[p]);
      in_x = sx_[p];
      in_y = sy_[p];
    }
    if (index_ >= window_start_) {
      sum_r_ += std::hypot(in_x, in_y);
      sum_x_ += in_x;
      sum_y_ += in_y;
      ++window_count_;
    }
    if (trace_stride_ > 0 && index_ % trace_stride_ == 0) {
      trace_r_.push_back(std::hypot(in_x, in_y));
      trace_theta_.push_back(std::atan2(-in_y, in_x));
    }
    ref_ *= ref_step_;
    ++index_;
  }
}

LockInOutput LockInAmplifier::result() const {
  LockInOutput out;
  const int last = poles_ - 1;
  if (window_count_ > 0) {
    const double n = double(window_count_);
    out.r = sum_r_ / n;
    out.x = sum_x_ / n;
    out.y = sum_y_ / n;
  } else {
    out.x = sx_[last];
    out.y = sy_[last];
    out.r = std::hypot(out.x, out.y);
  }
  out.theta = std::atan2(-out.y, out.x);
  const double duration = double(index_) / cfg_.sample_rate;
  out.settled = duration >= cfg_.settle_factor * cfg_.time_constant;
  if (!out.settled) {
    out.warning = "input duration " + std::to_string(duration) + " s is shorter than " +
                  std::to_string(cfg_.settle_factor) + " time constants; output not settled";
  }
  return out;
}

std::optional<LockInTrace> LockInAmplifier::trace() const {
  if (trace_stride_ == 0) return std::nullopt;
  LockInTrace tr;
  tr.r.sample_rate = cfg_.sample_rate / double(trace_stride_);
  tr.r.start_time = start_time_;
  tr.r.unit = UnitTag::volts;
  tr.r.samples = Eigen::Map<const Eigen::VectorXd>(trace_r_.data(), Eigen::Index(trace_r_.size()));
  tr.theta =
      Eigen::Map<const Eigen::VectorXd>(trace_theta_.data(), Eigen::Index(trace_theta_.size()));
  return tr;
}

Demodulation demodulate(const TimeSeries& input, const LockInConfig& cfg,
                        std::size_t trace_stride) {
  if (input.empty()) throw ConfigError("demodulate: input series is empty");
  if (std::abs(input.sample_rate - cfg.sample_rate) > 1e-9 * cfg.sample_rate) {
    throw ConfigError("demodulate: input sample rate " + std::to_string(input.sample_rate) +
                          " Hz differs from lock-in sample rate " +
                          std::to_string(cfg.sample_rate) + " Hz",
                      "lockin.sample_rate_hz");
  }
  LockInAmplifier amp(cfg, static_cast<std::size_t>(input.size()), input.start_time,
                      trace_stride);
  amp.process(input.view());
  return {amp.result(), amp.trace()};
}

}  // namespace rydmix
