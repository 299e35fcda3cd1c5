#include "rydmix/fields.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <complex>

namespace rydmix {

namespace {

constexpr std::size_t kResyncInterval = 4096;

std::complex<double> tone_phasor(const BasebandTone& tone, double t) {
  const double cycles = tone.offset_hz * t;
  const double frac = cycles - std::floor(cycles);
  return std::polar(1.0, 2.0 * kPi<double> * frac + tone.phase);
}

}  // namespace

std::string to_string(UnitTag unit) {
  switch (unit) {
    case UnitTag::volts_per_meter:
      return "volts_per_meter";
    case UnitTag::volts:
      return "volts";
    case UnitTag::dimensionless:
      return "dimensionless";
  }
  return "unknown";
}

std::vector<BasebandTone> to_baseband(const TonePair<double>& p) {
  return {BasebandTone{p.sig.amplitude(), p.lo.frequency() - p.sig.frequency(), p.delta_phi()}};
}

EnvelopeGenerator::EnvelopeGenerator(double e_lo, std::vector<BasebandTone> tones,
                                     double sample_rate, double start_time, EnvelopeForm form)
    : e_lo_(e_lo),
      tones_(std::move(tones)),
      sample_rate_(sample_rate),
      start_time_(start_time),
      form_(form) {
  if (e_lo < 0) throw DomainError("EnvelopeGenerator: E_lo must be non-negative");
  if (!(sample_rate > 0)) throw ConfigError("EnvelopeGenerator: sample rate must be positive");
  for (const auto& tone : tones_) {
    if (tone.amplitude < 0) throw DomainError("EnvelopeGenerator: negative tone amplitude");
  }
}

void EnvelopeGenerator::fill(std::span<double> out) {
  const std::size_t n_tones = tones_.size();
  std::vector<std::complex<double>> phasor(n_tones);
  std::vector<std::complex<double>> step(n_tones);
  for (std::size_t k = 0; k < n_tones; ++k) {
    step[k] = std::polar(1.0, 2.0 * kPi<double> * tones_[k].offset_hz / sample_rate_);
  }

  std::size_t i = 0;
  while (i < out.size()) {
    const std::size_t block_start = index_;
    const std::size_t to_boundary = kResyncInterval - (block_start % kResyncInterval);
    const std::size_t count = std::min(to_boundary, out.size() - i);

    // Recompute from the last resync point so results are independent of chunking.
    const std::size_t anchor = block_start - (block_start % kResyncInterval);
    const double t_anchor = start_time_ + double(anchor) / sample_rate_;
    for (std::size_t k = 0; k < n_tones; ++k) {
      phasor[k] = tone_phasor(tones_[k], t_anchor);
      for (std::size_t s = anchor; s < block_start; ++s) phasor[k] *= step[k];
    }

    for (std::size_t s = 0; s < count; ++s) {
      if (form_ == EnvelopeForm::exact) {
        std::complex<double> total(e_lo_, 0.0);
        for (std::size_t k = 0; k < n_tones; ++k) total += tones_[k].amplitude * phasor[k];
        out[i + s] = std::abs(total);
      } else {
        double total = e_lo_;
        for (std::size_t k = 0; k < n_tones; ++k) total += tones_[k].amplitude * phasor[k].real();
        out[i + s] = total;
      }
      for (std::size_t k = 0; k < n_tones; ++k) phasor[k] *= step[k];
    }
    i += count;
    index_ += count;
  }
}

TimeSeries synthesize_envelope_trace(const TonePair<double>& p, double sample_rate,
                                     double duration, EnvelopeForm form) {
  const double f_if = p.if_frequency();
  const double min_rate = kMinSamplesPerIfCycle * f_if;
  if (!(sample_rate >= min_rate) || !(sample_rate > 0)) {
    throw ConfigError("synthesize_envelope_trace: sample rate " + std::to_string(sample_rate) +
                          " Hz is below the required minimum " + std::to_string(min_rate) +
                          " Hz (10 x f_IF)",
                      "lockin.sample_rate_hz");
  }
  if (!(duration > 0)) throw ConfigError("synthesize_envelope_trace: duration must be positive");
  if (form == EnvelopeForm::weak) detail::require_weak(p, "synthesize_envelope_trace");

  const auto n = std::max<Eigen::Index>(1, Eigen::Index(std::llround(duration * sample_rate)));
  TimeSeries trace;
  trace.sample_rate = sample_rate;
  trace.start_time = 0.0;
  trace.unit = UnitTag::volts_per_meter;
  trace.samples.resize(n);
  EnvelopeGenerator gen(p.lo.amplitude(), to_baseband(p), sample_rate, 0.0, form);
  gen.fill({trace.samples.data(), static_cast<std::size_t>(n)});
  return trace;
}

double dominant_frequency(const TimeSeries& series) {
  if (series.size() < 4) throw InsufficientDataError("dominant_frequency: need >= 4 samples");
  std::vector<double> centered(series.samples.data(), series.samples.data() + series.size());
  const double mean = series.samples.mean();
  for (auto& v : centered) v -= mean;

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> bins;
  fft.fwd(bins, centered);

  const std::size_t half = centered.size() / 2;
  std::size_t best = 1;
  for (std::size_t k = 2; k <= half; ++k) {
    if (std::abs(bins[k]) > std::abs(bins[best])) best = k;
  }
  return double(best) * series.sample_rate / double(centered.size());
}

double tone_amplitude(const TimeSeries& series, double frequency) {
  if (series.empty()) throw InsufficientDataError("tone_amplitude: empty series");
  const double mean = series.samples.mean();
  const std::complex<double> step =
      std::polar(1.0, -2.0 * kPi<double> * frequency / series.sample_rate);
  std::complex<double> phasor = std::polar(1.0, -2.0 * kPi<double> * frequency * series.start_time);
  std::complex<double> acc{};
  for (Eigen::Index i = 0; i < series.size(); ++i) {
    acc += (series.samples[i] - mean) * phasor;
    phasor *= step;
  }
  return 2.0 * std::abs(acc) / double(series.size());
}

}  // namespace rydmix
