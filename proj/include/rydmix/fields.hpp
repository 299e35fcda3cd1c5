#pragma once

// Two-tone superposition at the vapor cell. The carrier at the LO frequency is never
// sampled: the atoms follow the field magnitude, so every trace here is the envelope
// |E_lo + E_sig exp(j(dw t + dphi))| at baseband.

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rydmix/atoms.hpp"
#include "rydmix/errors.hpp"

namespace rydmix {

template <typename Scalar>
Scalar wrap_phase(Scalar phase) {
  const Scalar two_pi = Scalar(2) * kPi<Scalar>;
  Scalar wrapped = std::fmod(phase + kPi<Scalar>, two_pi);
  if (wrapped < 0) wrapped += two_pi;
  wrapped -= kPi<Scalar>;
  // fmod can land exactly on +pi after the shift back through rounding.
  return wrapped >= kPi<Scalar> ? -kPi<Scalar> : wrapped;
}

/// A monochromatic RF field at the atoms. Phase is stored in [-pi, pi).
template <typename Scalar = double>
class ToneField {
 public:
  ToneField(Scalar amplitude, Scalar frequency, Scalar phase = Scalar(0))
      : amplitude_(amplitude), frequency_(frequency), phase_(wrap_phase(phase)) {
    if (amplitude < 0) throw DomainError("ToneField: amplitude must be non-negative");
    if (!(frequency > 0)) throw DomainError("ToneField: frequency must be positive");
  }

  Scalar amplitude() const { return amplitude_; }
  Scalar frequency() const { return frequency_; }
  Scalar phase() const { return phase_; }
  Scalar omega() const { return Scalar(2) * kPi<Scalar> * frequency_; }

 private:
  Scalar amplitude_;
  Scalar frequency_;
  Scalar phase_;
};

/// Relative detuning above which the slowly-varying envelope picture is flagged.
inline constexpr double kMaxRelativeDetuning = 1e-3;

template <typename Scalar = double>
struct TonePair {
  ToneField<Scalar> lo;
  ToneField<Scalar> sig;

  // Difference taken in Hz first: the two omegas agree to ~5 digits.
  Scalar delta_omega() const { return Scalar(2) * kPi<Scalar> * (lo.frequency() - sig.frequency()); }
  Scalar delta_phi() const { return lo.phase() - sig.phase(); }
  Scalar mean_omega() const { return (lo.omega() + sig.omega()) / Scalar(2); }
  Scalar relative_detuning() const { return std::abs(delta_omega()) / mean_omega(); }

  /// Beat (intermediate) frequency in Hz, always non-negative.
  Scalar if_frequency() const { return std::abs(lo.frequency() - sig.frequency()); }

  std::optional<std::string> detuning_warning() const {
    if (relative_detuning() < Scalar(kMaxRelativeDetuning)) return std::nullopt;
    return "relative detuning |dw|/w = " + std::to_string(double(relative_detuning())) +
           " exceeds 1e-3; envelope approximation may be poor";
  }
};

namespace detail {
template <typename Scalar>
Scalar beat_phase(const TonePair<Scalar>& p, Scalar t) {
  return p.delta_omega() * t + p.delta_phi();
}

template <typename Scalar>
void require_weak(const TonePair<Scalar>& p, const char* who) {
  if (p.sig.amplitude() >= p.lo.amplitude()) {
    throw DomainError(std::string(who) + ": weak-field form needs E_sig < E_lo");
  }
}
}  // namespace detail

/// Exact magnitude of the two-tone field.
template <typename Scalar>
Scalar envelope_exact(const TonePair<Scalar>& p, Scalar t) {
  const Scalar a = p.lo.amplitude();
  const Scalar b = p.sig.amplitude();
  const Scalar sq = a * a + b * b + Scalar(2) * a * b * std::cos(detail::beat_phase(p, t));
  return std::sqrt(std::max(sq, Scalar(0)));
}

template <typename Derived>
typename Derived::PlainObject envelope_exact(const TonePair<typename Derived::Scalar>& p,
                                             const Eigen::ArrayBase<Derived>& t) {
  using Scalar = typename Derived::Scalar;
  const Scalar a = p.lo.amplitude();
  const Scalar b = p.sig.amplitude();
  return (a * a + b * b + Scalar(2) * a * b * (p.delta_omega() * t + p.delta_phi()).cos())
      .max(Scalar(0))
      .sqrt();
}

/// First-order expansion of envelope_exact in E_sig / E_lo.
template <typename Scalar>
Scalar envelope_weak(const TonePair<Scalar>& p, Scalar t) {
  detail::require_weak(p, "envelope_weak");
  return p.lo.amplitude() + p.sig.amplitude() * std::cos(detail::beat_phase(p, t));
}

template <typename Derived>
typename Derived::PlainObject envelope_weak(const TonePair<typename Derived::Scalar>& p,
                                            const Eigen::ArrayBase<Derived>& t) {
  detail::require_weak(p, "envelope_weak");
  return p.lo.amplitude() + p.sig.amplitude() * (p.delta_omega() * t + p.delta_phi()).cos();
}

/// The down-converted field seen by the atoms; same contract as envelope_weak.
template <typename Scalar>
Scalar if_signal(const TonePair<Scalar>& p, Scalar t) {
  detail::require_weak(p, "if_signal");
  return envelope_weak(p, t);
}

enum class UnitTag { volts_per_meter, volts, dimensionless };

std::string to_string(UnitTag unit);

/// Uniformly sampled real signal.
template <typename Scalar = double>
struct BasicTimeSeries {
  Scalar sample_rate{1};
  Scalar start_time{0};
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> samples;
  UnitTag unit = UnitTag::dimensionless;

  Eigen::Index size() const { return samples.size(); }
  bool empty() const { return samples.size() == 0; }
  Scalar time_at(Eigen::Index i) const { return start_time + Scalar(i) / sample_rate; }
  Scalar duration() const { return Scalar(samples.size()) / sample_rate; }
  std::span<const Scalar> view() const {
    return {samples.data(), static_cast<std::size_t>(samples.size())};
  }
};

using TimeSeries = BasicTimeSeries<double>;

enum class EnvelopeForm { exact, weak };

/// One tone expressed relative to the LO: field amplitude, frequency offset f_lo - f_tone
/// (Hz, signed) and phase offset phi_lo - phi_tone.
struct BasebandTone {
  double amplitude = 0;
  double offset_hz = 0;
  double phase = 0;
};

std::vector<BasebandTone> to_baseband(const TonePair<double>& p);

/// Streams |E_lo + sum_i E_i exp(j(2 pi df_i t + dphi_i))| (exact) or
/// E_lo + sum_i E_i cos(...) (weak) in blocks. Tone phasors are advanced by recursion
/// inside a block and recomputed from the absolute sample index at every block start, so
/// output does not depend on how the caller chunks the stream.
class EnvelopeGenerator {
 public:
  EnvelopeGenerator(double e_lo, std::vector<BasebandTone> tones, double sample_rate,
                    double start_time = 0.0, EnvelopeForm form = EnvelopeForm::exact);

  void fill(std::span<double> out);
  std::size_t position() const { return index_; }

 private:
  double e_lo_;
  std::vector<BasebandTone> tones_;
  double sample_rate_;
  double start_time_;
  EnvelopeForm form_;
  std::size_t index_ = 0;
};

/// Samples the two-tone envelope. Requires sample_rate >= 10 f_IF.
TimeSeries synthesize_envelope_trace(const TonePair<double>& p, double sample_rate,
                                     double duration, EnvelopeForm form);

inline constexpr double kMinSamplesPerIfCycle = 10.0;

/// Frequency of the largest non-DC bin of the mean-removed series (FFT).
double dominant_frequency(const TimeSeries& series);

/// Amplitude of the component at `frequency` by single-bin correlation of the mean-removed
/// series. Exact for tones that complete an integer number of cycles in the record.
double tone_amplitude(const TimeSeries& series, double frequency);

}  // namespace rydmix
