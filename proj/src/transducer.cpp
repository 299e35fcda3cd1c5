#include "rydmix/transducer.hpp"

#include <cmath>

namespace rydmix {

Photodiode::Photodiode(const EitModel<double>& model, const PhotodiodeModel& pd,
                       double sample_rate)
    : background_(model.background()),
      contrast_(model.contrast()),
      inv_e_at_(1.0 / model.e_at()),
      gain_(pd.responsivity_gain),
      dark_(pd.dark_voltage),
      sigma_(pd.noise_density * std::sqrt(sample_rate / 2.0)),
      rng_(pd.rng_seed) {
  pd.validate();
  if (!(sample_rate > 0)) throw ConfigError("Photodiode: sample rate must be positive");
}

void Photodiode::process(std::span<const double> envelope, std::span<double> volts) {
  const std::size_t n = std::min(envelope.size(), volts.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double u = envelope[i] * inv_e_at_;
    double v = dark_ + gain_ * (background_ + contrast_ / (1.0 + u * u));
    if (sigma_ > 0) v += sigma_ * normal_(rng_);
    volts[i] = v;
  }
}

TimeSeries photodiode_trace(const EitModel<double>& model, const PhotodiodeModel& pd,
                            const TimeSeries& envelope) {
  if (envelope.unit != UnitTag::volts_per_meter) {
    throw UnitError("photodiode_trace: envelope must be tagged volts_per_meter, got " +
                    to_string(envelope.unit));
  }
  TimeSeries out;
  out.sample_rate = envelope.sample_rate;
  out.start_time = envelope.start_time;
  out.unit = UnitTag::volts;
  out.samples.resize(envelope.size());
  Photodiode diode(model, pd, envelope.sample_rate);
  diode.process(envelope.view(),
                {out.samples.data(), static_cast<std::size_t>(out.samples.size())});
  return out;
}

}  // namespace rydmix
