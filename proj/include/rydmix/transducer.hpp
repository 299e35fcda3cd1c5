#pragma once

// Field envelope -> probe transmission -> photodiode volts.
//
// The EIT line is phenomenological: two unit-height Lorentzians of FWHM Gamma_EIT placed at
// +/- half the AT splitting. With the probe locked on resonance only the delta = 0 value
// matters, which collapses to background + contrast / (1 + (E/E_AT)^2).

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <span>

#include "rydmix/atoms.hpp"
#include "rydmix/fields.hpp"

namespace rydmix {

template <typename Scalar = double>
class EitModel {
 public:
  explicit EitModel(RydbergTransition<Scalar> transition, Scalar contrast = Scalar(0.5),
                    Scalar background = Scalar(0.3))
      : transition_(transition), contrast_(contrast), background_(background) {
    if (!(contrast > 0) || contrast > 1) throw DomainError("EitModel: contrast must be in (0,1]");
    if (background < 0 || !(background < 1)) {
      throw DomainError("EitModel: background_transmission must be in [0,1)");
    }
    if (background + contrast > 1) {
      throw DomainError("EitModel: background_transmission + contrast must not exceed 1");
    }
  }

  const RydbergTransition<Scalar>& transition() const { return transition_; }
  Scalar contrast() const { return contrast_; }
  Scalar background() const { return background_; }
  Scalar e_at() const { return min_detectable_at_field(transition_); }

 private:
  RydbergTransition<Scalar> transition_;
  Scalar contrast_;
  Scalar background_;
};

namespace detail {
template <typename T, typename Scalar>
auto unit_lorentzian(const T& offset, Scalar fwhm) {
  const Scalar half = fwhm / Scalar(2);
  return Scalar(1) / (Scalar(1) + (offset / half) * (offset / half));
}
}  // namespace detail

/// Probe transmission vs coupling-laser detuning (Hz) at a given RF field.
template <typename Scalar>
Scalar eit_spectrum(const EitModel<Scalar>& m, Scalar coupling_detuning, Scalar e_field) {
  const Scalar half_split = at_splitting(e_field, m.transition()) / Scalar(2);
  const Scalar gamma = m.transition().eit_linewidth();
  return m.background() +
         m.contrast() / Scalar(2) *
             (detail::unit_lorentzian(coupling_detuning - half_split, gamma) +
              detail::unit_lorentzian(coupling_detuning + half_split, gamma));
}

template <typename Derived>
typename Derived::PlainObject eit_spectrum(const EitModel<typename Derived::Scalar>& m,
                                           const Eigen::ArrayBase<Derived>& coupling_detuning,
                                           typename Derived::Scalar e_field) {
  using Scalar = typename Derived::Scalar;
  const Scalar half_split = at_splitting(e_field, m.transition()) / Scalar(2);
  const Scalar half = m.transition().eit_linewidth() / Scalar(2);
  const auto lo = (coupling_detuning - half_split) / half;
  const auto hi = (coupling_detuning + half_split) / half;
  return m.background() +
         m.contrast() / Scalar(2) * ((Scalar(1) + lo * lo).inverse() + (Scalar(1) + hi * hi).inverse());
}

template <typename Scalar>
Scalar transmission_at_resonance(const EitModel<Scalar>& m, Scalar e_field) {
  if (e_field < 0) throw DomainError("transmission_at_resonance: field must be non-negative");
  const Scalar u = e_field / m.e_at();
  return m.background() + m.contrast() / (Scalar(1) + u * u);
}

/// |dT/dE| at the LO operating point: transmission change per V/m of envelope modulation.
template <typename Scalar>
Scalar if_gain(const EitModel<Scalar>& m, Scalar e_lo) {
  const Scalar e_at = m.e_at();
  const Scalar u = e_lo / e_at;
  const Scalar denom = Scalar(1) + u * u;
  return Scalar(2) * m.contrast() * u / (e_at * denom * denom);
}

struct PhotodiodeModel {
  double responsivity_gain = 1.0;  // V per unit transmission
  double dark_voltage = 0.0;       // V
  double noise_density = 0.0;      // V / sqrt(Hz)
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (!(responsivity_gain > 0)) throw DomainError("PhotodiodeModel: gain must be positive");
    if (noise_density < 0) throw DomainError("PhotodiodeModel: noise_density must be >= 0");
  }
};

/// Streaming photodiode: one instance per trace. White Gaussian noise is drawn from a
/// generator seeded with rng_seed, so a fixed seed reproduces the trace exactly.
class Photodiode {
 public:
  Photodiode(const EitModel<double>& model, const PhotodiodeModel& pd, double sample_rate);

  void process(std::span<const double> envelope, std::span<double> volts);
  double noise_sigma() const { return sigma_; }

 private:
  double background_;
  double contrast_;
  double inv_e_at_;
  double gain_;
  double dark_;
  double sigma_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

TimeSeries photodiode_trace(const EitModel<double>& model, const PhotodiodeModel& pd,
                            const TimeSeries& envelope);

}  // namespace rydmix
