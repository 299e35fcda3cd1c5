#pragma once

// Horn-to-cell link arithmetic: dBm conversions, attenuator chains, far-field distance,
// and the far-field E estimate scaled by the fitted cell factor.

#include <cmath>
#include <numeric>
#include <vector>

#include "rydmix/errors.hpp"

namespace rydmix {

/// Prefactor of the far-field relation E = sqrt(K P G) / R, in ohms, as printed.
inline constexpr double kFarFieldImpedanceFactor = 59.9585;

template <typename Scalar>
Scalar dbm_to_watts(Scalar p_dbm) {
  return std::pow(Scalar(10), (p_dbm - Scalar(30)) / Scalar(10));
}

template <typename Scalar>
Scalar watts_to_dbm(Scalar p_watts) {
  if (!(p_watts > 0)) throw DomainError("watts_to_dbm: power must be positive");
  return Scalar(10) * std::log10(p_watts) + Scalar(30);
}

template <typename Scalar>
Scalar db_to_linear_power(Scalar db) {
  return std::pow(Scalar(10), db / Scalar(10));
}

template <typename Scalar = double>
struct PowerChain {
  Scalar generator_power_dbm = 0;
  std::vector<Scalar> losses_db;

  void validate() const {
    for (const auto loss : losses_db) {
      if (loss < 0) throw DomainError("PowerChain: losses must be non-negative dB values");
    }
  }
};

template <typename Scalar>
Scalar chain_output_dbm(const PowerChain<Scalar>& c) {
  c.validate();
  return c.generator_power_dbm - std::accumulate(c.losses_db.begin(), c.losses_db.end(), Scalar(0));
}

template <typename Scalar = double>
struct AntennaLink {
  Scalar gain_db = Scalar(15.55);
  Scalar gain_uncertainty_db = Scalar(0.4);
  Scalar distance_r = Scalar(0.385);            // m
  Scalar aperture_diagonal_a = Scalar(0.04828);  // m
  Scalar rf_wavelength = Scalar(0.015286);       // m

  void validate() const {
    if (!(distance_r > 0)) throw DomainError("AntennaLink: distance must be positive");
    if (!(rf_wavelength > 0)) throw DomainError("AntennaLink: wavelength must be positive");
    if (!(aperture_diagonal_a > 0)) throw DomainError("AntennaLink: aperture must be positive");
  }
};

template <typename Scalar = double>
struct CellFactor {
  Scalar value = Scalar(0.90);
  Scalar fit_uncertainty = Scalar(0);
};

template <typename Scalar>
Scalar far_field_distance(const AntennaLink<Scalar>& link) {
  link.validate();
  return Scalar(2) * link.aperture_diagonal_a * link.aperture_diagonal_a / link.rf_wavelength;
}

template <typename Scalar>
bool in_far_field(const AntennaLink<Scalar>& link) {
  return link.distance_r >= far_field_distance(link);
}

/// Free-space field at distance R from a horn radiating p_rf watts.
template <typename Scalar>
Scalar e_far_field(Scalar p_rf, const AntennaLink<Scalar>& link) {
  if (p_rf < 0) throw DomainError("e_far_field: power must be non-negative");
  link.validate();
  return std::sqrt(Scalar(kFarFieldImpedanceFactor) * p_rf * db_to_linear_power(link.gain_db)) /
         link.distance_r;
}

template <typename Scalar>
Scalar e_cell(Scalar p_rf, const AntennaLink<Scalar>& link, const CellFactor<Scalar>& cf) {
  if (!(cf.value > 0)) throw DomainError("e_cell: cell factor must be positive");
  return cf.value * e_far_field(p_rf, link);
}

/// Horn power that produces e_cell_target inside the cell.
template <typename Scalar>
Scalar power_for_e_cell(Scalar e_cell_target, const AntennaLink<Scalar>& link,
                        const CellFactor<Scalar>& cf) {
  if (e_cell_target < 0) throw DomainError("power_for_e_cell: field must be non-negative");
  const Scalar e_ff = e_cell_target / cf.value * link.distance_r;
  return e_ff * e_ff / (Scalar(kFarFieldImpedanceFactor) * db_to_linear_power(link.gain_db));
}

}  // namespace rydmix
