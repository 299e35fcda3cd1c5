#pragma once

// Closed-form Rydberg electrometry relations: Autler-Townes splitting, the AT-resolvable
// field floor, and Rabi frequencies. Everything here is a pure function over value types.
//
// Unit convention: splittings and linewidths are cyclic (Hz); Rabi frequencies are
// angular (rad/s). The 2*pi lives in exactly one place per relation.

#include <Eigen/Core>

#include <cmath>
#include <string>

#include "rydmix/errors.hpp"

namespace rydmix {

template <typename Scalar>
inline constexpr Scalar kPi = Scalar(3.141592653589793238462643383279502884L);

template <typename Scalar = double>
struct PhysicalConstants {
  static constexpr Scalar hbar = Scalar(1.054571817e-34);               // J s (CODATA 2018)
  static constexpr Scalar elementary_charge = Scalar(1.602176634e-19);  // C (exact)
  static constexpr Scalar bohr_radius = Scalar(0.529177e-10);           // m, digits as quoted
};

/// One two-photon EIT ladder plus the RF transition it probes.
///
/// The dipole moment is stored as its radial and angular factors in atomic units (e a0);
/// dipole_moment_si() multiplies them out.
template <typename Scalar = double>
class RydbergTransition {
 public:
  RydbergTransition(Scalar probe_wavelength, Scalar coupling_wavelength, Scalar dipole_radial,
                    Scalar dipole_angular, Scalar rf_resonance, Scalar eit_linewidth)
      : probe_wavelength_(probe_wavelength),
        coupling_wavelength_(coupling_wavelength),
        dipole_radial_(dipole_radial),
        dipole_angular_(dipole_angular),
        rf_resonance_(rf_resonance),
        eit_linewidth_(eit_linewidth) {
    if (!(probe_wavelength > 0) || !(coupling_wavelength > 0)) {
      throw DomainError("RydbergTransition: wavelengths must be positive");
    }
    if (!(rf_resonance > 0) || !(eit_linewidth > 0)) {
      throw DomainError("RydbergTransition: rf_resonance and eit_linewidth must be positive");
    }
    if (!(dipole_radial * dipole_angular > 0)) {
      throw DomainError("RydbergTransition: dipole_radial * dipole_angular must be positive");
    }
  }

  /// 133Cs, 6S1/2 -> 6P3/2 -> 34D5/2 ladder probed on 34D5/2 -> 35P3/2 near 19.626 GHz.
  static RydbergTransition cesium_34d_35p() {
    return {Scalar(852e-9), Scalar(511.148e-9), Scalar(1476.6048), Scalar(0.48989),
            Scalar(19.626e9), Scalar(4e6)};
  }

  Scalar probe_wavelength() const { return probe_wavelength_; }
  Scalar coupling_wavelength() const { return coupling_wavelength_; }
  Scalar dipole_radial() const { return dipole_radial_; }
  Scalar dipole_angular() const { return dipole_angular_; }
  Scalar rf_resonance() const { return rf_resonance_; }
  Scalar eit_linewidth() const { return eit_linewidth_; }

  /// Dipole moment in units of e a0.
  Scalar dipole_atomic_units() const { return dipole_radial_ * dipole_angular_; }

 private:
  Scalar probe_wavelength_;
  Scalar coupling_wavelength_;
  Scalar dipole_radial_;
  Scalar dipole_angular_;
  Scalar rf_resonance_;
  Scalar eit_linewidth_;
};

template <typename Scalar>
Scalar dipole_moment_si(const RydbergTransition<Scalar>& t) {
  using C = PhysicalConstants<Scalar>;
  return t.dipole_atomic_units() * C::elementary_charge * C::bohr_radius;
}

namespace detail {

// Hz of AT splitting per V/m of applied field.
template <typename Scalar>
Scalar at_splitting_per_field(const RydbergTransition<Scalar>& t) {
  using C = PhysicalConstants<Scalar>;
  return (t.coupling_wavelength() / t.probe_wavelength()) * dipole_moment_si(t) /
         (Scalar(2) * kPi<Scalar> * C::hbar);
}

}  // namespace detail

/// Separation of the two AT peaks in the probe spectrum, Hz. Linear in the field.
template <typename Scalar>
Scalar at_splitting(Scalar e_field, const RydbergTransition<Scalar>& t) {
  if (e_field < 0) throw DomainError("at_splitting: field must be non-negative");
  return e_field * detail::at_splitting_per_field(t);
}

template <typename Derived>
typename Derived::PlainObject at_splitting(
    const Eigen::ArrayBase<Derived>& e_field,
    const RydbergTransition<typename Derived::Scalar>& t) {
  if ((e_field < 0).any()) throw DomainError("at_splitting: field must be non-negative");
  return e_field * detail::at_splitting_per_field(t);
}

/// Field whose AT splitting equals the EIT linewidth: the weakest field resolvable by
/// splitting alone.
template <typename Scalar>
Scalar min_detectable_at_field(const RydbergTransition<Scalar>& t) {
  return t.eit_linewidth() / detail::at_splitting_per_field(t);
}

/// On-resonance Rabi frequency, rad/s.
template <typename Scalar>
Scalar rabi_frequency(Scalar e_field, const RydbergTransition<Scalar>& t) {
  if (e_field < 0) throw DomainError("rabi_frequency: field must be non-negative");
  return dipole_moment_si(t) * e_field / PhysicalConstants<Scalar>::hbar;
}

/// sqrt(omega0^2 + detuning^2); both in the same angular units.
template <typename Scalar>
Scalar generalized_rabi(Scalar omega0, Scalar detuning) {
  if (omega0 < 0) throw DomainError("generalized_rabi: omega0 must be non-negative");
  return std::hypot(omega0, detuning);
}

}  // namespace rydmix
