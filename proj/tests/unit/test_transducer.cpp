#include <doctest.h>

#include <algorithm>
#include <vector>

#include "rydmix/transducer.hpp"

using namespace rydmix;

namespace {
const EitModel<double> kModel(RydbergTransition<double>::cesium_34d_35p());

// Peak locations by fine grid search with no interpolation.
std::vector<double> grid_peaks(double e_field) {
  std::vector<double> peaks;
  const double step = 500.0;
  double prev2 = eit_spectrum(kModel, -20e6 - step, e_field);
  double prev = eit_spectrum(kModel, -20e6, e_field);
  for (double d = -20e6 + step; d <= 20e6; d += step) {
    const double cur = eit_spectrum(kModel, d, e_field);
    if (prev > prev2 && prev >= cur) peaks.push_back(d - step);
    prev2 = prev;
    prev = cur;
  }
  return peaks;
}

TonePair<double> pair(double e_lo, double e_sig) {
  return {ToneField<double>(e_lo, 19.626000e9), ToneField<double>(e_sig, 19.626090e9)};
}

double if_amplitude(double e_lo, double e_sig) {
  const auto env = synthesize_envelope_trace(pair(e_lo, e_sig), 2e6, 1e-3, EnvelopeForm::exact);
  return tone_amplitude(photodiode_trace(kModel, PhotodiodeModel{}, env), 90e3);
}
}  // namespace

TEST_CASE("model validation") {
  const auto t = RydbergTransition<double>::cesium_34d_35p();
  CHECK_THROWS_AS(EitModel<double>(t, 0.0, 0.3), DomainError);
  CHECK_THROWS_AS(EitModel<double>(t, 0.5, -0.1), DomainError);
  CHECK_THROWS_AS(EitModel<double>(t, 0.8, 0.3), DomainError);
  CHECK(kModel.e_at() == doctest::Approx(0.72).epsilon(0.01));
}

TEST_CASE("EIT spectrum") {
  CHECK(eit_spectrum(kModel, 0.0, 0.0) == doctest::Approx(0.8));
  for (double e : {0.0, 0.3, 0.72, 2.0}) {
    for (double d : {1e5, 2.5e6, 9e6}) {
      CHECK(eit_spectrum(kModel, d, e) == eit_spectrum(kModel, -d, e));
    }
  }
  const Eigen::ArrayXd grid = Eigen::ArrayXd::LinSpaced(101, -10e6, 10e6);
  const Eigen::ArrayXd s = eit_spectrum(kModel, grid, 0.5);
  for (Eigen::Index i = 0; i < grid.size(); i += 10) {
    CHECK(s[i] == doctest::Approx(eit_spectrum(kModel, grid[i], 0.5)).epsilon(1e-14));
  }
}

TEST_CASE("AT splitting in the spectrum") {
  const double e_at = kModel.e_at();
  CHECK(grid_peaks(0.0) == std::vector<double>{0.0});
  CHECK(grid_peaks(0.5 * e_at).size() == 1);

  const auto at = grid_peaks(e_at);
  REQUIRE(at.size() == 2);
  // Overlapping Lorentzians pull the maxima inwards: ~0.91 Gamma at the onset.
  CHECK(at[1] - at[0] == doctest::Approx(0.91 * 4e6).epsilon(0.01));
  CHECK(at[1] - at[0] == doctest::Approx(4e6).epsilon(0.1));

  const auto two = grid_peaks(2 * e_at);
  REQUIRE(two.size() == 2);
  CHECK(two[1] == doctest::Approx(4e6).epsilon(0.01));
  CHECK(two[0] == doctest::Approx(-4e6).epsilon(0.01));
}

TEST_CASE("on-resonance transmission") {
  const double e_at = kModel.e_at();
  CHECK(transmission_at_resonance(kModel, 0.0) == doctest::Approx(0.8));
  CHECK(transmission_at_resonance(kModel, e_at) == doctest::Approx(0.3 + 0.25).epsilon(1e-14));
  CHECK(transmission_at_resonance(kModel, 3 * e_at) == doctest::Approx(0.3 + 0.05).epsilon(1e-14));
  double prev = 1.0;
  for (double e = 0.0; e < 5.0; e += 0.01) {
    const double t = transmission_at_resonance(kModel, e);
    CHECK(t < prev);
    CHECK(t == doctest::Approx(eit_spectrum(kModel, 0.0, e)).epsilon(1e-12));
    prev = t;
  }
  CHECK_THROWS_AS(transmission_at_resonance(kModel, -0.1), DomainError);
}

TEST_CASE("IF gain") {
  const double e_at = kModel.e_at();
  // Central finite difference of the transmission curve.
  for (double e : {0.1, 0.4, 0.72, 1.3, 3.0}) {
    const double h = 1e-6;
    const double fd = (transmission_at_resonance(kModel, e - h) - transmission_at_resonance(kModel, e + h)) / (2 * h);
    CHECK(if_gain(kModel, e) == doctest::Approx(fd).epsilon(1e-6));
  }
  CHECK(if_gain(kModel, e_at) == doctest::Approx(0.5 / (2 * e_at)));
  const double peak = e_at / std::sqrt(3.0);
  CHECK(if_gain(kModel, peak) > if_gain(kModel, 0.99 * peak));
  CHECK(if_gain(kModel, peak) > if_gain(kModel, 1.01 * peak));
  for (double e = std::sqrt(3.0) * e_at * 1.001; e < 10 * e_at; e *= 1.1) {
    CHECK(if_gain(kModel, e * 1.01) < if_gain(kModel, e));
  }
}

TEST_CASE("photodiode trace") {
  const double e_at = kModel.e_at();
  const auto flat = synthesize_envelope_trace(pair(0.72, 0.0), 2e6, 1e-4, EnvelopeForm::exact);
  const auto v = photodiode_trace(kModel, PhotodiodeModel{}, flat);
  CHECK(v.unit == UnitTag::volts);
  CHECK(v.samples.maxCoeff() == v.samples.minCoeff());

  // IF amplitude at E_lo = E_AT, small signal: gain * contrast * E_sig / (2 E_AT).
  const double e_sig = 0.01 * e_at;
  const auto env = synthesize_envelope_trace(pair(e_at, e_sig), 2e6, 1e-3, EnvelopeForm::exact);
  const auto volts = photodiode_trace(kModel, PhotodiodeModel{}, env);
  CHECK(tone_amplitude(volts, 90e3) == doctest::Approx(0.5 * e_sig / (2 * e_at)).epsilon(1e-3));

  PhotodiodeModel noisy{2.0, 0.1, 1e-6, 99};
  const auto a = photodiode_trace(kModel, noisy, env);
  const auto b = photodiode_trace(kModel, noisy, env);
  CHECK(a.samples == b.samples);
  noisy.rng_seed = 100;
  CHECK(photodiode_trace(kModel, noisy, env).samples != a.samples);

  Photodiode pd(kModel, noisy, 2e6);
  CHECK(pd.noise_sigma() == doctest::Approx(1e-6 * 1000.0));

  CHECK_THROWS_AS(photodiode_trace(kModel, PhotodiodeModel{}, v), UnitError);
  CHECK_THROWS_AS(photodiode_trace(kModel, PhotodiodeModel{0.0}, env), DomainError);
}

TEST_CASE("photodiode noise statistics") {
  const auto env = synthesize_envelope_trace(pair(0.72, 0.0), 2e6, 0.05, EnvelopeForm::exact);
  const PhotodiodeModel pd{1.0, 0.0, 1e-6, 5};
  const auto v = photodiode_trace(kModel, pd, env);
  const Eigen::ArrayXd dev = v.samples.array() - transmission_at_resonance(kModel, 0.72);
  CHECK(std::abs(dev.mean()) < 5 * 1e-3 / std::sqrt(double(dev.size())));
  CHECK(std::sqrt(dev.square().mean()) == doctest::Approx(1e-3).epsilon(0.01));
}

TEST_CASE("small-signal linearity of the IF amplitude") {
  const double e_lo = 0.72;
  const double slope = if_amplitude(e_lo, 0.001) / 0.001;
  for (double e_sig : {0.002, 0.01, 0.02, 0.036}) {
    CHECK(if_amplitude(e_lo, e_sig) / e_sig == doctest::Approx(slope).epsilon(0.01));
  }
  // Per-unit-signal IF amplitude peaks and then rolls off with the LO field.
  const double e_at = kModel.e_at();
  CHECK(if_amplitude(e_at / std::sqrt(3.0), 0.001) > if_amplitude(0.3 * e_at, 0.001));
  CHECK(if_amplitude(e_at / std::sqrt(3.0), 0.001) > if_amplitude(e_at, 0.001));
  CHECK(if_amplitude(2 * e_at, 0.001) > if_amplitude(3 * e_at, 0.001));
}
