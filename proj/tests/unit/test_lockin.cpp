#include <doctest.h>

#include <cmath>
#include <vector>

#include "rydmix/lockin.hpp"

using namespace rydmix;

namespace {

LockInConfig desk(CutoffConvention c = CutoffConvention::inv_2pi_tau) {
  LockInConfig cfg;
  cfg.f_ref = 10e3;
  cfg.time_constant = 0.05;
  cfg.sample_rate = 100e3;
  cfg.convention = c;
  return cfg;
}

TimeSeries tone(const LockInConfig& cfg, double amplitude, double freq, double phase,
                double duration) {
  TimeSeries s;
  s.sample_rate = cfg.sample_rate;
  s.unit = UnitTag::volts;
  const auto n = Eigen::Index(std::llround(duration * cfg.sample_rate));
  s.samples.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    s.samples[i] = amplitude * std::cos(2 * kPi<double> * freq * double(i) / cfg.sample_rate + phase);
  }
  return s;
}

// Residual of an n-stage cascade of unit-gain exponentials after s time constants:
// e^-s * sum_{k<n} s^k / k!.
double poisson_tail(int n, double s) {
  double term = 1.0, sum = 0.0;
  for (int k = 0; k < n; ++k) {
    sum += term;
    term *= s / double(k + 1);
  }
  return std::exp(-s) * sum;
}

}  // namespace

TEST_CASE("pole count") {
  CHECK(pole_count(24) == 4);
  CHECK(pole_count(6) == 1);
  CHECK(pole_count(12) == 2);
  CHECK(pole_count(18) == 3);
  for (int bad : {0, 7, 30, -6}) {
    try {
      pole_count(bad);
      FAIL("expected error");
    } catch (const ConfigError& e) {
      CHECK(e.key() == "lockin.slope_db_oct");
    }
  }
}

TEST_CASE("cutoff conventions") {
  LockInConfig cfg;
  cfg.convention = CutoffConvention::inv_tau;
  CHECK(cutoff_frequency(cfg) == doctest::Approx(0.3333).epsilon(1e-3));
  cfg.convention = CutoffConvention::inv_2pi_tau;
  CHECK(cutoff_frequency(cfg) == doctest::Approx(0.0531).epsilon(1e-3));
  const double fc = cutoff_frequency(cfg);
  cfg.time_constant *= 2;
  CHECK(cutoff_frequency(cfg) == doctest::Approx(fc / 2));
  CHECK(parse_cutoff_convention("inv-tau") == CutoffConvention::inv_tau);
  CHECK(to_string(parse_cutoff_convention("inv-2pi-tau")) == "inv-2pi-tau");
  CHECK_THROWS_AS(parse_cutoff_convention("rc"), ConfigError);
}

TEST_CASE("analytic rejection") {
  LockInConfig cfg;
  const double fc = cutoff_frequency(cfg);
  CHECK(rejection_db(cfg, 0.0) == 0.0);
  CHECK(rejection_db(cfg, fc) == doctest::Approx(-12.04).epsilon(1e-3));
  CHECK(rejection_db(cfg, 10 * fc) == doctest::Approx(-80.1).epsilon(1e-3));
  CHECK_THROWS_AS(rejection_db(cfg, -1.0), DomainError);
  double prev = 1.0;
  for (double d = 0.0; d < 50.0; d += 0.5) {
    CHECK(rejection_db(cfg, d) < prev);
    prev = rejection_db(cfg, d);
  }
}

TEST_CASE("config validation") {
  auto cfg = desk();
  cfg.sample_rate = 40e3;
  try {
    cfg.validate();
    FAIL("expected error");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "lockin.sample_rate_hz");
  }
  cfg = desk();
  cfg.time_constant = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK_THROWS_AS(LockInAmplifier(desk(), 0), ConfigError);

  auto s = tone(desk(), 1.0, 10e3, 0.0, 0.01);
  s.sample_rate = 50e3;
  CHECK_THROWS_AS(demodulate(s, desk()), ConfigError);
  CHECK_THROWS_AS(demodulate(TimeSeries{}, desk()), ConfigError);
}

TEST_CASE("on-tune recovery") {
  // inv-tau: pole time constant tau/(2 pi), fully settled after 10 tau.
  auto cfg = desk(CutoffConvention::inv_tau);
  const auto out = demodulate(tone(cfg, 1.0, cfg.f_ref, 0.0, 10 * cfg.time_constant), cfg).output;
  CHECK(out.settled);
  CHECK_FALSE(out.warning);
  CHECK(out.r == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(out.theta == doctest::Approx(0.0).epsilon(1e-6));

  // inv-2pi-tau: after 10 tau the four-pole Poisson tail is still ~1%; the reported R is the
  // final-window mean of 0.5 (1 - tail(s)) for s in [9, 10].
  cfg = desk();
  const auto a = demodulate(tone(cfg, 1.0, cfg.f_ref, 0.0, 10 * cfg.time_constant), cfg).output;
  double expect = 0;
  constexpr int kSteps = 10000;
  for (int i = 0; i < kSteps; ++i) expect += 0.5 * (1 - poisson_tail(4, 9.0 + (i + 0.5) / kSteps));
  expect /= kSteps;
  CHECK(a.r == doctest::Approx(expect).epsilon(2e-4));
  CHECK(a.r < 0.5 * 0.99);
}

TEST_CASE("settling follows the Poisson tail") {
  CHECK(poisson_tail(4, 10.0) == doctest::Approx(0.010336).epsilon(1e-4));
  CHECK(poisson_tail(4, 10.1) < 0.01);

  for (auto conv : {CutoffConvention::inv_2pi_tau, CutoffConvention::inv_tau}) {
    auto cfg = desk(conv);
    const auto d = demodulate(tone(cfg, 1.0, cfg.f_ref, 0.0, 12 * cfg.time_constant), cfg, 1);
    REQUIRE(d.trace);
    const auto& r = d.trace->r.samples;
    const double per_pole_tau = 1.0 / (2 * kPi<double> * cutoff_frequency(cfg));
    for (double m : {2.0, 5.0, 10.0}) {
      const auto i = Eigen::Index(std::llround(m * cfg.time_constant * cfg.sample_rate)) - 1;
      const double residual = 1.0 - r[i] / 0.5;
      const double s = m * cfg.time_constant / per_pole_tau;
      CHECK(residual == doctest::Approx(poisson_tail(4, s)).epsilon(0.01).scale(1e-6));
    }
    const auto i10 = Eigen::Index(std::llround(10 * cfg.time_constant * cfg.sample_rate)) - 1;
    if (conv == CutoffConvention::inv_tau) CHECK(1.0 - r[i10] / 0.5 < 0.01);
    const auto i101 = Eigen::Index(std::llround(10.1 * cfg.time_constant * cfg.sample_rate)) - 1;
    CHECK(1.0 - r[i101] / 0.5 < 0.01);
  }
}

TEST_CASE("detuned tones follow the cascade transfer function") {
  for (auto conv : {CutoffConvention::inv_2pi_tau, CutoffConvention::inv_tau}) {
    auto cfg = desk(conv);
    const double fc = cutoff_frequency(cfg);
    // Long enough that the switch-on transient is below the deepest rejection measured.
    const double duration = (conv == CutoffConvention::inv_tau ? 20 : 40) * cfg.time_constant;
    const double on = demodulate(tone(cfg, 1.0, cfg.f_ref, 0.0, duration), cfg).output.r;
    for (double x : {0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0}) {
      const double r = demodulate(tone(cfg, 1.0, cfg.f_ref + x * fc, 0.0, duration), cfg).output.r;
      CAPTURE(x);
      CHECK(std::abs(20 * std::log10(r / on) - rejection_db(cfg, x * fc)) < 0.5);
    }
  }
}

TEST_CASE("phase invariance and linearity") {
  auto cfg = desk(CutoffConvention::inv_tau);
  const double dur = 10 * cfg.time_constant;
  const auto base = demodulate(tone(cfg, 0.8, cfg.f_ref, 0.0, dur), cfg).output;
  for (double psi : {0.5, -1.2, 2.9}) {
    const auto shifted = demodulate(tone(cfg, 0.8, cfg.f_ref, psi, dur), cfg).output;
    CHECK(shifted.r == doctest::Approx(base.r).epsilon(1e-6));
    CHECK(shifted.theta == doctest::Approx(psi).epsilon(1e-6));
  }
  auto in = tone(cfg, 0.8, cfg.f_ref + 3.0, 0.4, dur);
  const double r1 = demodulate(in, cfg).output.r;
  in.samples *= 3.5;
  CHECK(demodulate(in, cfg).output.r == doctest::Approx(3.5 * r1).epsilon(1e-12));

  in.samples.setZero();
  CHECK(demodulate(in, cfg).output.r == 0.0);
}

TEST_CASE("streaming is chunk-independent") {
  auto cfg = desk();
  const auto s = tone(cfg, 1.0, cfg.f_ref + 7.0, 0.2, 0.3);
  const auto whole = demodulate(s, cfg).output;
  LockInAmplifier amp(cfg, std::size_t(s.size()));
  const auto v = s.view();
  std::size_t pos = 0;
  for (std::size_t len : {3ul, 4093ul, 10000ul}) {
    amp.process(v.subspan(pos, len));
    pos += len;
  }
  amp.process(v.subspan(pos));
  CHECK(amp.processed() == std::size_t(s.size()));
  const auto parts = amp.result();
  CHECK(parts.r == whole.r);
  CHECK(parts.theta == whole.theta);
}

TEST_CASE("unsettled output is flagged") {
  auto cfg = desk();
  const auto out = demodulate(tone(cfg, 1.0, cfg.f_ref, 0.0, 2 * cfg.time_constant), cfg).output;
  CHECK_FALSE(out.settled);
  CHECK(out.warning);
}
