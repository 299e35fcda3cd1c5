#include <doctest.h>

#include <random>
#include <sstream>
#include <vector>

#include "rydmix/calibration.hpp"

using namespace rydmix;

namespace {
const auto kCs = RydbergTransition<double>::cesium_34d_35p();

std::vector<CalibrationPoint> synthetic(double cf, int n, double rel_noise, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::vector<CalibrationPoint> pts;
  for (int i = 0; i < n; ++i) {
    const double e_ff = 0.8 * std::pow(10.0, double(i) / n);
    pts.push_back({0.0, e_ff, cf * e_ff * (1.0 + rel_noise * normal(rng))});
  }
  return pts;
}
}  // namespace

TEST_CASE("field from AT splitting") {
  CHECK(e_from_at_splitting(4e6, kCs) == doctest::Approx(0.72).epsilon(0.01));
  CHECK(e_from_at_splitting(0.0, kCs) == 0.0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 20.0);
  for (int i = 0; i < 100; ++i) {
    const double e = u(rng);
    CHECK(e_from_at_splitting(at_splitting(e, kCs), kCs) == doctest::Approx(e).epsilon(1e-12));
  }
  CHECK_THROWS_AS(e_from_at_splitting(-1.0, kCs), DomainError);
}

TEST_CASE("cell factor fit on exact data") {
  std::mt19937_64 rng(1);
  const auto pts = synthetic(0.90, 12, 0.0, rng);
  const auto cf = fit_cell_factor(pts);
  CHECK(std::abs(cf.value - 0.90) < 1e-10);
  CHECK(cf.fit_uncertainty < 1e-12);

  const auto unit = synthetic(1.0, 5, 0.0, rng);
  CHECK(fit_cell_factor(unit).value == doctest::Approx(1.0).epsilon(1e-14));

  const auto free = fit_log_log(pts);
  CHECK(free.slope == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::pow(10.0, free.intercept) == doctest::Approx(0.90).epsilon(1e-10));
  CHECK(free.r_squared == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cell factor is scale-equivariant") {
  std::mt19937_64 rng(5);
  auto pts = synthetic(0.9, 15, 0.05, rng);
  const double base = fit_cell_factor(pts).value;
  for (auto& p : pts) p.e_cell_measured *= 1.7;
  CHECK(fit_cell_factor(pts).value == doctest::Approx(1.7 * base).epsilon(1e-13));
}

TEST_CASE("cell factor Monte-Carlo under 5% noise") {
  std::mt19937_64 rng(20240601);
  int within = 0;
  int covered = 0;
  constexpr int kTrials = 1000;
  for (int t = 0; t < kTrials; ++t) {
    const auto cf = fit_cell_factor(synthetic(0.9, 20, 0.05, rng));
    if (std::abs(cf.value / 0.9 - 1.0) < 0.03) ++within;
    if (std::abs(cf.value - 0.9) < 2.0 * cf.fit_uncertainty) ++covered;
  }
  CHECK(within >= 950);
  // The reported uncertainty is a sensible standard error: ~95% 2-sigma coverage.
  CHECK(covered > 900);
}

TEST_CASE("cell factor errors") {
  std::vector<CalibrationPoint> one{{0, 1.0, 0.9}};
  CHECK_THROWS_AS(fit_cell_factor(one), InsufficientDataError);
  std::vector<CalibrationPoint> bad{{0, 1.0, 0.9}, {0, 0.0, 0.9}};
  CHECK_THROWS_AS(fit_cell_factor(bad), DomainError);
  std::vector<CalibrationPoint> neg{{0, 1.0, 0.9}, {0, 1.0, -0.9}};
  CHECK_THROWS_AS(fit_cell_factor(neg), DomainError);
}

TEST_CASE("uncertainty combination") {
  const std::vector<double> five{0.05};
  const std::vector<double> none{};
  const std::vector<double> pyth{0.03, 0.04};
  CHECK(combine_uncertainty(five) == doctest::Approx(0.05));
  CHECK(combine_uncertainty(none) == 0.0);
  CHECK(combine_uncertainty(pyth) == doctest::Approx(0.05));
  const AntennaLink<double> link;
  CHECK(gain_field_uncertainty(link) == doctest::Approx(std::pow(10.0, 0.4 / 20.0) - 1.0));
}

TEST_CASE("calibration CSV input") {
  const AntennaLink<double> link;
  std::istringstream fields("# bench run\ne_ff_vpm,e_cell_vpm\n1.0,0.9\n2.0,1.8\n");
  const auto a = read_calibration_csv(fields, link, kCs);
  REQUIRE(a.size() == 2);
  CHECK(fit_cell_factor(a).value == doctest::Approx(0.9));

  // Build (dBm, splitting) rows from a known C_f and read them back.
  std::ostringstream rows;
  rows << "p_rf_dbm,delta_f_hz\n";
  for (double dbm : {-20.0, -15.0, -10.0}) {
    const double e = 0.9 * e_far_field(dbm_to_watts(dbm), link);
    rows.precision(17);
    rows << dbm << ',' << at_splitting(e, kCs) << '\n';
  }
  std::istringstream in(rows.str());
  const auto b = read_calibration_csv(in, link, kCs);
  REQUIRE(b.size() == 3);
  CHECK(fit_cell_factor(b).value == doctest::Approx(0.9).epsilon(1e-10));

  std::istringstream wrong("a,b\n1,2\n");
  CHECK_THROWS(read_calibration_csv(wrong, link, kCs));
}
