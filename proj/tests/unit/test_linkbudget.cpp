#include <doctest.h>

#include "rydmix/linkbudget.hpp"

using namespace rydmix;

TEST_CASE("dBm conversions") {
  CHECK(dbm_to_watts(0.0) == doctest::Approx(1e-3).epsilon(1e-14));
  CHECK(dbm_to_watts(-40.0) == doctest::Approx(1e-7).epsilon(1e-14));
  CHECK(dbm_to_watts(-180.0) == doctest::Approx(1e-21).epsilon(1e-14));
  for (double p = -200.0; p <= 30.0; p += 0.37) {
    CHECK(watts_to_dbm(dbm_to_watts(p)) == doctest::Approx(p).epsilon(1e-12));
  }
  CHECK_THROWS_AS(watts_to_dbm(0.0), DomainError);
  CHECK_THROWS_AS(watts_to_dbm(-1.0), DomainError);
}

TEST_CASE("attenuator chain") {
  CHECK(chain_output_dbm(PowerChain<double>{-60.0, {111.0}}) == doctest::Approx(-171.0));
  CHECK(chain_output_dbm(PowerChain<double>{-60.0, {}}) == -60.0);
  CHECK(chain_output_dbm(PowerChain<double>{-60.0, {50.0, 61.0}}) ==
        doctest::Approx(chain_output_dbm(PowerChain<double>{-60.0, {111.0}})));
  CHECK_THROWS_AS(chain_output_dbm(PowerChain<double>{0.0, {-3.0}}), DomainError);
}

TEST_CASE("far-field distance") {
  AntennaLink<double> link;
  CHECK(far_field_distance(link) == doctest::Approx(0.305).epsilon(0.001 / 0.305));
  CHECK(in_far_field(link));
  const double d = far_field_distance(link);
  link.aperture_diagonal_a /= 2;
  CHECK(far_field_distance(link) == doctest::Approx(d / 4));
  link.aperture_diagonal_a = 1;
  link.rf_wavelength = 1;
  CHECK(far_field_distance(link) == 2.0);
}

TEST_CASE("far-field and in-cell field") {
  const AntennaLink<double> link;
  const CellFactor<double> cf;
  CHECK(e_far_field(0.0, link) == 0.0);
  // sqrt(59.9585 * 1e-7 * 10^1.555) / 0.385 by hand.
  CHECK(e_far_field(1e-7, link) == doctest::Approx(0.0381).epsilon(0.002));
  CHECK(e_cell(1e-7, link, cf) == doctest::Approx(0.0343).epsilon(0.002));
  CHECK(e_cell(1e-7, link, CellFactor<double>{1.0}) == e_far_field(1e-7, link));
  CHECK(watts_to_dbm(power_for_e_cell(46e-6, link, cf)) == doctest::Approx(-97.5).epsilon(0.1 / 97.5));
  CHECK_THROWS_AS(e_far_field(-1.0, link), DomainError);
}

TEST_CASE("link invariants") {
  AntennaLink<double> link;
  const CellFactor<double> cf;
  const double p = 3.7e-9;
  const double er = e_far_field(p, link) * link.distance_r;
  for (double r : {0.3, 0.5, 1.0, 4.0}) {
    link.distance_r = r;
    CHECK(e_far_field(p, link) * r == doctest::Approx(er).epsilon(1e-14));
  }
  for (double pw : {1e-20, 1e-12, 1e-7, 1e-3}) {
    CHECK(e_cell(pw, link, cf) / e_far_field(pw, link) == doctest::Approx(0.90).epsilon(1e-15));
    for (double k : {0.1, 2.0, 1e4}) {
      CHECK(e_far_field(k * pw, link) == doctest::Approx(std::sqrt(k) * e_far_field(pw, link)).epsilon(1e-12));
    }
    CHECK(power_for_e_cell(e_cell(pw, link, cf), link, cf) == doctest::Approx(pw).epsilon(1e-12));
  }
}
