#include <doctest.h>

#include <random>

#include "rydmix/atoms.hpp"

using namespace rydmix;

namespace {
const auto kCs = RydbergTransition<double>::cesium_34d_35p();

// Independent evaluation with the constants typed out.
double hand_splitting(double e) {
  const double dipole = 1476.6048 * 0.48989 * 1.602176634e-19 * 0.529177e-10;
  return (511.148e-9 / 852e-9) * e * dipole / (2.0 * 3.14159265358979 * 1.054571817e-34);
}
}  // namespace

TEST_CASE("dipole moment of the default transition") {
  CHECK(kCs.dipole_atomic_units() == doctest::Approx(723.3739).epsilon(1e-6));
  CHECK(dipole_moment_si(kCs) == doctest::Approx(723.3739 * 1.602176634e-19 * 0.529177e-10).epsilon(1e-6));
  CHECK(dipole_moment_si(kCs) == doctest::Approx(6.133e-27).epsilon(1e-3));

  const RydbergTransition<double> unit(852e-9, 511.148e-9, 1.0, 1.0, 19.626e9, 4e6);
  CHECK(dipole_moment_si(unit) == doctest::Approx(8.4784e-30).epsilon(1e-4));
}

TEST_CASE("AT splitting") {
  CHECK(at_splitting(0.0, kCs) == 0.0);
  CHECK(at_splitting(0.72, kCs) == doctest::Approx(4e6).epsilon(0.01));
  CHECK(at_splitting(1.0, kCs) == doctest::Approx(5.55e6).epsilon(0.005));
  CHECK(at_splitting(0.31, kCs) == doctest::Approx(hand_splitting(0.31)).epsilon(1e-9));
  CHECK_THROWS_AS(at_splitting(-1e-3, kCs), DomainError);

  const Eigen::ArrayXd grid = Eigen::ArrayXd::LinSpaced(5, 0.0, 2.0);
  const Eigen::ArrayXd split = at_splitting(grid, kCs);
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    CHECK(split[i] == doctest::Approx(at_splitting(grid[i], kCs)).epsilon(1e-15));
  }
  CHECK_THROWS_AS(at_splitting(Eigen::ArrayXd::Constant(3, -1.0), kCs), DomainError);
}

TEST_CASE("AT splitting is linear in the field") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int i = 0; i < 100; ++i) {
    const double e = u(rng), k = u(rng);
    CHECK(at_splitting(k * e, kCs) == doctest::Approx(k * at_splitting(e, kCs)).epsilon(1e-12));
  }
}

TEST_CASE("minimum AT-detectable field") {
  const double e_at = min_detectable_at_field(kCs);
  CHECK(e_at == doctest::Approx(0.72).epsilon(0.01));
  CHECK(at_splitting(e_at, kCs) == doctest::Approx(kCs.eit_linewidth()).epsilon(1e-12));

  const RydbergTransition<double> wide(852e-9, 511.148e-9, 1476.6048, 0.48989, 19.626e9, 8e6);
  CHECK(min_detectable_at_field(wide) == doctest::Approx(2.0 * e_at).epsilon(1e-12));
}

TEST_CASE("Rabi frequencies") {
  CHECK(rabi_frequency(0.0, kCs) == 0.0);
  const double omega = rabi_frequency(0.72, kCs);
  CHECK(omega / (2.0 * kPi<double>) == doctest::Approx(6.67e6).epsilon(0.005));
  // Rabi/2pi equals the splitting scaled by the wavelength ratio.
  CHECK(omega / (2.0 * kPi<double>) ==
        doctest::Approx(at_splitting(0.72, kCs) * 852e-9 / 511.148e-9).epsilon(1e-12));

  CHECK(generalized_rabi(2.0, 0.0) == 2.0);
  CHECK(generalized_rabi(0.0, -3.0) == 3.0);
  CHECK(generalized_rabi(3.0, 4.0) == doctest::Approx(5.0));
  CHECK_THROWS_AS(generalized_rabi(-1.0, 0.0), DomainError);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.01, 5.0);
  for (int i = 0; i < 100; ++i) {
    const double w = u(rng), d = u(rng) * (i % 2 ? 1 : -1);
    const double g = generalized_rabi(w, d);
    CHECK(g > w);
    CHECK(g > std::abs(d));
  }
}

TEST_CASE("transition validation") {
  CHECK_THROWS_AS(RydbergTransition<double>(0.0, 511e-9, 1, 1, 1e9, 1e6), DomainError);
  CHECK_THROWS_AS(RydbergTransition<double>(852e-9, 511e-9, 1, 1, 1e9, 0.0), DomainError);
  CHECK_THROWS_AS(RydbergTransition<double>(852e-9, 511e-9, 0, 1, 1e9, 1e6), DomainError);
}

TEST_CASE("float instantiation") {
  const auto t = RydbergTransition<float>::cesium_34d_35p();
  CHECK(min_detectable_at_field(t) == doctest::Approx(0.72f).epsilon(0.01));
}
