#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "spdcmap/errors.hpp"
#include "spdcmap/polarization.hpp"

using namespace spdcmap;
constexpr double pi = std::numbers::pi;

TEST_CASE("coincidence_prob") {
  const TwoPathState singlet{std::sqrt(0.5), std::sqrt(0.5), pi};
  CHECK(coincidence_prob(singlet, {45.0, -45.0}) == doctest::Approx(0.5));
  CHECK(std::abs(coincidence_prob(singlet, {45.0, 45.0})) < 1e-15);
  CHECK(coincidence_prob({1.0, 0.0, 0.3}, {0.0, 0.0}) == doctest::Approx(1.0));

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0), ang(-180.0, 180.0);
  for (int k = 0; k < 500; ++k) {
    const auto s = TwoPathState::from_a(u(rng), 2.0 * pi * u(rng));
    const double t1 = ang(rng), t2 = ang(rng);
    CHECK(coincidence_prob(s, {t1, t2}) == doctest::Approx(oracle::projection(s.a, s.b, s.delta, t1, t2)).epsilon(1e-12));
    // path probabilities sum to one
    CHECK(coincidence_prob(s, {0.0, 0.0}) + coincidence_prob(s, {90.0, 90.0}) == doctest::Approx(1.0).epsilon(1e-12));
    // modulo-180 periodicity of linear analyzers
    CHECK(coincidence_prob(s, {t1 + 180.0, t2}) == doctest::Approx(coincidence_prob(s, {t1, t2})).epsilon(1e-12));
  }
}

TEST_CASE("C(alpha2) lies in the span of {1, cos 2a, sin 2a}") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const auto s = TwoPathState::from_a(u(rng), 2.0 * pi * u(rng));
    const double alpha1 = -90.0 + 180.0 * u(rng);
    // solve for the three coefficients from C at 0, 45 and 90 degrees
    const double c0 = coincidence_prob(s, {alpha1, 0.0});
    const double c45 = coincidence_prob(s, {alpha1, 45.0});
    const double c90 = coincidence_prob(s, {alpha1, 90.0});
    const double p0 = 0.5 * (c0 + c90), p1 = 0.5 * (c0 - c90), p2 = c45 - p0;
    const double probe = 360.0 * u(rng);
    const double predicted = p0 + p1 * std::cos(2.0 * probe * kDegree) + p2 * std::sin(2.0 * probe * kDegree);
    CHECK(std::abs(predicted - coincidence_prob(s, {alpha1, probe})) < 1e-12);

    const auto h = coincidence_harmonics(s, alpha1);
    CHECK(h.p0 == doctest::Approx(p0).epsilon(1e-12));
    CHECK(std::abs(h.p1 - p1) < 1e-12);
    CHECK(std::abs(h.p2 - p2) < 1e-12);
  }
}

TEST_CASE("gamma_max anchors") {
  CHECK(gamma_max({std::sqrt(0.5), std::sqrt(0.5), pi}) == doctest::Approx(-45.0).epsilon(1e-12));
  CHECK(gamma_max({1.0, 0.0, pi}) == 0.0);
  CHECK(gamma_max({0.0, 1.0, pi}) == 90.0);
  // delta = 0 mirrors the maximum to +arctan(b/a)
  CHECK(gamma_max({std::sqrt(0.5), std::sqrt(0.5), 0.0}) == doctest::Approx(45.0));
  CHECK_THROWS_AS(gamma_max({0.0, 0.0, pi}), std::domain_error);
  CHECK_THROWS_AS(gamma_max({std::sqrt(0.5), std::sqrt(0.5), pi / 2}), std::domain_error);
}

TEST_CASE("gamma_max is the numerical argmax") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const double delta = k % 3 == 0 ? 0.0 : (k % 3 == 1 ? pi : 2.0 * pi * u(rng));
    const auto s = TwoPathState::from_a(0.02 + 0.96 * u(rng), delta);
    if (visibility_45(s) < 0.05) continue; // argmax is ill-conditioned for flat scans
    const double g = gamma_max(s);
    CHECK(g > -90.0);
    CHECK(g <= 90.0);
    CHECK(oracle::half_turn_distance(g, oracle::argmax_alpha2(s.a, s.b, s.delta, 0.01)) <= 0.01);
  }
}

TEST_CASE("entanglement_entropy") {
  CHECK(entanglement_entropy({std::sqrt(0.5), std::sqrt(0.5), pi}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(entanglement_entropy({1.0, 0.0, pi}) == 0.0);
  CHECK(entanglement_entropy(TwoPathState::from_a(std::sqrt(0.8), pi)) == doctest::Approx(0.7219280948873623).epsilon(1e-12));

  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const double a = u(rng);
    const auto s = TwoPathState::from_a(a, pi);
    const TwoPathState swapped{s.b, s.a, pi};
    CHECK(entanglement_entropy(s) == doctest::Approx(entanglement_entropy(swapped)).epsilon(1e-12));
    CHECK(entanglement_entropy(s) == doctest::Approx(oracle::binary_entropy(a * a)).epsilon(1e-12));
    if (std::abs(a * a - 0.5) > 1e-6) CHECK(entanglement_entropy(s) < 1.0);
  }
}

TEST_CASE("visibility_45") {
  CHECK(visibility_45({std::sqrt(0.5), std::sqrt(0.5), pi}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(visibility_45({std::sqrt(0.5), std::sqrt(0.5), pi / 2}) < 1e-12);
  CHECK(oracle::scanned_contrast(std::sqrt(0.5), std::sqrt(0.5), pi / 2, 0.5) < 1e-12);
  CHECK(visibility_45({std::sqrt(0.9), std::sqrt(0.1), pi / 2}) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(oracle::scanned_contrast(std::sqrt(0.9), std::sqrt(0.1), pi / 2, 0.01) == doctest::Approx(0.8).epsilon(1e-6));

  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 300; ++k) {
    const auto s = TwoPathState::from_a(u(rng), 2.0 * pi * u(rng));
    CHECK(visibility_45(s) == doctest::Approx(oracle::scanned_contrast(s.a, s.b, s.delta, 0.01)).epsilon(1e-6));
  }
}

TEST_CASE("TwoPathState validation") {
  CHECK_NOTHROW(TwoPathState{}.validate());
  CHECK_THROWS_AS((TwoPathState{0.9, 0.9, 0.0}.validate()), ValidationError);
  CHECK_THROWS_AS((TwoPathState{-0.1, std::sqrt(0.99), 0.0}.validate()), ValidationError);
  CHECK(wrap_half_turn_deg(-90.0) == 90.0);
  CHECK(wrap_half_turn_deg(135.0) == -45.0);
  CHECK(wrap_half_turn_deg(-270.0) == 90.0);
}
