#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "spdcmap/analysis.hpp"
#include "spdcmap/errors.hpp"
#include "spdcmap/vfilter.hpp"

using namespace spdcmap;

namespace {

SourceConfig reference_source() {
  SourceConfig cfg;
  cfg.model_hv = reference_hv_model();
  cfg.delta = std::numbers::pi;
  return cfg;
}

std::vector<double> scan_angles() {
  std::vector<double> out;
  for (int k = -9; k < 9; ++k) out.push_back(10.0 * k);
  return out;
}

ScanCube small_cube() {
  const auto grid = WavelengthGrid::centered(779.69, 0.5, 24);
  return expected_scan_cube(reference_source(), grid, 45.0, scan_angles(), 10.0);
}

} // namespace

TEST_CASE("filter profiles") {
  const auto l = FilterProfile::lorentzian(780.0, 2.0);
  CHECK(l.transmission(780.0) == 1.0);
  CHECK(l.transmission(781.0) == doctest::Approx(0.5));
  CHECK(l.transmission(779.0) == doctest::Approx(0.5));
  CHECK(FilterProfile::all_pass().transmission(123.0) == 1.0);
  const auto t = FilterProfile::tabulated({779.0, 780.0, 781.0}, {0.0, 1.0, 0.5});
  CHECK(t.transmission(779.5) == doctest::Approx(0.5));
  CHECK(t.transmission(780.5) == doctest::Approx(0.75));
  CHECK(t.transmission(778.0) == 0.0);
  CHECK(t.transmission(782.0) == 0.0);
  CHECK(l.scaled(0.25).transmission(781.0) == doctest::Approx(0.125));
  CHECK_THROWS_AS(FilterProfile::lorentzian(780.0, 0.0), ValidationError);
  CHECK_THROWS_AS(FilterProfile::tabulated({780.0, 779.0}, {1.0, 1.0}), ValidationError);
  CHECK_THROWS_AS(FilterProfile::tabulated({779.0, 780.0}, {1.0, 1.5}), ValidationError);
}

TEST_CASE("filtered_scan identities") {
  const auto cube = small_cube();
  const auto all = filtered_scan(cube, FilterProfile::all_pass(), FilterProfile::all_pass());
  REQUIRE(all.samples.size() == cube.angle_count());
  for (std::size_t k = 0; k < cube.angle_count(); ++k) {
    double direct = 0.0;
    for (std::size_t i = 0; i < cube.grid.count1; ++i)
      for (std::size_t j = 0; j < cube.grid.count2; ++j) direct += cube(i, j, k);
    CHECK(all.samples[k].counts == doctest::Approx(direct).epsilon(1e-12));
    CHECK(all.samples[k].alpha2_deg == cube.alpha2_deg[k]);
  }

  // a filter pair passing only one pixel reproduces that pixel's scan
  const double l1 = cube.grid.lambda1(7), l2 = cube.grid.lambda2(15);
  const auto d1 = FilterProfile::tabulated({l1 - 0.5, l1, l1 + 0.5}, {0.0, 1.0, 0.0});
  const auto d2 = FilterProfile::tabulated({l2 - 0.5, l2, l2 + 0.5}, {0.0, 1.0, 0.0});
  const auto one = filtered_scan(cube, d1, d2);
  for (std::size_t k = 0; k < cube.angle_count(); ++k) CHECK(one.samples[k].counts == doctest::Approx(cube(7, 15, k)));

  // linear in the cube and in each filter's scale
  const auto f = FilterProfile::lorentzian(779.7, 3.0);
  auto doubled = cube;
  for (auto& v : doubled.values) v *= 2.0;
  const auto base = filtered_scan(cube, f, f);
  const auto twice = filtered_scan(doubled, f, f);
  const auto scaled = filtered_scan(cube, f.scaled(0.5), f.scaled(3.0));
  for (std::size_t k = 0; k < cube.angle_count(); ++k) {
    CHECK(twice.samples[k].counts == doctest::Approx(2.0 * base.samples[k].counts).epsilon(1e-12));
    CHECK(scaled.samples[k].counts == doctest::Approx(1.5 * base.samples[k].counts).epsilon(1e-12));
  }
}

TEST_CASE("filtered visibility is the weighted phasor average") {
  // Each pixel's scan is p0 (1 + V cos 2(alpha - gamma)); the filtered sum has the
  // contrast |sum w p0 V e^{2i gamma}| / sum w p0.
  const auto cube = small_cube();
  const auto f = FilterProfile::lorentzian(779.69, 2.0);
  const auto fit = fit_sinusoid(filtered_scan(cube, f, f));
  std::complex<double> phasor = 0.0;
  double norm = 0.0;
  for (std::size_t i = 0; i < cube.grid.count1; ++i) {
    for (std::size_t j = 0; j < cube.grid.count2; ++j) {
      const double w = f.transmission(cube.grid.lambda1(i)) * f.transmission(cube.grid.lambda2(j));
      const auto p = fit_pixel(cube, i, j);
      phasor += w * std::complex<double>(p.p1, p.p2);
      norm += w * p.offset;
    }
  }
  CHECK(fit.visibility == doctest::Approx(std::abs(phasor) / norm).epsilon(1e-9));
  CHECK(fit.gamma_deg == doctest::Approx(0.5 * std::arg(phasor) / kDegree).epsilon(1e-9));
}

TEST_CASE("tradeoff_curve") {
  const auto cube = small_cube();
  const std::vector<double> fwhm{0.5, 1.0, 2.0, 5.0, 10.0, 40.0};
  const auto curve = tradeoff_curve(cube, 779.69, fwhm);
  REQUIRE(curve.size() == fwhm.size());
  CHECK(curve.back().normalized_rate == 1.0);
  for (std::size_t k = 1; k < curve.size(); ++k) {
    CHECK(curve[k].normalized_rate > curve[k - 1].normalized_rate);
    CHECK(curve[k].visibility <= curve[k - 1].visibility + 1e-12);
  }
  CHECK(curve.front().visibility > 0.98);
  const std::vector<double> unsorted{1.0, 1.0};
  CHECK_THROWS_AS(tradeoff_curve(cube, 779.69, unsorted), ValidationError);
}

TEST_CASE("four-photon correction") {
  CHECK(correct_fourphoton(0.5, 0.5) == doctest::Approx(1.0));
  CHECK(correct_fourphoton(0.8, 0.0) == 0.8);
  CHECK(correct_fourphoton(0.45, 0.1) == doctest::Approx(0.5));
  CHECK_THROWS_AS(correct_fourphoton(0.9, 0.5), std::domain_error);
  CHECK_THROWS_AS(correct_fourphoton(0.5, 1.0), std::domain_error);
  CHECK_THROWS_AS(correct_fourphoton(-0.1, 0.1), std::domain_error);
  CHECK(mix_flat_background(1.0, 0.5) == doctest::Approx(0.5));

  // forward oracle: a perfectly anticorrelated scan diluted by a flat floor
  const double rho = 0.5;
  PolarizerScan scan;
  for (double a : scan_angles()) {
    const double signal = 100.0 * oracle::projection(std::sqrt(0.5), std::sqrt(0.5), std::numbers::pi, 45.0, a);
    scan.samples.push_back({a, signal + 25.0 * rho / (1.0 - rho), 1.0});
  }
  const double v = fit_sinusoid(scan).visibility;
  CHECK(v == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(correct_fourphoton(v, rho) == doctest::Approx(1.0).epsilon(1e-9));

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const double v2 = u(rng), r = 0.95 * u(rng);
    CHECK(correct_fourphoton(mix_flat_background(v2, r), r) == doctest::Approx(v2).epsilon(1e-12));
  }
}

TEST_CASE("optimize_filter") {
  const TradeoffCurve curve{{1.0, 0.99, 0, 0, 0.1}, {2.0, 0.97, 0, 0, 0.3}, {5.0, 0.92, 0, 0, 0.6},
                            {10.0, 0.85, 0, 0, 0.85}, {40.0, 0.80, 0, 0, 1.0}};
  CHECK(optimize_filter(curve, MinVisibility{0.95}) == 2.0);
  CHECK(optimize_filter(curve, MinVisibility{0.0}) == 40.0);
  CHECK(optimize_filter(curve, MinVisibility{0.99}) == 1.0);
  CHECK_THROWS_AS(optimize_filter(curve, MinVisibility{0.995}), std::domain_error);
  CHECK_THROWS_AS(optimize_filter({}, MinVisibility{0.5}), std::domain_error);
  CHECK(optimize_filter(curve, RateTimesVisibilityPower{1.0}) == 40.0);

  // interior optimum of rate * V^4, checked against exhaustive evaluation
  std::size_t best = 0;
  for (std::size_t k = 0; k < curve.size(); ++k)
    if (curve[k].normalized_rate * std::pow(curve[k].visibility, 4.0) >
        curve[best].normalized_rate * std::pow(curve[best].visibility, 4.0))
      best = k;
  CHECK(optimize_filter(curve, RateTimesVisibilityPower{4.0}) == curve[best].fwhm_nm);
  CHECK(curve[best].fwhm_nm == 10.0);
  CHECK(optimize_filter(curve, RateTimesVisibilityPower{30.0}) < 10.0);

  // equal scores resolve to the wider filter
  const TradeoffCurve tie{{1.0, 1.0, 0, 0, 0.5}, {2.0, 0.5, 0, 0, 1.0}};
  CHECK(optimize_filter(tie, RateTimesVisibilityPower{1.0}) == 2.0);
}
