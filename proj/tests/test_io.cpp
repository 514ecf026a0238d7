#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include "spdcmap/errors.hpp"
#include "spdcmap/io.hpp"
#include "spdcmap/simulate.hpp"

using namespace spdcmap;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("spdcmap_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

} // namespace

TEST_CASE("number formatting") {
  CHECK(io::format_number(0.5) == "0.5");
  CHECK(io::format_number(779.77) == "779.77");
  CHECK(io::format_number(std::nan("")) == "nan");
  CHECK(std::isnan(io::parse_number("nan")));
  CHECK(io::parse_number(" 1.5e3 ") == 1500.0);
  CHECK_THROWS_AS(io::parse_number("1.5x"), ValidationError);
  CHECK_THROWS_AS(io::parse_number(""), ValidationError);

  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int k = 0; k < 2000; ++k) {
    const double x = std::pow(10.0, u(rng)) * (k % 2 ? -1.0 : 1.0);
    const double back = io::parse_number(io::format_number(x));
    CHECK(std::abs(back / x - 1.0) <= 5e-9);
  }
}

TEST_CASE("model and grid JSON round trip") {
  const auto m = reference_hv_model();
  CHECK(io::model_from_json(io::to_json(m)) == m);
  const auto g = WavelengthGrid::centered(779.5, 0.25, 11);
  CHECK(io::grid_from_json(io::to_json(g)) == g);

  auto j = io::to_json(m);
  j["sigma1_nm"] = -1.0;
  j.erase("amplitude");
  try {
    io::model_from_json(j);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.issues().size() >= 2);
  }
}

TEST_CASE("map CSV round trip") {
  const auto dir = fresh_dir("maps");
  SourceConfig cfg;
  const auto grid = WavelengthGrid::centered(779.5, 0.5, 12);
  const auto rates = rate_map(cfg, {45.0, -45.0}, grid);
  const auto counts = sample_counts(rates, 22.5, 0.0, 3);
  io::write_map(counts, dir / "counts.csv");
  CHECK(fs::exists(dir / "counts.json"));
  const auto back = io::read_map(dir / "counts.csv");
  CHECK(back.values() == counts.values());
  CHECK(back.grid() == counts.grid());
  CHECK(back.kind() == MapKind::counts);
  CHECK(*back.metadata().integration_s == 22.5);
  CHECK(back.metadata().analyzer->alpha2_deg == -45.0);

  io::write_map(rates, dir / "rates.csv");
  const auto r = io::read_map(dir / "rates.csv");
  for (std::size_t p = 0; p < rates.values().size(); ++p)
    CHECK(r.values()[p] == doctest::Approx(rates.values()[p]).epsilon(1e-8));

  SpectralMap masked(grid, {MapKind::entropy_bits});
  masked(0, 0) = std::nan("");
  masked(3, 4) = 0.25;
  io::write_map(masked, dir / "entropy.csv");
  const auto mb = io::read_map(dir / "entropy.csv");
  CHECK(mb.masked_count() == 1);
  CHECK(mb(3, 4) == 0.25);
  CHECK(io::read_json(dir / "entropy.json").at("masked_pixels") == 1);

  auto text = io::map_csv(rates);
  CHECK(text.rfind("lambda1_nm,lambda2_nm,value\n", 0) == 0);
  CHECK_THROWS_AS(io::map_from_text("lambda1_nm,lambda2_nm,value\n1,2,3\n", io::map_metadata_json(rates)),
                  ValidationError);
}

TEST_CASE("cube and tradeoff round trips") {
  SourceConfig cfg;
  const auto grid = WavelengthGrid::centered(779.5, 0.5, 4);
  const auto cube = sample_scan_cube(cfg, grid, 45.0, std::vector<double>{0.0, 45.0, 90.0, 135.0}, 5.0);
  const auto back = io::cube_from_text(io::cube_csv(cube), io::cube_metadata_json(cube));
  CHECK(back.values == cube.values);
  CHECK(back.alpha2_deg == cube.alpha2_deg);
  CHECK(back.integration_s == 5.0);

  const TradeoffCurve curve{{1.0, 0.99, 0.0, 3.0, 0.25}, {2.0, 0.9, 0.0, 12.0, 1.0}};
  const auto parsed = io::tradeoff_from_csv(io::tradeoff_csv(curve));
  REQUIRE(parsed.size() == 2);
  CHECK(parsed[1].fwhm_nm == 2.0);
  CHECK(parsed[0].visibility == 0.99);
  CHECK(parsed[0].normalized_rate == 0.25);

  const auto f = io::filter_from_csv("wavelength_nm,transmission\n779,0\n780,1\n781,0\n");
  CHECK(f.transmission(779.5) == doctest::Approx(0.5));
  CHECK(io::filter_from_json(io::to_json(FilterProfile::lorentzian(780.0, 3.0))).fwhm() == 3.0);
  CHECK_THROWS_AS(io::filter_from_json({{"kind", "boxcar"}}), ValidationError);
}

TEST_CASE("OutputBatch writes everything or nothing") {
  const auto dir = fresh_dir("batch");
  io::OutputBatch ok;
  ok.add(dir / "a.txt", "alpha");
  ok.add_json(dir / "b.json", {{"x", 1}});
  ok.commit();
  CHECK(io::read_text(dir / "a.txt") == "alpha");
  CHECK(io::read_json(dir / "b.json").at("x") == 1);

  io::OutputBatch bad;
  bad.add(dir / "c.txt", "gamma");
  bad.add(dir / "a.txt" / "d.txt", "delta"); // parent is a regular file
  CHECK_THROWS(bad.commit());
  CHECK_FALSE(fs::exists(dir / "c.txt"));
  for (const auto& e : fs::directory_iterator(dir))
    CHECK(e.path().filename().string().find(".tmp.") == std::string::npos);

  CHECK_THROWS_AS(io::read_json(dir / "a.txt"), ValidationError);
}
