#include "spdcmap/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "spdcmap/errors.hpp"

namespace spdcmap {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double mean_of(std::span<const double> v) {
  // Neumaier summation keeps the floor independent of pixel count rounding.
  double sum = 0.0, comp = 0.0;
  for (double x : v) {
    const double t = sum + x;
    comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return v.empty() ? 0.0 : (sum + comp) / static_cast<double>(v.size());
}

void check_background(double rho) {
  if (!(rho >= 0.0 && rho < 1.0)) throw ValidationError("background_fraction must lie in [0, 1)");
}

} // namespace

void SourceConfig::validate() const {
  auto issues = model_issues(model_hv);
  if (!std::isfinite(delta)) issues.emplace_back("delta must be finite");
  if (!(background_fraction >= 0.0 && background_fraction < 1.0))
    issues.emplace_back("background_fraction must lie in [0, 1)");
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

double coincidence_rate(double g_hv, double g_vh, double delta, const AnalyzerSetting& setting) {
  const double t1 = setting.alpha1_deg * kDegree;
  const double t2 = setting.alpha2_deg * kDegree;
  const double hv = std::sqrt(g_hv) * std::cos(t1) * std::cos(t2);
  const double vh = std::sqrt(g_vh) * std::sin(t1) * std::sin(t2);
  return hv * hv + vh * vh + 2.0 * hv * vh * std::cos(delta);
}

SpectralMap rate_map(const SourceConfig& config, const AnalyzerSetting& setting, const WavelengthGrid& grid) {
  config.validate();
  grid.validate();
  const auto hv = config.model_hv;
  const auto vh = mirror_path(hv);
  SpectralMap out(grid, MapMetadata{MapKind::rate, setting, std::nullopt});
  for (std::size_t i = 0; i < grid.count1; ++i) {
    const double l1 = grid.lambda1(i);
    for (std::size_t j = 0; j < grid.count2; ++j) {
      const double l2 = grid.lambda2(j);
      // clamp the tiny negative values cos(delta) cross terms can round to
      out(i, j) = std::max(0.0, coincidence_rate(gaussian_eval(hv, l1, l2), gaussian_eval(vh, l1, l2),
                                                 config.delta, setting));
    }
  }
  return out;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) + 0x2545f4914f6cdd1dULL * (stream + 1));
}

double poisson_draw(double mean, std::uint64_t seed, std::uint64_t index) {
  if (!(mean > 0.0)) return 0.0;
  std::mt19937_64 engine(splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL)));
  std::poisson_distribution<long long> dist(mean);
  return static_cast<double>(dist(engine));
}

SpectralMap sample_counts(const SpectralMap& rates, double integration_s, double background_fraction,
                          std::uint64_t seed) {
  if (rates.kind() != MapKind::rate) throw ValidationError("sample_counts expects a rate map");
  if (!(integration_s > 0.0)) throw ValidationError("integration time must be positive");
  check_background(background_fraction);
  const double floor = background_fraction / (1.0 - background_fraction) * mean_of(rates.values());
  MapMetadata meta = rates.metadata();
  meta.kind = MapKind::counts;
  meta.integration_s = integration_s;
  std::vector<double> counts(rates.values().size());
  for (std::size_t p = 0; p < counts.size(); ++p)
    counts[p] = poisson_draw((rates.values()[p] + floor) * integration_s, seed, p);
  return SpectralMap(rates.grid(), meta, std::move(counts));
}

void ScanCube::validate() const {
  grid.validate();
  std::vector<std::string> issues;
  if (alpha2_deg.empty()) issues.emplace_back("scan cube needs at least one alpha2 angle");
  if (!(integration_s > 0.0)) issues.emplace_back("integration time must be positive");
  if (values.size() != grid.size() * alpha2_deg.size())
    issues.emplace_back("scan cube value count does not match grid x angles");
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

ScanCube expected_scan_cube(const SourceConfig& config, const WavelengthGrid& grid, double alpha1_deg,
                            std::span<const double> alpha2_deg, double integration_s) {
  config.validate();
  grid.validate();
  if (!(integration_s > 0.0)) throw ValidationError("integration time must be positive");
  ScanCube cube{grid, alpha1_deg, {alpha2_deg.begin(), alpha2_deg.end()}, integration_s, {}};
  cube.values.resize(grid.size() * alpha2_deg.size());
  const auto hv = config.model_hv;
  const auto vh = mirror_path(hv);
  for (std::size_t i = 0; i < grid.count1; ++i) {
    for (std::size_t j = 0; j < grid.count2; ++j) {
      const double g_hv = gaussian_eval(hv, grid.lambda1(i), grid.lambda2(j));
      const double g_vh = gaussian_eval(vh, grid.lambda1(i), grid.lambda2(j));
      for (std::size_t k = 0; k < alpha2_deg.size(); ++k)
        cube(i, j, k) = std::max(0.0, coincidence_rate(g_hv, g_vh, config.delta, {alpha1_deg, alpha2_deg[k]}));
    }
  }
  const double floor = config.background_fraction / (1.0 - config.background_fraction) * mean_of(cube.values);
  for (double& v : cube.values) v = (v + floor) * integration_s;
  cube.validate();
  return cube;
}

ScanCube sample_scan_cube(const SourceConfig& config, const WavelengthGrid& grid, double alpha1_deg,
                          std::span<const double> alpha2_deg, double integration_s) {
  auto cube = expected_scan_cube(config, grid, alpha1_deg, alpha2_deg, integration_s);
  for (std::size_t p = 0; p < cube.values.size(); ++p)
    cube.values[p] = poisson_draw(cube.values[p], config.rng_seed, p);
  return cube;
}

} // namespace spdcmap
