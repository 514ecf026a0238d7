#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "spdcmap/polarization.hpp"
#include "spdcmap/spectral_model.hpp"

namespace spdcmap {

struct SourceConfig {
  GaussianJointModel model_hv = reference_hv_model();
  double delta = std::numbers::pi;   // relative phase of the V1H2 path, radians
  double background_fraction = 0.0;  // flat accidental floor, fraction of total mean rate
  std::uint64_t rng_seed = 0;

  void validate() const;
};

/// Coherent two-path coincidence rate |sqrt(g_hv) c1 c2 + sqrt(g_vh) e^{i delta} s1 s2|^2
/// at one wavelength pair.
double coincidence_rate(double g_hv, double g_vh, double delta, const AnalyzerSetting& setting);

/// Noise-free coincidence-rate map (kind rate) for an analyzer setting.
SpectralMap rate_map(const SourceConfig& config, const AnalyzerSetting& setting, const WavelengthGrid& grid);

/// Per-pixel Poisson sampling with mean (rate + rho mean_rate / (1 - rho)) t.
/// Each pixel draws from its own substream keyed on (seed, pixel index).
SpectralMap sample_counts(const SpectralMap& rates, double integration_s, double background_fraction,
                          std::uint64_t seed);

/// Independent seed for a named sub-stream of a run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Mean of a Poisson draw is `mean`; the stream is keyed on (seed, index).
double poisson_draw(double mean, std::uint64_t seed, std::uint64_t index);

/// Per-pixel polarizer scans c(l1, l2, alpha2) at fixed arm-1 angle. Values
/// are counts (or expected counts) per sample, sample k taken at
/// alpha2_deg[k] for integration_s seconds.
struct ScanCube {
  WavelengthGrid grid;
  double alpha1_deg = 45.0;
  std::vector<double> alpha2_deg;
  double integration_s = 1.0;
  std::vector<double> values; // [(i * count2 + j) * n_angles + k]

  std::size_t angle_count() const { return alpha2_deg.size(); }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return values[(i * grid.count2 + j) * alpha2_deg.size() + k];
  }
  double& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return values[(i * grid.count2 + j) * alpha2_deg.size() + k];
  }
  std::span<const double> pixel(std::size_t i, std::size_t j) const {
    return {values.data() + (i * grid.count2 + j) * alpha2_deg.size(), alpha2_deg.size()};
  }

  void validate() const;
};

/// Expected counts of every pixel's scan, including the flat background floor.
ScanCube expected_scan_cube(const SourceConfig& config, const WavelengthGrid& grid, double alpha1_deg,
                            std::span<const double> alpha2_deg, double integration_s);

/// Poisson-sampled counterpart of expected_scan_cube, seeded by config.rng_seed.
ScanCube sample_scan_cube(const SourceConfig& config, const WavelengthGrid& grid, double alpha1_deg,
                          std::span<const double> alpha2_deg, double integration_s);

} // namespace spdcmap
