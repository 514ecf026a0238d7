#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "spdcmap/simulate.hpp"
#include "spdcmap/spectral_model.hpp"

namespace spdcmap {

struct ScanSample {
  double alpha2_deg = 0.0;
  double counts = 0.0; // non-negative; real-valued for virtually filtered scans
  double integration_s = 1.0;
};

/// Coincidences recorded while rotating the arm-2 analyzer at fixed arm-1 angle.
struct PolarizerScan {
  double alpha1_deg = 45.0;
  std::vector<ScanSample> samples;

  /// Requires non-negative counts, positive integration times and at least
  /// three distinct alpha2 angles modulo 180 degrees.
  void validate() const;
};

struct VisibilityFit {
  double offset = 0.0;     // p0, counts per second
  double visibility = 0.0; // sqrt(p1^2 + p2^2) / p0
  double gamma_deg = 0.0;  // arm-2 angle of maximum coincidences, (-90, 90]
  bool gamma_defined = true;
  double offset_sigma = 0.0;
  double visibility_sigma = 0.0;
  double gamma_sigma_deg = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;
};

/// Weighted linear least squares of counts/t = p0 + p1 cos 2a + p2 sin 2a
/// with Poisson weights t^2 / max(counts, 1). Throws FitError when p0 <= 0.
VisibilityFit fit_sinusoid(const PolarizerScan& scan);

struct ModelUncertainty {
  double lambda1_center = 0.0;
  double lambda2_center = 0.0;
  double sigma1 = 0.0;
  double sigma2 = 0.0;
  double sigma12 = 0.0;
  double amplitude = 0.0;
};

struct GaussianFitReport {
  GaussianJointModel model;      // amplitude in events/s
  ModelUncertainty uncertainty;  // 1 sigma
  int iterations = 0;
  double chi2 = 0.0;             // Poisson-weighted residual sum of squares
  std::size_t pixels_used = 0;
  std::size_t dof = 0;
};

struct GaussianFitOptions {
  double log_fit_min_counts = 5.0;
  double tolerance = 1e-8;
  int max_iterations = 200;
};

/// Two-stage 2D Gaussian fit of a counts or rate map: log-quadratic
/// regression for the starting point, then damped least squares on the
/// untransformed model. Throws FitError when the data do not constrain a
/// valid model (too few bright pixels, curvature of the wrong sign, a peak
/// outside the map, or no convergence).
GaussianFitReport fit_gaussian2d(const SpectralMap& map, const GaussianFitOptions& options = {});

/// Fits the pixel scan of a cube.
VisibilityFit fit_pixel(const ScanCube& cube, std::size_t i, std::size_t j);

struct VisibilityMaps {
  SpectralMap visibility;
  SpectralMap gamma;
};

/// Fits every pixel's polarizer scan of the cube. Pixels whose fit fails or
/// whose visibility uncertainty exceeds max_visibility_sigma are masked.
VisibilityMaps visibility_gamma_maps(const ScanCube& cube, double max_visibility_sigma = 0.11);

/// Simulates seeded per-pixel scans at alpha1 = 45 degrees and maps them.
VisibilityMaps visibility_gamma_maps(const SourceConfig& config, const WavelengthGrid& grid,
                                     std::span<const double> alpha2_deg, double integration_s,
                                     double max_visibility_sigma = 0.11);

/// Entanglement entropy from the two decay-path maps. Pixels whose combined
/// value is below mask_threshold (or where both vanish) are masked.
SpectralMap entropy_map(const SpectralMap& map_hv, const SpectralMap& map_vh, double mask_threshold);

} // namespace spdcmap
