#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spdcmap/polarization.hpp"

namespace spdcmap {

/// Two-dimensional Gaussian model of one decay path's joint spectrum:
///
///   g(l1, l2) = A exp(-1/2 [ (l1-c1)^2/s1^2 + (l2-c2)^2/s2^2
///                            + (l1-c1)(l2-c2)/s12 ])
///
/// Wavelengths in nm, s12 in nm^2. A positive s12 anti-correlates the two
/// wavelengths. s12 may be +/-infinity to switch the cross term off.
struct GaussianJointModel {
  double lambda1_center = 0.0; // nm
  double lambda2_center = 0.0; // nm
  double sigma1 = 1.0;         // nm
  double sigma2 = 1.0;         // nm
  double sigma12 = 1.0;        // nm^2
  double amplitude = 1.0;      // events/s at the peak

  bool operator==(const GaussianJointModel&) const = default;
};

/// H1V2 fit parameters reported for the femtosecond-pumped BBO source
/// (amplitude normalized to one).
GaussianJointModel reference_hv_model();

/// Collects every violated invariant; empty when the model is usable.
std::vector<std::string> model_issues(const GaussianJointModel& model);

/// Throws ValidationError listing all violated invariants.
void validate(const GaussianJointModel& model);

double gaussian_eval(const GaussianJointModel& model, double lambda1, double lambda2);

/// V1H2 model from the H1V2 model: centers and widths exchanged between arms,
/// s12 and amplitude kept. Involution.
GaussianJointModel mirror_path(const GaussianJointModel& model);

/// FWHM (nm) of the marginal distribution of arm 1 or arm 2. Throws
/// std::domain_error when 1/s_arm^2 - s_other^2/(4 s12^2) <= 0.
double marginal_fwhm(const GaussianJointModel& model, int arm);

/// Wavelength pair at which the model and its mirror image have equal rate
/// on both balanced loci (l1 = l2 and the second, anti-diagonal line).
/// Falls back to the midpoint of the centers when the loci are parallel.
double degeneracy_wavelength(const GaussianJointModel& model);

/// Normalized path amplitudes a = sqrt(g_hv / (g_hv + g_vh)), b = sqrt(1 - a^2).
/// Throws std::domain_error for negative input or g_hv = g_vh = 0.
std::pair<double, double> path_amplitudes(double g_hv, double g_vh);

/// Rectangular sampling of the (lambda1, lambda2) plane.
struct WavelengthGrid {
  double start1 = 0.0;
  double start2 = 0.0;
  double step1 = 1.0;
  double step2 = 1.0;
  std::size_t count1 = 1;
  std::size_t count2 = 1;

  void validate() const;
  double lambda1(std::size_t i) const { return start1 + static_cast<double>(i) * step1; }
  double lambda2(std::size_t j) const { return start2 + static_cast<double>(j) * step2; }
  std::size_t size() const { return count1 * count2; }

  /// Square grid centered on (center, center).
  static WavelengthGrid centered(double center, double step, std::size_t count);

  bool operator==(const WavelengthGrid&) const = default;
};

enum class MapKind { rate, counts, visibility, gamma_deg, entropy_bits };

std::string_view to_string(MapKind kind);
MapKind map_kind_from_string(std::string_view name);
std::string_view units_of(MapKind kind);

struct MapMetadata {
  MapKind kind = MapKind::rate;
  std::optional<AnalyzerSetting> analyzer;
  std::optional<double> integration_s;
  // Polarizer-scan maps (visibility, gamma): fixed arm-1 angle and the
  // arm-2 angles each pixel was scanned over.
  std::optional<double> scan_alpha1_deg;
  std::vector<double> scan_alpha2_deg;
};

/// A scalar field on a wavelength grid, stored row-major in lambda1.
/// Masked pixels hold NaN.
class SpectralMap {
public:
  SpectralMap() = default;
  SpectralMap(WavelengthGrid grid, MapMetadata metadata);
  SpectralMap(WavelengthGrid grid, MapMetadata metadata, std::vector<double> values);

  const WavelengthGrid& grid() const { return grid_; }
  const MapMetadata& metadata() const { return metadata_; }
  MapMetadata& metadata() { return metadata_; }
  MapKind kind() const { return metadata_.kind; }

  double operator()(std::size_t i, std::size_t j) const { return values_[i * grid_.count2 + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values_[i * grid_.count2 + j]; }
  const std::vector<double>& values() const { return values_; }

  static bool is_masked(double v);
  std::size_t masked_count() const;

  /// Kind-specific value checks: counts are non-negative integers, entropy
  /// lies in [0, 1], gamma in (-90, 90], visibility non-negative.
  void validate() const;

  /// Map with the lambda1 and lambda2 axes exchanged.
  SpectralMap transposed() const;

private:
  WavelengthGrid grid_;
  MapMetadata metadata_;
  std::vector<double> values_;
};

} // namespace spdcmap
