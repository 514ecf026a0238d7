#pragma once

#include <span>
#include <variant>
#include <vector>

#include "spdcmap/analysis.hpp"
#include "spdcmap/simulate.hpp"

namespace spdcmap {

/// Spectral intensity transmission of one arm.
///
/// Lorentzian: t(l) = 1 / (1 + (2 (l - center) / fwhm)^2).
/// Tabulated: linear interpolation between strictly increasing sample
/// wavelengths, zero outside the table.
class FilterProfile {
public:
  static FilterProfile lorentzian(double center_nm, double fwhm_nm);
  static FilterProfile tabulated(std::vector<double> wavelength_nm, std::vector<double> transmission);
  static FilterProfile all_pass();

  enum class Kind { lorentzian, tabulated, all_pass };
  Kind kind() const { return kind_; }
  double center() const { return center_; }
  double fwhm() const { return fwhm_; }
  const std::vector<double>& wavelengths() const { return wavelengths_; }
  const std::vector<double>& transmissions() const { return transmissions_; }

  double transmission(double lambda_nm) const;

  /// Returns a copy with every transmission multiplied by `factor`.
  /// Used for linearity checks; the result may exceed one.
  FilterProfile scaled(double factor) const;

private:
  Kind kind_ = Kind::all_pass;
  double center_ = 0.0;
  double fwhm_ = 0.0;
  double scale_ = 1.0;
  std::vector<double> wavelengths_;
  std::vector<double> transmissions_;
};

/// C(alpha2) = sum_{l1,l2} c(l1, l2, alpha2) f1(l1) f2(l2), summed in a fixed
/// order with compensated summation.
PolarizerScan filtered_scan(const ScanCube& cube, const FilterProfile& f1, const FilterProfile& f2);

struct TradeoffPoint {
  double fwhm_nm = 0.0;
  double visibility = 0.0;
  double gamma_deg = 0.0;
  double mean_rate = 0.0;       // mean of C(alpha2)/t over the scan
  double normalized_rate = 0.0; // mean_rate / mean_rate at the widest filter
};

using TradeoffCurve = std::vector<TradeoffPoint>;

/// Identical Lorentzian filters of each listed FWHM (strictly increasing) on
/// both arms, centered at center_nm.
TradeoffCurve tradeoff_curve(const ScanCube& cube, double center_nm, std::span<const double> fwhm_list);

/// Inverts a flat, polarization-independent background contributing a
/// fraction rho of the mean coincidence rate: V / (1 - rho). Throws
/// std::domain_error if the result exceeds one by more than `tolerance`.
double correct_fourphoton(double v_measured, double rho, double tolerance = 1e-9);

/// Forward model of the same background: V (1 - rho).
double mix_flat_background(double v_two_photon, double rho);

/// Maximize normalized rate subject to V >= v_min.
struct MinVisibility {
  double v_min = 0.0;
};
/// Maximize normalized_rate * V^exponent.
struct RateTimesVisibilityPower {
  double exponent = 1.0;
};
using FigureOfMerit = std::variant<MinVisibility, RateTimesVisibilityPower>;

/// Index of the best point of the curve; ties go to the larger bandwidth.
/// Throws std::domain_error when no point satisfies a MinVisibility constraint.
std::size_t optimize_filter_index(const TradeoffCurve& curve, const FigureOfMerit& merit);
double optimize_filter(const TradeoffCurve& curve, const FigureOfMerit& merit);

} // namespace spdcmap
