#include "spdcmap/vfilter.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "spdcmap/errors.hpp"

namespace spdcmap {
namespace {

struct NeumaierSum {
  double sum = 0.0;
  double comp = 0.0;
  void add(double x) {
    const double t = sum + x;
    comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

} // namespace

FilterProfile FilterProfile::lorentzian(double center_nm, double fwhm_nm) {
  std::vector<std::string> issues;
  if (!std::isfinite(center_nm)) issues.emplace_back("filter center must be finite");
  if (!(std::isfinite(fwhm_nm) && fwhm_nm > 0.0)) issues.emplace_back("filter FWHM must be positive");
  if (!issues.empty()) throw ValidationError(std::move(issues));
  FilterProfile f;
  f.kind_ = Kind::lorentzian;
  f.center_ = center_nm;
  f.fwhm_ = fwhm_nm;
  return f;
}

FilterProfile FilterProfile::tabulated(std::vector<double> wavelength_nm, std::vector<double> transmission) {
  std::vector<std::string> issues;
  if (wavelength_nm.size() != transmission.size())
    issues.emplace_back("tabulated filter needs as many transmissions as wavelengths");
  if (wavelength_nm.empty()) issues.emplace_back("tabulated filter is empty");
  for (std::size_t k = 1; k < wavelength_nm.size(); ++k) {
    if (!(wavelength_nm[k] > wavelength_nm[k - 1])) {
      issues.emplace_back("tabulated wavelengths must be strictly increasing");
      break;
    }
  }
  for (double t : transmission) {
    if (!(t >= 0.0 && t <= 1.0)) {
      issues.emplace_back("tabulated transmissions must lie in [0, 1]");
      break;
    }
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
  FilterProfile f;
  f.kind_ = Kind::tabulated;
  f.wavelengths_ = std::move(wavelength_nm);
  f.transmissions_ = std::move(transmission);
  return f;
}

FilterProfile FilterProfile::all_pass() { return FilterProfile{}; }

double FilterProfile::transmission(double lambda) const {
  switch (kind_) {
  case Kind::all_pass:
    return scale_;
  case Kind::lorentzian: {
    const double x = 2.0 * (lambda - center_) / fwhm_;
    return scale_ / (1.0 + x * x);
  }
  case Kind::tabulated: {
    if (lambda < wavelengths_.front() || lambda > wavelengths_.back()) return 0.0;
    const auto it = std::upper_bound(wavelengths_.begin(), wavelengths_.end(), lambda);
    if (it == wavelengths_.end()) return scale_ * transmissions_.back();
    const auto k = static_cast<std::size_t>(it - wavelengths_.begin());
    if (k == 0) return scale_ * transmissions_.front();
    const double u = (lambda - wavelengths_[k - 1]) / (wavelengths_[k] - wavelengths_[k - 1]);
    return scale_ * ((1.0 - u) * transmissions_[k - 1] + u * transmissions_[k]);
  }
  }
  return 0.0;
}

FilterProfile FilterProfile::scaled(double factor) const {
  FilterProfile f = *this;
  f.scale_ *= factor;
  return f;
}

PolarizerScan filtered_scan(const ScanCube& cube, const FilterProfile& f1, const FilterProfile& f2) {
  cube.validate();
  const auto& grid = cube.grid;
  std::vector<double> w1(grid.count1), w2(grid.count2);
  for (std::size_t i = 0; i < grid.count1; ++i) w1[i] = f1.transmission(grid.lambda1(i));
  for (std::size_t j = 0; j < grid.count2; ++j) w2[j] = f2.transmission(grid.lambda2(j));

  std::vector<NeumaierSum> sums(cube.angle_count());
  for (std::size_t i = 0; i < grid.count1; ++i) {
    for (std::size_t j = 0; j < grid.count2; ++j) {
      const double w = w1[i] * w2[j];
      if (w == 0.0) continue;
      const auto px = cube.pixel(i, j);
      for (std::size_t k = 0; k < px.size(); ++k) sums[k].add(px[k] * w);
    }
  }
  PolarizerScan scan{cube.alpha1_deg, {}};
  for (std::size_t k = 0; k < sums.size(); ++k)
    scan.samples.push_back({cube.alpha2_deg[k], sums[k].value(), cube.integration_s});
  return scan;
}

TradeoffCurve tradeoff_curve(const ScanCube& cube, double center_nm, std::span<const double> fwhm_list) {
  if (fwhm_list.empty()) throw ValidationError("tradeoff curve needs at least one bandwidth");
  for (std::size_t k = 1; k < fwhm_list.size(); ++k)
    if (!(fwhm_list[k] > fwhm_list[k - 1])) throw ValidationError("filter bandwidths must be strictly increasing");

  TradeoffCurve curve;
  curve.reserve(fwhm_list.size());
  for (double fwhm : fwhm_list) {
    const auto filter = FilterProfile::lorentzian(center_nm, fwhm);
    const auto scan = filtered_scan(cube, filter, filter);
    const auto fit = fit_sinusoid(scan);
    NeumaierSum rate;
    for (const auto& s : scan.samples) rate.add(s.counts / s.integration_s);
    curve.push_back({fwhm, fit.visibility, fit.gamma_deg, rate.value() / static_cast<double>(scan.samples.size()), 0.0});
  }
  const double reference = curve.back().mean_rate;
  if (!(reference > 0.0)) throw FitError("no coincidences pass the widest filter");
  for (auto& p : curve) p.normalized_rate = p.mean_rate / reference;
  return curve;
}

double correct_fourphoton(double v_measured, double rho, double tolerance) {
  if (!(v_measured >= 0.0 && v_measured <= 1.0)) throw std::domain_error("measured visibility must lie in [0, 1]");
  if (!(rho >= 0.0 && rho < 1.0)) throw std::domain_error("background fraction must lie in [0, 1)");
  const double corrected = v_measured / (1.0 - rho);
  if (corrected > 1.0 + tolerance)
    throw std::domain_error("inconsistent inputs: corrected visibility " + std::to_string(corrected) + " exceeds 1");
  return corrected;
}

double mix_flat_background(double v_two_photon, double rho) {
  if (!(rho >= 0.0 && rho < 1.0)) throw std::domain_error("background fraction must lie in [0, 1)");
  return v_two_photon * (1.0 - rho);
}

std::size_t optimize_filter_index(const TradeoffCurve& curve, const FigureOfMerit& merit) {
  if (curve.empty()) throw std::domain_error("empty tradeoff curve");
  std::optional<std::size_t> best;
  double best_score = 0.0;
  for (std::size_t k = 0; k < curve.size(); ++k) {
    const auto& p = curve[k];
    double score = 0.0;
    if (const auto* c = std::get_if<MinVisibility>(&merit)) {
      if (!(p.visibility >= c->v_min)) continue;
      score = p.normalized_rate;
    } else {
      const auto& m = std::get<RateTimesVisibilityPower>(merit);
      if (!(m.exponent > 0.0)) throw std::domain_error("figure-of-merit exponent must be positive");
      score = p.normalized_rate * std::pow(std::max(p.visibility, 0.0), m.exponent);
    }
    if (!best || score > best_score || (score == best_score && p.fwhm_nm > curve[*best].fwhm_nm)) {
      best = k;
      best_score = score;
    }
  }
  if (!best) throw std::domain_error("no scanned bandwidth satisfies the visibility constraint");
  return *best;
}

double optimize_filter(const TradeoffCurve& curve, const FigureOfMerit& merit) {
  return curve[optimize_filter_index(curve, merit)].fwhm_nm;
}

} // namespace spdcmap
