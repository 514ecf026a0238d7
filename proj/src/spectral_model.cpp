#include "spdcmap/spectral_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "spdcmap/errors.hpp"

namespace spdcmap {

GaussianJointModel reference_hv_model() {
  return GaussianJointModel{
      .lambda1_center = 779.77,
      .lambda2_center = 779.10,
      .sigma1 = 1.265,
      .sigma2 = 1.853,
      .sigma12 = 1.509,
      .amplitude = 1.0,
  };
}

std::vector<std::string> model_issues(const GaussianJointModel& m) {
  std::vector<std::string> issues;
  if (!std::isfinite(m.lambda1_center)) issues.emplace_back("lambda1_center must be finite");
  if (!std::isfinite(m.lambda2_center)) issues.emplace_back("lambda2_center must be finite");
  const bool s1_ok = std::isfinite(m.sigma1) && m.sigma1 > 0.0;
  const bool s2_ok = std::isfinite(m.sigma2) && m.sigma2 > 0.0;
  if (!s1_ok) issues.emplace_back("sigma1 must be positive");
  if (!s2_ok) issues.emplace_back("sigma2 must be positive");
  if (!(std::isfinite(m.amplitude) && m.amplitude > 0.0))
    issues.emplace_back("amplitude must be positive");
  if (std::isnan(m.sigma12) || m.sigma12 == 0.0) {
    issues.emplace_back("sigma12 must be non-zero");
  } else if (s1_ok && s2_ok && std::isfinite(m.sigma12)) {
    // 4 s12^2 > s1^2 s2^2  <=>  2 |s12| > s1 s2
    if (!(2.0 * std::abs(m.sigma12) > m.sigma1 * m.sigma2))
      issues.emplace_back("quadratic form not positive definite: need 4*sigma12^2 > sigma1^2*sigma2^2");
  }
  return issues;
}

void validate(const GaussianJointModel& model) {
  auto issues = model_issues(model);
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

double gaussian_eval(const GaussianJointModel& m, double lambda1, double lambda2) {
  const double d1 = lambda1 - m.lambda1_center;
  const double d2 = lambda2 - m.lambda2_center;
  const double q = d1 * d1 / (m.sigma1 * m.sigma1) + d2 * d2 / (m.sigma2 * m.sigma2) + d1 * d2 / m.sigma12;
  return m.amplitude * std::exp(-0.5 * q);
}

GaussianJointModel mirror_path(const GaussianJointModel& m) {
  return GaussianJointModel{
      .lambda1_center = m.lambda2_center,
      .lambda2_center = m.lambda1_center,
      .sigma1 = m.sigma2,
      .sigma2 = m.sigma1,
      .sigma12 = m.sigma12,
      .amplitude = m.amplitude,
  };
}

double marginal_fwhm(const GaussianJointModel& m, int arm) {
  if (arm != 1 && arm != 2) throw std::invalid_argument("arm must be 1 or 2");
  const double own = arm == 1 ? m.sigma1 : m.sigma2;
  const double other = arm == 1 ? m.sigma2 : m.sigma1;
  const double bracket = 1.0 / (own * own) - other * other / (4.0 * m.sigma12 * m.sigma12);
  if (!(bracket > 0.0))
    throw std::domain_error("degenerate marginal: 1/sigma_arm^2 - sigma_other^2/(4 sigma12^2) <= 0");
  return 2.0 * std::sqrt(2.0 * std::numbers::ln2) / std::sqrt(bracket);
}

double degeneracy_wavelength(const GaussianJointModel& m) {
  // The exponent difference g(l1,l2) vs g(l2,l1) factors as
  // (l1 - l2) * [(l1 + l2) k - 2 (u1/s1^2 - u2/s2^2) + (u1 - u2)/s12]
  // with k = 1/s1^2 - 1/s2^2 and u measured from the mean center.
  const double mid = 0.5 * (m.lambda1_center + m.lambda2_center);
  const double u1 = m.lambda1_center - mid;
  const double u2 = m.lambda2_center - mid;
  const double w1 = 1.0 / (m.sigma1 * m.sigma1);
  const double w2 = 1.0 / (m.sigma2 * m.sigma2);
  const double k = w1 - w2;
  if (std::abs(k) < 1e-12 * std::max(w1, w2)) return mid;
  return mid + (2.0 * (u1 * w1 - u2 * w2) - (u1 - u2) / m.sigma12) / (2.0 * k);
}

std::pair<double, double> path_amplitudes(double g_hv, double g_vh) {
  if (!(g_hv >= 0.0) || !(g_vh >= 0.0)) throw std::domain_error("path rates must be non-negative");
  const double total = g_hv + g_vh;
  if (!(total > 0.0)) throw std::domain_error("undefined state: both path rates are zero");
  const double a2 = g_hv / total;
  const double b2 = g_vh / total;
  return {std::sqrt(a2), std::sqrt(b2)};
}

void WavelengthGrid::validate() const {
  std::vector<std::string> issues;
  if (!std::isfinite(start1) || !std::isfinite(start2)) issues.emplace_back("grid start must be finite");
  if (!(std::isfinite(step1) && step1 > 0.0)) issues.emplace_back("grid step1 must be positive");
  if (!(std::isfinite(step2) && step2 > 0.0)) issues.emplace_back("grid step2 must be positive");
  if (count1 == 0) issues.emplace_back("grid count1 must be positive");
  if (count2 == 0) issues.emplace_back("grid count2 must be positive");
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

WavelengthGrid WavelengthGrid::centered(double center, double step, std::size_t count) {
  const double start = center - 0.5 * step * static_cast<double>(count - 1);
  return WavelengthGrid{start, start, step, step, count, count};
}

std::string_view to_string(MapKind kind) {
  switch (kind) {
  case MapKind::rate: return "rate";
  case MapKind::counts: return "counts";
  case MapKind::visibility: return "visibility";
  case MapKind::gamma_deg: return "gamma_deg";
  case MapKind::entropy_bits: return "entropy_bits";
  }
  return "unknown";
}

MapKind map_kind_from_string(std::string_view name) {
  for (auto k : {MapKind::rate, MapKind::counts, MapKind::visibility, MapKind::gamma_deg, MapKind::entropy_bits})
    if (to_string(k) == name) return k;
  throw ValidationError("unknown map kind '" + std::string(name) + "'");
}

std::string_view units_of(MapKind kind) {
  switch (kind) {
  case MapKind::rate: return "1/s";
  case MapKind::counts: return "counts";
  case MapKind::visibility: return "1";
  case MapKind::gamma_deg: return "deg";
  case MapKind::entropy_bits: return "bit";
  }
  return "";
}

SpectralMap::SpectralMap(WavelengthGrid grid, MapMetadata metadata)
    : grid_(grid), metadata_(metadata), values_(grid.size(), 0.0) {
  grid_.validate();
}

SpectralMap::SpectralMap(WavelengthGrid grid, MapMetadata metadata, std::vector<double> values)
    : grid_(grid), metadata_(metadata), values_(std::move(values)) {
  grid_.validate();
  if (values_.size() != grid_.size())
    throw ValidationError("map has " + std::to_string(values_.size()) + " values for a grid of " +
                          std::to_string(grid_.size()) + " pixels");
}

bool SpectralMap::is_masked(double v) { return std::isnan(v); }

std::size_t SpectralMap::masked_count() const {
  return static_cast<std::size_t>(std::count_if(values_.begin(), values_.end(), is_masked));
}

void SpectralMap::validate() const {
  constexpr double tol = 1e-9;
  std::vector<std::string> issues;
  for (double v : values_) {
    if (is_masked(v)) continue;
    switch (metadata_.kind) {
    case MapKind::counts:
      if (v < 0.0 || v != std::floor(v)) issues.emplace_back("counts must be non-negative integers");
      break;
    case MapKind::rate:
      if (!(v >= 0.0)) issues.emplace_back("rates must be non-negative");
      break;
    case MapKind::visibility:
      if (!(v >= 0.0)) issues.emplace_back("visibility must be non-negative");
      break;
    case MapKind::entropy_bits:
      if (!(v >= -tol && v <= 1.0 + tol)) issues.emplace_back("entropy must lie in [0, 1] bits");
      break;
    case MapKind::gamma_deg:
      if (!(v > -90.0 && v <= 90.0)) issues.emplace_back("gamma must lie in (-90, 90] degrees");
      break;
    }
    if (!issues.empty()) break;
  }
  if (metadata_.integration_s && !(*metadata_.integration_s > 0.0))
    issues.emplace_back("integration time must be positive");
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

SpectralMap SpectralMap::transposed() const {
  WavelengthGrid g{grid_.start2, grid_.start1, grid_.step2, grid_.step1, grid_.count2, grid_.count1};
  SpectralMap out(g, metadata_);
  for (std::size_t i = 0; i < grid_.count1; ++i)
    for (std::size_t j = 0; j < grid_.count2; ++j) out(j, i) = (*this)(i, j);
  return out;
}

} // namespace spdcmap
