#include "spdcmap/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "spdcmap/errors.hpp"

namespace spdcmap {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double angle_mod_180(double deg) {
  double r = std::fmod(deg, 180.0);
  if (r < 0.0) r += 180.0;
  return r;
}

std::size_t distinct_half_turn_angles(const std::vector<ScanSample>& samples) {
  std::vector<double> angles;
  for (const auto& s : samples) angles.push_back(angle_mod_180(s.alpha2_deg));
  std::sort(angles.begin(), angles.end());
  std::size_t distinct = 0;
  for (std::size_t k = 0; k < angles.size(); ++k)
    if (k == 0 || angles[k] - angles[k - 1] > 1e-9) ++distinct;
  // 0 and 180 - eps coincide on the circle
  if (distinct > 1 && angles.front() + 180.0 - angles.back() <= 1e-9) --distinct;
  return distinct;
}

} // namespace

void PolarizerScan::validate() const {
  std::vector<std::string> issues;
  for (const auto& s : samples) {
    if (!(s.counts >= 0.0)) {
      issues.emplace_back("scan counts must be non-negative");
      break;
    }
  }
  for (const auto& s : samples) {
    if (!(s.integration_s > 0.0)) {
      issues.emplace_back("scan integration times must be positive");
      break;
    }
  }
  if (distinct_half_turn_angles(samples) < 3)
    issues.emplace_back("scan needs at least 3 distinct alpha2 angles modulo 180 degrees");
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

VisibilityFit fit_sinusoid(const PolarizerScan& scan) {
  scan.validate();
  Eigen::Matrix3d normal = Eigen::Matrix3d::Zero();
  Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
  for (const auto& s : scan.samples) {
    const double two_a = 2.0 * s.alpha2_deg * kDegree;
    const Eigen::Vector3d x(1.0, std::cos(two_a), std::sin(two_a));
    const double y = s.counts / s.integration_s;
    const double w = s.integration_s * s.integration_s / std::max(s.counts, 1.0);
    normal.noalias() += w * x * x.transpose();
    rhs.noalias() += w * y * x;
  }
  const Eigen::LDLT<Eigen::Matrix3d> ldlt(normal);
  if (ldlt.info() != Eigen::Success) throw FitError("sinusoid normal equations are singular");
  const Eigen::Vector3d p = ldlt.solve(rhs);
  const Eigen::Matrix3d cov = ldlt.solve(Eigen::Matrix3d::Identity());

  VisibilityFit fit;
  fit.offset = p(0);
  fit.p1 = p(1);
  fit.p2 = p(2);
  if (!(fit.offset > 0.0)) throw FitError("sinusoid fit has non-positive offset");
  fit.offset_sigma = std::sqrt(std::max(0.0, cov(0, 0)));

  const double amp = std::hypot(p(1), p(2));
  fit.visibility = amp / p(0);
  if (amp <= 1e-12 * p(0)) {
    fit.visibility = 0.0;
    fit.gamma_defined = false;
    fit.gamma_deg = kNaN;
    fit.gamma_sigma_deg = kNaN;
    fit.visibility_sigma = std::sqrt(std::max(0.0, 0.5 * (cov(1, 1) + cov(2, 2)))) / p(0);
    return fit;
  }
  fit.gamma_deg = wrap_half_turn_deg(0.5 * std::atan2(p(2), p(1)) / kDegree);

  const Eigen::Vector3d dv(-amp / (p(0) * p(0)), p(1) / (amp * p(0)), p(2) / (amp * p(0)));
  const Eigen::Vector3d dg(0.0, -0.5 * p(2) / (amp * amp), 0.5 * p(1) / (amp * amp));
  fit.visibility_sigma = std::sqrt(std::max(0.0, dv.dot(cov * dv)));
  fit.gamma_sigma_deg = std::sqrt(std::max(0.0, dg.dot(cov * dg))) / kDegree;
  return fit;
}

namespace {

// Internal parameters: x0, y0, s1, s2, kappa = 1/s12, amplitude (map units).
using Params = Eigen::Matrix<double, 6, 1>;
using Normal = Eigen::Matrix<double, 6, 6>;

struct Pixel {
  double x, y, value, weight;
};

double model_value(const Params& p, double x, double y) {
  const double dx = x - p(0), dy = y - p(1);
  const double q = dx * dx / (p(2) * p(2)) + dy * dy / (p(3) * p(3)) + p(4) * dx * dy;
  return p(5) * std::exp(-0.5 * q);
}

double chi2_of(const Params& p, const std::vector<Pixel>& pixels) {
  double chi2 = 0.0;
  for (const auto& px : pixels) {
    const double r = px.value - model_value(p, px.x, px.y);
    chi2 += px.weight * r * r;
  }
  return chi2;
}

void accumulate(const Params& p, const std::vector<Pixel>& pixels, Normal& normal, Params& gradient) {
  normal.setZero();
  gradient.setZero();
  for (const auto& px : pixels) {
    const double dx = px.x - p(0), dy = px.y - p(1);
    const double m = model_value(p, px.x, px.y);
    Params j;
    j(0) = m * (dx / (p(2) * p(2)) + 0.5 * p(4) * dy);
    j(1) = m * (dy / (p(3) * p(3)) + 0.5 * p(4) * dx);
    j(2) = m * dx * dx / (p(2) * p(2) * p(2));
    j(3) = m * dy * dy / (p(3) * p(3) * p(3));
    j(4) = -0.5 * m * dx * dy;
    j(5) = p(5) > 0.0 ? m / p(5) : 0.0;
    normal.noalias() += px.weight * j * j.transpose();
    gradient.noalias() += px.weight * (px.value - m) * j;
  }
}

// Weighted regression of log(value) on {1, x, y, x^2, y^2, xy}.
Params log_quadratic_start(const std::vector<Pixel>& pixels, double min_value) {
  Eigen::Matrix<double, 6, 6> normal = Eigen::Matrix<double, 6, 6>::Zero();
  Eigen::Matrix<double, 6, 1> rhs = Eigen::Matrix<double, 6, 1>::Zero();
  std::size_t used = 0;
  for (const auto& px : pixels) {
    if (!(px.value >= min_value) || px.value <= 0.0) continue;
    Eigen::Matrix<double, 6, 1> b;
    b << 1.0, px.x, px.y, px.x * px.x, px.y * px.y, px.x * px.y;
    const double w = px.value; // var(log c) ~ 1/c
    normal.noalias() += w * b * b.transpose();
    rhs.noalias() += w * std::log(px.value) * b;
    ++used;
  }
  if (used < 6) throw FitError("fewer than 6 pixels above the fit threshold");
  const Eigen::ColPivHouseholderQR<Eigen::Matrix<double, 6, 6>> qr(normal);
  if (qr.rank() < 6) throw FitError("log-quadratic initialization is rank deficient");
  const Eigen::Matrix<double, 6, 1> c = qr.solve(rhs);

  const double c3 = c(3), c4 = c(4), c5 = c(5);
  if (!(c3 < 0.0 && c4 < 0.0 && 4.0 * c3 * c4 - c5 * c5 > 0.0))
    throw FitError("log-quadratic initialization has no maximum (data are not peaked)");
  Eigen::Matrix2d hessian;
  hessian << 2.0 * c3, c5, c5, 2.0 * c4;
  const Eigen::Vector2d center = hessian.ldlt().solve(Eigen::Vector2d(-c(1), -c(2)));
  const double x0 = center(0), y0 = center(1);
  const double log_amp = c(0) + c(1) * x0 + c(2) * y0 + c3 * x0 * x0 + c4 * y0 * y0 + c5 * x0 * y0;

  Params p;
  p << x0, y0, std::sqrt(-0.5 / c3), std::sqrt(-0.5 / c4), -2.0 * c5, std::exp(log_amp);
  return p;
}

} // namespace

GaussianFitReport fit_gaussian2d(const SpectralMap& map, const GaussianFitOptions& options) {
  if (map.kind() != MapKind::counts && map.kind() != MapKind::rate)
    throw ValidationError("fit_gaussian2d expects a counts or rate map");
  const auto& grid = map.grid();
  const bool poisson = map.kind() == MapKind::counts;
  const double t = poisson && map.metadata().integration_s ? *map.metadata().integration_s : 1.0;

  // Work in coordinates relative to the grid center for conditioning.
  const double ref1 = grid.lambda1(0) + 0.5 * grid.step1 * static_cast<double>(grid.count1 - 1);
  const double ref2 = grid.lambda2(0) + 0.5 * grid.step2 * static_cast<double>(grid.count2 - 1);
  std::vector<Pixel> pixels;
  pixels.reserve(grid.size());
  double peak = 0.0;
  for (std::size_t i = 0; i < grid.count1; ++i) {
    for (std::size_t j = 0; j < grid.count2; ++j) {
      const double v = map(i, j);
      if (SpectralMap::is_masked(v)) continue;
      peak = std::max(peak, v);
      pixels.push_back({grid.lambda1(i) - ref1, grid.lambda2(j) - ref2, v, poisson ? 1.0 / std::max(v, 1.0) : 1.0});
    }
  }
  if (pixels.size() < 7) throw FitError("map has too few pixels for a 6-parameter fit");
  if (!(peak > 0.0)) throw FitError("map is empty");

  const double min_value = poisson ? options.log_fit_min_counts : 1e-3 * peak;
  Params p = log_quadratic_start(pixels, min_value);
  if (!p.allFinite()) throw FitError("log-quadratic initialization is not finite");

  Normal normal;
  Params gradient;
  double chi2 = chi2_of(p, pixels);
  double lambda = 1e-3;
  bool converged = false;
  int iteration = 0;
  const auto step_is_small = [&](const Params& step, const Params& at) {
    const double kappa_scale = 1.0 / (at(2) * at(3));
    for (int k = 0; k < 6; ++k) {
      const double scale = k == 4 ? std::max(std::abs(at(4)), kappa_scale)
                           : k < 2 ? std::max(std::abs(at(k) + (k == 0 ? ref1 : ref2)), 1.0)
                                   : std::abs(at(k));
      if (std::abs(step(k)) > options.tolerance * scale) return false;
    }
    return true;
  };

  accumulate(p, pixels, normal, gradient);
  while (iteration < options.max_iterations) {
    ++iteration;
    Normal damped = normal;
    for (int k = 0; k < 6; ++k) damped(k, k) += lambda * std::max(normal(k, k), 1e-300);
    const Params step = damped.ldlt().solve(gradient);
    if (!step.allFinite()) throw FitError("damped least-squares step is not finite");
    const Params trial = p + step;
    const bool admissible = trial(2) > 0.0 && trial(3) > 0.0 && trial(5) > 0.0;
    const double trial_chi2 = admissible ? chi2_of(trial, pixels) : std::numeric_limits<double>::infinity();
    if (trial_chi2 <= chi2) {
      const bool small = step_is_small(step, p);
      p = trial;
      chi2 = trial_chi2;
      lambda = std::max(lambda / 10.0, 1e-12);
      accumulate(p, pixels, normal, gradient);
      if (small) {
        converged = true;
        break;
      }
    } else {
      if (step_is_small(step, p)) {
        converged = true; // at the numerical floor of chi2
        break;
      }
      lambda *= 10.0;
      if (lambda > 1e20) break;
    }
  }
  if (!converged) throw FitError("damped least squares did not converge in " + std::to_string(iteration) + " iterations");

  GaussianFitReport report;
  report.iterations = iteration;
  report.chi2 = chi2;
  report.pixels_used = pixels.size();
  report.dof = pixels.size() - 6;
  const double kappa = p(4);
  report.model = GaussianJointModel{
      .lambda1_center = p(0) + ref1,
      .lambda2_center = p(1) + ref2,
      .sigma1 = p(2),
      .sigma2 = p(3),
      .sigma12 = kappa != 0.0 ? 1.0 / kappa : std::numeric_limits<double>::infinity(),
      .amplitude = p(5) / t,
  };
  if (auto issues = model_issues(report.model); !issues.empty())
    throw FitError("fitted model is invalid: " + issues.front());

  const double span1 = grid.step1 * static_cast<double>(grid.count1);
  const double span2 = grid.step2 * static_cast<double>(grid.count2);
  if (std::abs(p(0)) > 0.5 * span1 || std::abs(p(1)) > 0.5 * span2)
    throw FitError("fitted peak lies outside the map");
  if (p(2) > span1 || p(3) > span2) throw FitError("fitted widths exceed the map extent (data are not peaked)");

  const Eigen::LDLT<Normal> ldlt(normal);
  Normal cov = ldlt.solve(Normal::Identity());
  if (!poisson && report.dof > 0) cov *= chi2 / static_cast<double>(report.dof);
  const auto sd = [&](int k) { return std::sqrt(std::max(0.0, cov(k, k))); };
  report.uncertainty = ModelUncertainty{
      .lambda1_center = sd(0),
      .lambda2_center = sd(1),
      .sigma1 = sd(2),
      .sigma2 = sd(3),
      .sigma12 = kappa != 0.0 ? sd(4) / (kappa * kappa) : std::numeric_limits<double>::infinity(),
      .amplitude = sd(5) / t,
  };
  return report;
}

VisibilityFit fit_pixel(const ScanCube& cube, std::size_t i, std::size_t j) {
  PolarizerScan scan{cube.alpha1_deg, {}};
  const auto values = cube.pixel(i, j);
  scan.samples.reserve(values.size());
  for (std::size_t k = 0; k < values.size(); ++k)
    scan.samples.push_back({cube.alpha2_deg[k], values[k], cube.integration_s});
  return fit_sinusoid(scan);
}

VisibilityMaps visibility_gamma_maps(const ScanCube& cube, double max_visibility_sigma) {
  cube.validate();
  MapMetadata vmeta{MapKind::visibility, std::nullopt, cube.integration_s, cube.alpha1_deg, cube.alpha2_deg};
  MapMetadata gmeta = vmeta;
  gmeta.kind = MapKind::gamma_deg;
  VisibilityMaps maps{SpectralMap(cube.grid, vmeta), SpectralMap(cube.grid, gmeta)};
  for (std::size_t i = 0; i < cube.grid.count1; ++i) {
    for (std::size_t j = 0; j < cube.grid.count2; ++j) {
      double v = kNaN, g = kNaN;
      try {
        const auto fit = fit_pixel(cube, i, j);
        if (std::isfinite(fit.visibility_sigma) && fit.visibility_sigma <= max_visibility_sigma) {
          v = fit.visibility;
          g = fit.gamma_defined ? fit.gamma_deg : kNaN;
        }
      } catch (const FitError&) {
        // masked
      }
      maps.visibility(i, j) = v;
      maps.gamma(i, j) = g;
    }
  }
  return maps;
}

VisibilityMaps visibility_gamma_maps(const SourceConfig& config, const WavelengthGrid& grid,
                                     std::span<const double> alpha2_deg, double integration_s,
                                     double max_visibility_sigma) {
  const auto cube = sample_scan_cube(config, grid, 45.0, alpha2_deg, integration_s);
  return visibility_gamma_maps(cube, max_visibility_sigma);
}

SpectralMap entropy_map(const SpectralMap& map_hv, const SpectralMap& map_vh, double mask_threshold) {
  if (!(map_hv.grid() == map_vh.grid())) throw ValidationError("entropy_map: maps are on different grids");
  for (const auto* m : {&map_hv, &map_vh})
    if (m->kind() != MapKind::rate && m->kind() != MapKind::counts)
      throw ValidationError("entropy_map expects rate or counts maps");
  MapMetadata meta{MapKind::entropy_bits, std::nullopt, map_hv.metadata().integration_s, std::nullopt, {}};
  SpectralMap out(map_hv.grid(), meta);
  for (std::size_t i = 0; i < out.grid().count1; ++i) {
    for (std::size_t j = 0; j < out.grid().count2; ++j) {
      const double hv = map_hv(i, j), vh = map_vh(i, j);
      const double total = hv + vh;
      if (std::isnan(total) || !(total > 0.0) || total < mask_threshold || hv < 0.0 || vh < 0.0) {
        out(i, j) = kNaN;
        continue;
      }
      const auto [a, b] = path_amplitudes(hv, vh);
      out(i, j) = entanglement_entropy(TwoPathState{a, b, std::numbers::pi});
    }
  }
  return out;
}

} // namespace spdcmap
