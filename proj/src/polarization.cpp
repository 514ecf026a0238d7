#include "spdcmap/polarization.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "spdcmap/errors.hpp"

namespace spdcmap {

void TwoPathState::validate() const {
  std::vector<std::string> issues;
  if (!(a >= 0.0 && a <= 1.0)) issues.emplace_back("amplitude a must lie in [0, 1]");
  if (!(b >= 0.0 && b <= 1.0)) issues.emplace_back("amplitude b must lie in [0, 1]");
  if (!(std::abs(a * a + b * b - 1.0) <= 1e-9)) issues.emplace_back("a^2 + b^2 must equal 1");
  if (!std::isfinite(delta)) issues.emplace_back("phase delta must be finite");
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

TwoPathState TwoPathState::from_a(double a, double delta) {
  return TwoPathState{a, std::sqrt(std::max(0.0, 1.0 - a * a)), delta};
}

double coincidence_prob(const TwoPathState& s, const AnalyzerSetting& setting) {
  const double t1 = setting.alpha1_deg * kDegree;
  const double t2 = setting.alpha2_deg * kDegree;
  const double hv = s.a * std::cos(t1) * std::cos(t2);
  const double vh = s.b * std::sin(t1) * std::sin(t2);
  // |hv + vh e^{i delta}|^2
  return hv * hv + vh * vh + 2.0 * hv * vh * std::cos(s.delta);
}

HarmonicCoefficients coincidence_harmonics(const TwoPathState& s, double alpha1_deg) {
  // cos^2 x = (1 + cos 2x)/2, sin^2 x = (1 - cos 2x)/2, sin x cos x = sin 2x / 2
  const double t1 = alpha1_deg * kDegree;
  const double hh = s.a * s.a * std::cos(t1) * std::cos(t1);
  const double vv = s.b * s.b * std::sin(t1) * std::sin(t1);
  const double cross = 2.0 * s.a * s.b * std::cos(s.delta) * std::cos(t1) * std::sin(t1);
  return {0.5 * (hh + vv), 0.5 * (hh - vv), 0.5 * cross};
}

double wrap_half_turn_deg(double angle_deg) {
  double r = std::fmod(angle_deg, 180.0);
  if (r <= -90.0) r += 180.0;
  if (r > 90.0) r -= 180.0;
  return r;
}

double gamma_max(const TwoPathState& s) {
  if (!(s.a > 0.0 || s.b > 0.0)) throw std::domain_error("gamma undefined for a = b = 0");
  const double c = std::cos(s.delta);
  if (c == -1.0) return wrap_half_turn_deg(-std::atan2(s.b, s.a) / kDegree);
  const auto h = coincidence_harmonics(s, 45.0);
  const double amplitude = std::hypot(h.p1, h.p2);
  if (amplitude <= 1e-15 * h.p0) throw std::domain_error("gamma undefined: coincidences do not depend on alpha2");
  return wrap_half_turn_deg(0.5 * std::atan2(h.p2, h.p1) / kDegree);
}

double entanglement_entropy(const TwoPathState& s) {
  const auto term = [](double p) { return p > 0.0 ? -p * std::log2(p) : 0.0; };
  return term(s.a * s.a) + term(s.b * s.b);
}

double visibility_45(const TwoPathState& s) {
  const double a2 = s.a * s.a;
  const double b2 = s.b * s.b;
  const double c = std::cos(s.delta);
  return std::sqrt((a2 - b2) * (a2 - b2) + 4.0 * a2 * b2 * c * c) / (a2 + b2);
}

} // namespace spdcmap
