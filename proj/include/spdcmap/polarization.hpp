#pragma once

#include <numbers>

namespace spdcmap {

/// Wavelength-local pure polarization state of a photon pair,
///   |psi> = a |H>_1 |V>_2 + b e^{i delta} |V>_1 |H>_2,
/// with real non-negative amplitudes a^2 + b^2 = 1.
struct TwoPathState {
  double a = std::numbers::sqrt2 / 2;
  double b = std::numbers::sqrt2 / 2;
  double delta = std::numbers::pi; // radians

  /// Throws ValidationError unless a, b lie in [0, 1] and a^2 + b^2 = 1 to 1e-9.
  void validate() const;

  /// State with amplitudes (a, sqrt(1 - a^2)).
  static TwoPathState from_a(double a, double delta);
};

/// Linear analyzer orientations in degrees. The arm-1 angle is measured from
/// the H axis, the arm-2 angle from the V axis, so (0, 0) transmits the
/// H1V2 decay path and (90, 90) the V1H2 path. Angles are taken modulo 180.
struct AnalyzerSetting {
  double alpha1_deg = 0.0;
  double alpha2_deg = 0.0;
};

inline constexpr double kDegree = std::numbers::pi / 180.0;

/// Projection probability |a c1 c2 + b e^{i delta} s1 s2|^2 onto the analyzer
/// pair.
double coincidence_prob(const TwoPathState& state, const AnalyzerSetting& setting);

/// The three coefficients of C(alpha2) = p0 + p1 cos 2 alpha2 + p2 sin 2 alpha2
/// at a fixed arm-1 angle.
struct HarmonicCoefficients {
  double p0 = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;
};
HarmonicCoefficients coincidence_harmonics(const TwoPathState& state, double alpha1_deg);

/// Arm-2 angle maximizing coincidences with arm 1 at +45 degrees, in
/// (-90, 90]. For a real relative phase with delta = pi this is
/// -arctan(b / a); for other phases the exact argmax of the sinusoid is
/// returned. Throws std::domain_error when the modulation vanishes
/// (a = b = 0 or a b cos(delta) = 0 with a = b).
double gamma_max(const TwoPathState& state);

/// -a^2 log2 a^2 - b^2 log2 b^2 in bits, with 0 log 0 = 0.
double entanglement_entropy(const TwoPathState& state);

/// Contrast of C(alpha2) at alpha1 = 45 degrees.
double visibility_45(const TwoPathState& state);

/// Maps an angle in degrees onto the half-open range (-90, 90].
double wrap_half_turn_deg(double angle_deg);

} // namespace spdcmap
