#pragma once

// Thin-lens geometry. Lengths are millimetres; pixel pitch is micrometres and
// only enters through the *_pitches conversions.

namespace defocus::optics {

/// Distances at which the lens law diverges are reported as errors.
inline constexpr double kDivergenceLimitMm = 1e9;

/// A scene distance that may lie at infinity.
struct Distance {
  double mm = 0.0;
  bool at_infinity = false;

  static Distance finite(double mm) { return {mm, false}; }
  static Distance infinity() { return {0.0, true}; }
};

struct CameraSettings {
  double aperture_mm = 0.0;
  double focal_mm = 0.0;
  double f_number = 0.0;
  double image_distance_mm = 0.0;
  double focus_distance_mm = 0.0;
  double pixel_pitch_um = 0.0;

  /// Settings focused at `focus_distance_mm`; aperture and image distance are derived.
  static CameraSettings focused_at(double focal_mm, double f_number, double focus_distance_mm,
                                   double pixel_pitch_um = 0.0);

  /// Throws InvalidParameter when the fields contradict each other.
  void validate() const;
};

/// Lens law: focus distance d_f = f d_i / (d_i - f).
double focus_distance(double focal_mm, double image_distance_mm);
/// Inverse lens law: d_i = f d_f / (d_f - f).
double image_distance(double focal_mm, double focus_distance_mm);

/// C_o = A f / (d_f - f), the CoC scale of a point at infinity.
double coc_scale(const CameraSettings& settings);

/// Signed CoC diameter of a point displaced by `delta_df` from the focal plane.
double coc_diameter(const CameraSettings& settings, double delta_df);
/// Depth offset that produces a CoC of `coc`; inverse of coc_diameter.
double depth_from_coc(double coc, const CameraSettings& settings);

/// Largest |C| for relative depths |delta_df / d_f| < eta.
double c_max_bounded(const CameraSettings& settings, double eta);

struct CMaxForeground {
  double exact_mm = 0.0;
  /// f^2 / (f_n d_F); the value used for the worked camera examples.
  double approx_mm = 0.0;
};

/// Largest CoC for a scene spanning [d_F, d_B] when focused on either end.
CMaxForeground c_max_foreground(double foreground_mm, Distance background, double focal_mm,
                                double f_number);

/// C_m = (1 - eta) / eta * C_max.
double coc_margin(double c_max_mm, double eta);

/// Positive root of f^2 + C_m f_n f - C_m f_n d_f = 0.
double solve_focal_length(double c_m_mm, double f_number, double focus_distance_mm);

double mm_to_pitches(double length_mm, double pixel_pitch_um);

struct DecimationAdvice {
  int factor = 1;
  /// C_max after decimation, in pitches.
  double scaled_pitches = 0.0;
  /// The scaled CoC fell below 0.5 pitch and may be undetectable.
  bool below_range = false;
};

/// Smallest integer D >= 1 with c_max_pitches / D < 5.
DecimationAdvice recommend_decimation(double c_max_pitches);
/// Smallest power of two D with c_max_pitches / D < 5 (successive halving).
DecimationAdvice recommend_decimation_pow2(double c_max_pitches);

}  // namespace defocus::optics
