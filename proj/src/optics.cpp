#include "defocus/optics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "defocus/error.hpp"

namespace defocus::optics {

namespace {

constexpr double kUpperRange = 5.0;
constexpr double kLowerRange = 0.5;

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw Error(ErrorCode::InvalidParameter, std::string(what) + " must be positive");
  }
}

bool close_relative(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

DecimationAdvice advise(double c_max_pitches, int factor) {
  DecimationAdvice advice;
  advice.factor = factor;
  advice.scaled_pitches = c_max_pitches / double(factor);
  advice.below_range = advice.scaled_pitches < kLowerRange;
  return advice;
}

}  // namespace

CameraSettings CameraSettings::focused_at(double focal_mm, double f_number,
                                          double focus_distance_mm, double pixel_pitch_um) {
  require_positive(focal_mm, "focal length");
  require_positive(f_number, "f-number");
  CameraSettings s;
  s.focal_mm = focal_mm;
  s.f_number = f_number;
  s.aperture_mm = focal_mm / f_number;
  s.focus_distance_mm = focus_distance_mm;
  s.image_distance_mm = image_distance(focal_mm, focus_distance_mm);
  s.pixel_pitch_um = pixel_pitch_um;
  return s;
}

void CameraSettings::validate() const {
  require_positive(aperture_mm, "aperture");
  require_positive(focal_mm, "focal length");
  require_positive(f_number, "f-number");
  if (!close_relative(f_number, focal_mm / aperture_mm, 1e-9)) {
    throw Error(ErrorCode::InvalidParameter, "f-number differs from focal length / aperture");
  }
  if (!(focus_distance_mm > focal_mm)) {
    throw Error(ErrorCode::InvalidParameter, "focus distance must exceed the focal length");
  }
  if (image_distance_mm != 0.0 &&
      !close_relative(focus_distance_mm, focus_distance(focal_mm, image_distance_mm), 1e-9)) {
    throw Error(ErrorCode::InvalidParameter, "image and focus distances violate the lens law");
  }
}

double focus_distance(double focal_mm, double image_distance_mm) {
  require_positive(focal_mm, "focal length");
  if (!(image_distance_mm > focal_mm)) {
    throw Error(ErrorCode::NoRealFocus, "image distance must exceed the focal length");
  }
  const double d = focal_mm * image_distance_mm / (image_distance_mm - focal_mm);
  if (!(d <= kDivergenceLimitMm)) {
    throw Error(ErrorCode::Divergence, "focus distance diverges (image plane at the focal point)");
  }
  return d;
}

double image_distance(double focal_mm, double focus_distance_mm) {
  require_positive(focal_mm, "focal length");
  if (!(focus_distance_mm > focal_mm)) {
    throw Error(ErrorCode::NoRealFocus, "focus distance must exceed the focal length");
  }
  return focal_mm * focus_distance_mm / (focus_distance_mm - focal_mm);
}

double coc_scale(const CameraSettings& s) {
  s.validate();
  return s.aperture_mm * s.focal_mm / (s.focus_distance_mm - s.focal_mm);
}

double coc_diameter(const CameraSettings& s, double delta_df) {
  const double c_o = coc_scale(s);
  const double distance = s.focus_distance_mm + delta_df;
  if (!(distance > 0.0)) {
    throw Error(ErrorCode::BehindLens, "displaced point lies at or behind the lens");
  }
  return c_o * delta_df / distance;
}

double depth_from_coc(double coc, const CameraSettings& s) {
  const double c_o = coc_scale(s);
  if (coc == c_o) throw Error(ErrorCode::Singular, "CoC equal to C_o maps to infinite depth");
  const double delta = coc * s.focus_distance_mm / (c_o - coc);
  if (!(std::abs(delta) <= kDivergenceLimitMm)) {
    throw Error(ErrorCode::Divergence, "depth diverges as the CoC approaches C_o");
  }
  return delta;
}

double c_max_bounded(const CameraSettings& s, double eta) {
  if (!(eta > 0.0 && eta < 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "eta must lie in (0, 1)");
  }
  return eta / (1.0 - eta) * coc_scale(s);
}

CMaxForeground c_max_foreground(double foreground_mm, Distance background, double focal_mm,
                                double f_number) {
  require_positive(focal_mm, "focal length");
  require_positive(f_number, "f-number");
  if (!(foreground_mm > focal_mm)) {
    throw Error(ErrorCode::InvalidParameter, "foreground must lie beyond the focal length");
  }
  if (!background.at_infinity && !(background.mm >= foreground_mm)) {
    throw Error(ErrorCode::InvalidParameter, "background must not be nearer than the foreground");
  }
  const double aperture = focal_mm / f_number;
  const double depth_ratio =
      background.at_infinity ? 1.0 : (background.mm - foreground_mm) / background.mm;
  CMaxForeground result;
  result.exact_mm = depth_ratio * aperture * focal_mm / (foreground_mm - focal_mm);
  result.approx_mm = focal_mm * focal_mm / (f_number * foreground_mm);
  return result;
}

double coc_margin(double c_max_mm, double eta) {
  if (!(eta > 0.0 && eta < 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "eta must lie in (0, 1)");
  }
  require_positive(c_max_mm, "C_max");
  return (1.0 - eta) / eta * c_max_mm;
}

double solve_focal_length(double c_m_mm, double f_number, double focus_distance_mm) {
  require_positive(c_m_mm, "C_m");
  require_positive(f_number, "f-number");
  require_positive(focus_distance_mm, "focus distance");
  // (C_m f_n / 2)(sqrt(1 + 4 d_f / (C_m f_n)) - 1), rationalized to avoid cancellation.
  const double b = c_m_mm * f_number;
  const double c = b * focus_distance_mm;
  double f = 2.0 * focus_distance_mm / (1.0 + std::sqrt(1.0 + 4.0 * focus_distance_mm / b));
  // One Newton step on the quadratic removes the last ulps of rounding.
  f -= (f * f + b * f - c) / (2.0 * f + b);
  return f;
}

double mm_to_pitches(double length_mm, double pixel_pitch_um) {
  require_positive(pixel_pitch_um, "pixel pitch");
  return length_mm * 1000.0 / pixel_pitch_um;
}

DecimationAdvice recommend_decimation(double c_max_pitches) {
  require_positive(c_max_pitches, "C_max");
  int factor = std::max(1, int(std::floor(c_max_pitches / kUpperRange)) + 1);
  while (factor > 1 && c_max_pitches / double(factor - 1) < kUpperRange) --factor;
  return advise(c_max_pitches, factor);
}

DecimationAdvice recommend_decimation_pow2(double c_max_pitches) {
  require_positive(c_max_pitches, "C_max");
  int factor = 1;
  while (!(c_max_pitches / double(factor) < kUpperRange)) factor *= 2;
  return advise(c_max_pitches, factor);
}

}  // namespace defocus::optics
