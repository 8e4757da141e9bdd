#include "defocus/synth.hpp"

#include <cmath>

namespace defocus {

std::string to_string(Axis axis) {
  return axis == Axis::Horizontal ? "horizontal" : "vertical";
}

Axis parse_axis(const std::string& text) {
  if (text == "horizontal") return Axis::Horizontal;
  if (text == "vertical") return Axis::Vertical;
  throw Error(ErrorCode::InvalidParameter, "axis must be 'horizontal' or 'vertical'");
}

SigmaField linear_sigma_field(int width, int height, double sigma_start, double sigma_end,
                              Axis axis) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::InvalidParameter, "field dimensions must be positive");
  }
  if (!(sigma_start > 0.0) || !(sigma_end > 0.0) || !std::isfinite(sigma_start) ||
      !std::isfinite(sigma_end)) {
    throw Error(ErrorCode::InvalidParameter, "field sigmas must be positive");
  }
  SigmaField field{Image<double>(width, height), axis, sigma_start, sigma_end};
  const int steps = (axis == Axis::Vertical ? height : width) - 1;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const int k = axis == Axis::Vertical ? y : x;
      field.values(x, y) =
          steps == 0 ? sigma_start
                     : sigma_start + (sigma_end - sigma_start) * double(k) / double(steps);
    }
  }
  return field;
}

GrayImage apply_sigma_field(const GrayImage& image, const SigmaField& field, Execution exec) {
  require_same_shape(image, field.values, "apply_sigma_field");
  for (double s : field.values.pixels()) {
    if (!(s > 0.0)) throw Error(ErrorCode::InvalidParameter, "field sigmas must be positive");
  }
  return spatially_varying_gaussian(image, field.values, exec);
}

double sigma_mae_percent(const BlurMap& blur, const SigmaField& truth) {
  require_same_shape(blur.sigma, truth.values, "sigma_mae_percent");
  double acc = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < blur.height(); ++y) {
    for (int x = 0; x < blur.width(); ++x) {
      if (!blur.valid(x, y)) continue;
      acc += std::abs(blur.sigma(x, y) - truth.values(x, y)) / truth.values(x, y);
      ++count;
    }
  }
  if (count == 0) throw Error(ErrorCode::EmptyDomain, "blur map has no valid pixels");
  return 100.0 * acc / double(count);
}

SyntheticEvaluation evaluate_synthetic(const GrayImage& image, const SigmaField& field,
                                       const WeightMatrix& weights,
                                       const QuadratureVector& quadrature,
                                       const EstimationOptions& options) {
  SyntheticEvaluation result;
  result.blurred = apply_sigma_field(image, field, options.execution);
  result.estimate = estimate_blur_map(image, result.blurred, weights, quadrature, nullptr, options);
  result.coverage = result.estimate.coverage();
  result.sigma_mae_percent = sigma_mae_percent(result.estimate, field);
  result.reconstruction =
      reconstruct(image, result.blurred, result.estimate, options.execution);
  return result;
}

}  // namespace defocus
