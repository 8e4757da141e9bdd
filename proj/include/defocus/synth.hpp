#pragma once

#include <string>

#include "defocus/estimation.hpp"
#include "defocus/image.hpp"
#include "defocus/reconstruction.hpp"

namespace defocus {

enum class Axis { Horizontal, Vertical };

std::string to_string(Axis axis);
Axis parse_axis(const std::string& text);

/// Ground-truth blur scale per pixel.
struct SigmaField {
  Image<double> values;
  Axis axis = Axis::Vertical;
  double start = 0.0;
  double end = 0.0;
};

/// Sigma ramps linearly from `start` at the first row (vertical) or column
/// (horizontal) to `end` at the last one, constant along the other axis.
SigmaField linear_sigma_field(int width, int height, double sigma_start, double sigma_end,
                              Axis axis);

GrayImage apply_sigma_field(const GrayImage& image, const SigmaField& field, Execution exec = {});

/// 100 * mean(|sigma_hat - sigma_true| / sigma_true) over the valid pixels of `blur`.
double sigma_mae_percent(const BlurMap& blur, const SigmaField& truth);

struct SyntheticEvaluation {
  GrayImage blurred;
  BlurMap estimate;
  ReconstructionReport reconstruction;
  double sigma_mae_percent = 0.0;
  double coverage = 0.0;
};

/// Blurs `image` with `field`, estimates the blur back and reconstructs.
SyntheticEvaluation evaluate_synthetic(const GrayImage& image, const SigmaField& field,
                                       const WeightMatrix& weights,
                                       const QuadratureVector& quadrature,
                                       const EstimationOptions& options = {});

}  // namespace defocus
