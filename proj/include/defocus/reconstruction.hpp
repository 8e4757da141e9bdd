#pragma once

#include "defocus/estimation.hpp"
#include "defocus/image.hpp"
#include "defocus/parallel.hpp"

namespace defocus {

/// Blurs each pixel with SampledGaussian(scale(x, y)) over the replicate-padded
/// image. Pixels whose scale is not positive are copied through. The result is
/// clamped to [0, 1]. Reconstruction and synthetic blurring both go through here.
GrayImage spatially_varying_gaussian(const GrayImage& image, const Image<double>& scale,
                                     Execution exec = {});

/// Builds the R-Image estimate from the L-Image and the estimated kernels.
/// Invalid pixels of `blur` copy `left`.
GrayImage spatially_varying_convolve(const GrayImage& left, const BlurMap& blur,
                                     Execution exec = {});

/// Mean of |a - b| over the masked-in pixels (all pixels without a mask).
double image_mae(const GrayImage& a, const GrayImage& b, const Mask* mask = nullptr);
double image_max_abs(const GrayImage& a, const GrayImage& b, const Mask* mask = nullptr);

struct ReconstructionReport {
  GrayImage r_hat;
  double mae = 0.0;
  double max_abs = 0.0;
  double evaluated_fraction = 0.0;
};

/// Reconstructs `right` from `left` and compares them over the valid pixels of `blur`.
ReconstructionReport reconstruct(const GrayImage& left, const GrayImage& right,
                                 const BlurMap& blur, Execution exec = {});

}  // namespace defocus
