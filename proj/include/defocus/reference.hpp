#pragma once

// Straightforward serial implementations of the parallel kernels. They share no
// code with the fast paths beyond the basic types and serve as test oracles and
// benchmark baselines.

#include "defocus/image.hpp"
#include "defocus/kernel.hpp"
#include "defocus/resample.hpp"

namespace defocus::reference {

/// Materializes the dense W, forms ivec(W vec(patch), M) as a matrix and
/// multiplies it by F / sum(F).
CandidateVector forward_candidates(const Patch& patch, const WeightMatrix& weights,
                                   const QuadratureVector& quadrature);

/// Builds a fresh truncated, sum-normalized Gaussian at every pixel and
/// convolves with replicate padding. Non-positive scales copy the input.
/// The result is clamped to [0, 1].
GrayImage spatially_varying_gaussian(const GrayImage& image, const Image<double>& scale);

/// Full 2D convolution with the outer product of the taps at every input pixel,
/// then subsampling.
GrayImage decimate(const GrayImage& image, const FirFilter& filter);

/// Population standard deviation of the nine replicate-padded neighbours, via E[x^2] - E[x]^2
/// in long double.
GrayImage local_sharpness(const GrayImage& image);

}  // namespace defocus::reference
