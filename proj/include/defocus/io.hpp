#pragma once

#include <filesystem>

#include "defocus/estimation.hpp"
#include "defocus/image.hpp"

namespace defocus::io {

/// Reads an 8/16-bit PNG or PGM (P2/P5). Codes are divided by the maximum code
/// value; color PNGs are reduced with luma weights 0.299/0.587/0.114.
GrayImage load_gray(const std::filesystem::path& path);

/// Writes an 8-bit PNG or PGM chosen by extension, quantizing with
/// round-half-up. Intensities outside [0, 1] are rejected.
void save_gray(const GrayImage& image, const std::filesystem::path& path);

/// Clamps to [0, 1] and then saves; for exporting filter outputs that may ring.
void save_gray_clamped(const GrayImage& image, const std::filesystem::path& path);

/// 16-byte header ("DFBM1" padded to 8 bytes, uint32 width, uint32 height)
/// followed by row-major float32 sigma; invalid pixels are NaN.
void save_blur_raster(const BlurMap& blur, const std::filesystem::path& path);
/// Reads a raster written by save_blur_raster. Sigma is NaN where invalid.
Image<double> load_blur_raster(const std::filesystem::path& path);

/// 8-bit visualization: sigma mapped linearly from [sigma_min, sigma_max] to
/// [0, 255]; invalid pixels are black.
GrayImage blur_visualization(const BlurMap& blur);

}  // namespace defocus::io
