#include "defocus/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

namespace defocus {

namespace {

// Beyond this many distinct scales the kernels are built per pixel instead of cached.
constexpr std::size_t kMaxCachedKernels = 4096;

template <typename Fn>
double masked_reduce(const GrayImage& a, const GrayImage& b, const Mask* mask, Fn&& fold,
                     bool mean) {
  require_same_shape(a, b, "image comparison");
  if (mask) require_same_shape(a, *mask, "image comparison mask");
  double acc = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      if (mask && (*mask)(x, y) == 0) continue;
      acc = fold(acc, std::abs(a(x, y) - b(x, y)));
      ++count;
    }
  }
  if (count == 0) throw Error(ErrorCode::EmptyDomain, "comparison mask selects no pixels");
  return mean ? acc / double(count) : acc;
}

}  // namespace

GrayImage spatially_varying_gaussian(const GrayImage& image, const Image<double>& scale,
                                     Execution exec) {
  require_same_shape(image, scale, "spatially varying convolution");
  std::vector<double> keys;
  for (double s : scale.pixels()) {
    if (s > 0.0) keys.push_back(s);
    if (!std::isfinite(s)) throw Error(ErrorCode::InvalidParameter, "non-finite blur scale");
  }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());

  std::vector<std::unique_ptr<SampledGaussian>> kernels;
  const bool cached = keys.size() <= kMaxCachedKernels;
  if (cached) {
    kernels.reserve(keys.size());
    for (double s : keys) kernels.push_back(std::make_unique<SampledGaussian>(s));
  }

  GrayImage out(image.width(), image.height());
  parallel_rows(image.height(), exec, [&](int y) {
    for (int x = 0; x < image.width(); ++x) {
      const double s = scale(x, y);
      double v = image(x, y);
      if (s > 0.0) {
        if (cached) {
          const auto it = std::lower_bound(keys.begin(), keys.end(), s);
          v = kernels[std::size_t(it - keys.begin())]->apply(image, x, y);
        } else {
          v = SampledGaussian(s).apply(image, x, y);
        }
      }
      out(x, y) = std::clamp(v, 0.0, 1.0);
    }
  });
  return out;
}

GrayImage spatially_varying_convolve(const GrayImage& left, const BlurMap& blur, Execution exec) {
  require_same_shape(left, blur.sigma, "spatially_varying_convolve");
  Image<double> scale(left.width(), left.height(), 0.0);
  for (int y = 0; y < left.height(); ++y) {
    for (int x = 0; x < left.width(); ++x) {
      if (blur.valid(x, y)) scale(x, y) = blur.sigma(x, y);
    }
  }
  return spatially_varying_gaussian(left, scale, exec);
}

double image_mae(const GrayImage& a, const GrayImage& b, const Mask* mask) {
  return masked_reduce(a, b, mask, [](double acc, double d) { return acc + d; }, true);
}

double image_max_abs(const GrayImage& a, const GrayImage& b, const Mask* mask) {
  return masked_reduce(a, b, mask, [](double acc, double d) { return std::max(acc, d); }, false);
}

ReconstructionReport reconstruct(const GrayImage& left, const GrayImage& right,
                                 const BlurMap& blur, Execution exec) {
  require_same_shape(left, right, "reconstruct");
  ReconstructionReport report;
  report.r_hat = spatially_varying_convolve(left, blur, exec);
  const Mask valid = blur.valid_mask();
  report.mae = image_mae(right, report.r_hat, &valid);
  report.max_abs = image_max_abs(right, report.r_hat, &valid);
  report.evaluated_fraction = double(count_set(valid)) / double(valid.size());
  return report;
}

}  // namespace defocus
