#include "defocus/reference.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace defocus::reference {

CandidateVector forward_candidates(const Patch& patch, const WeightMatrix& weights,
                                   const QuadratureVector& quadrature) {
  if (patch.side() != weights.patch_side()) {
    throw Error(ErrorCode::ShapeError, "patch side differs from the weighting matrix window");
  }
  const std::vector<double> x = patch.vectorized();
  std::vector<double> ring(weights.rows(), 0.0);
  for (std::size_t row = 0; row < weights.rows(); ++row) {
    for (std::size_t col = 0; col < weights.cols(); ++col) {
      ring[row] += weights.entry(row, col) * x[col];
    }
  }
  const std::size_t m_count = weights.sigma_grid().size();
  const ColumnMajorMatrix averages = ivec(ring, m_count);
  double f_sum = 0.0;
  for (double f : quadrature.values) f_sum += f;

  CandidateVector out;
  out.values.assign(m_count, 0.0);
  for (std::size_t m = 0; m < m_count; ++m) {
    for (std::size_t n = 0; n < averages.cols(); ++n) {
      out.values[m] += averages(m, n) * quadrature.values[n];
    }
    out.values[m] /= f_sum;
  }
  return out;
}

GrayImage spatially_varying_gaussian(const GrayImage& image, const Image<double>& scale) {
  require_same_shape(image, scale, "reference::spatially_varying_gaussian");
  GrayImage out(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const double s = scale(x, y);
      if (!(s > 0.0)) {
        out(x, y) = std::clamp(image(x, y), 0.0, 1.0);
        continue;
      }
      const int radius = int(std::floor(kRadialUpperBound * s));
      const double limit = kRadialUpperBound * s * kRadialUpperBound * s;
      double weight_sum = 0.0;
      double acc = 0.0;
      for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
          const double r2 = double(dx * dx + dy * dy);
          if (r2 > limit) continue;
          const double w = std::exp(-r2 / (2.0 * s * s));
          weight_sum += w;
          acc += w * image.clamped(x + dx, y + dy);
        }
      }
      out(x, y) = std::clamp(acc / weight_sum, 0.0, 1.0);
    }
  }
  return out;
}

GrayImage decimate(const GrayImage& image, const FirFilter& filter) {
  const int support = 2 * filter.half_length + 1;
  if (image.width() < support || image.height() < support) {
    throw Error(ErrorCode::TooSmall, "image is smaller than the filter support");
  }
  const int l = filter.half_length;
  GrayImage filtered(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      double acc = 0.0;
      for (int ky = -l; ky <= l; ++ky) {
        for (int kx = -l; kx <= l; ++kx) {
          acc += filter.tap(kx) * filter.tap(ky) * image.clamped(x - kx, y - ky);
        }
      }
      filtered(x, y) = acc;
    }
  }
  const int d = filter.factor;
  GrayImage out((image.width() + d - 1) / d, (image.height() + d - 1) / d);
  for (int i = 0; i < out.height(); ++i) {
    for (int j = 0; j < out.width(); ++j) out(j, i) = filtered(j * d, i * d);
  }
  return out;
}

GrayImage local_sharpness(const GrayImage& image) {
  if (image.width() < 3 || image.height() < 3) {
    throw Error(ErrorCode::TooSmall, "sharpness needs an image of at least 3x3");
  }
  GrayImage out(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      long double s1 = 0.0L, s2 = 0.0L;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const long double v = image.clamped(x + dx, y + dy);
          s1 += v;
          s2 += v * v;
        }
      }
      const long double mean = s1 / 9.0L;
      out(x, y) = double(std::sqrt(std::max(0.0L, s2 / 9.0L - mean * mean)));
    }
  }
  return out;
}

}  // namespace defocus::reference
