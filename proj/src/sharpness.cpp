#include "defocus/sharpness.hpp"

#include <cmath>

#include "defocus/reconstruction.hpp"

namespace defocus {

namespace {

Mask label_mask(const Image<SharpnessLabel>& labels, SharpnessLabel which) {
  Mask mask(labels.width(), labels.height(), 0);
  for (int y = 0; y < labels.height(); ++y) {
    for (int x = 0; x < labels.width(); ++x) mask(x, y) = labels(x, y) == which ? 1 : 0;
  }
  return mask;
}

SubsetEvaluation evaluate_subset(const GrayImage& sharper, const GrayImage& blurrier,
                                 const Mask& subset, const WeightMatrix& weights,
                                 const QuadratureVector& quadrature,
                                 const EstimationOptions& options) {
  SubsetEvaluation result;
  result.blur = estimate_blur_map(sharper, blurrier, weights, quadrature, &subset, options);
  result.reconstruction = spatially_varying_convolve(sharper, result.blur, options.execution);
  result.mae = image_mae(blurrier, result.reconstruction, &subset);
  result.pixels = count_set(subset);
  result.valid_pixels = count_set(result.blur.valid_mask());
  return result;
}

double percent(std::size_t part, std::size_t whole) {
  return whole == 0 ? 0.0 : 100.0 * double(part) / double(whole);
}

}  // namespace

GrayImage local_sharpness(const GrayImage& image, Execution exec) {
  if (image.width() < 3 || image.height() < 3) {
    throw Error(ErrorCode::TooSmall, "sharpness needs an image of at least 3x3");
  }
  GrayImage out(image.width(), image.height());
  parallel_rows(image.height(), exec, [&](int y) {
    for (int x = 0; x < image.width(); ++x) {
      double sum = 0.0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) sum += image.clamped(x + dx, y + dy);
      }
      const double mean = sum / 9.0;
      double ss = 0.0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const double d = image.clamped(x + dx, y + dy) - mean;
          ss += d * d;
        }
      }
      out(x, y) = std::sqrt(ss / 9.0);
    }
  });
  return out;
}

Mask SharpnessPartition::b_sharper_mask() const {
  return label_mask(labels, SharpnessLabel::BSharper);
}

Mask SharpnessPartition::f_sharper_mask() const {
  return label_mask(labels, SharpnessLabel::FSharper);
}

SharpnessPartition partition_pair(const GrayImage& background_focused,
                                  const GrayImage& foreground_focused, double eq_tol,
                                  Execution exec) {
  require_same_shape(background_focused, foreground_focused, "partition_pair");
  if (!(eq_tol >= 0.0)) throw Error(ErrorCode::InvalidParameter, "eq_tol must be >= 0");
  const GrayImage sb = local_sharpness(background_focused, exec);
  const GrayImage sf = local_sharpness(foreground_focused, exec);

  SharpnessPartition p;
  p.labels = Image<SharpnessLabel>(sb.width(), sb.height(), SharpnessLabel::Equal);
  for (int y = 0; y < sb.height(); ++y) {
    for (int x = 0; x < sb.width(); ++x) {
      const double diff = sb(x, y) - sf(x, y);
      if (diff > eq_tol) {
        p.labels(x, y) = SharpnessLabel::BSharper;
        ++p.b_sharper;
      } else if (diff < -eq_tol) {
        p.labels(x, y) = SharpnessLabel::FSharper;
        ++p.f_sharper;
      } else {
        ++p.equal;
      }
    }
  }
  return p;
}

double PairEvaluation::pct_b_sharper() const { return percent(partition.b_sharper, partition.size()); }
double PairEvaluation::pct_f_sharper() const { return percent(partition.f_sharper, partition.size()); }
double PairEvaluation::pct_equal() const { return percent(partition.equal, partition.size()); }

PairEvaluation evaluate_pair(const GrayImage& background_focused,
                             const GrayImage& foreground_focused, const WeightMatrix& weights,
                             const QuadratureVector& quadrature, const PairOptions& options) {
  PairEvaluation eval;
  eval.partition = partition_pair(background_focused, foreground_focused, options.eq_tol,
                                  options.estimation.execution);
  eval.width = background_focused.width();
  eval.height = background_focused.height();

  if (eval.partition.b_sharper > 0) {
    eval.from_b = evaluate_subset(background_focused, foreground_focused,
                                  eval.partition.b_sharper_mask(), weights, quadrature,
                                  options.estimation);
    eval.e_f = eval.from_b->mae;
  }
  if (eval.partition.f_sharper > 0) {
    eval.from_f = evaluate_subset(foreground_focused, background_focused,
                                  eval.partition.f_sharper_mask(), weights, quadrature,
                                  options.estimation);
    eval.e_b = eval.from_f->mae;
  }
  return eval;
}

GrayImage fusion_visualization(const GrayImage& background_focused,
                               const GrayImage& foreground_focused,
                               const SharpnessPartition& partition) {
  require_same_shape(background_focused, foreground_focused, "fusion_visualization");
  require_same_shape(background_focused, partition.labels, "fusion_visualization");
  GrayImage out(background_focused.width(), background_focused.height());
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      switch (partition.labels(x, y)) {
        case SharpnessLabel::BSharper: out(x, y) = background_focused(x, y); break;
        case SharpnessLabel::FSharper: out(x, y) = foreground_focused(x, y); break;
        case SharpnessLabel::Equal:
          out(x, y) = 0.5 * (background_focused(x, y) + foreground_focused(x, y));
          break;
      }
    }
  }
  return out;
}

}  // namespace defocus
