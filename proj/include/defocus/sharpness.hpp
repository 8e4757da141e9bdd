#pragma once

#include <cstdint>
#include <optional>

#include "defocus/estimation.hpp"
#include "defocus/image.hpp"
#include "defocus/kernel.hpp"
#include "defocus/parallel.hpp"

namespace defocus {

inline constexpr double kDefaultEqualityTolerance = 1e-6;

/// Population standard deviation of each replicate-padded 3x3 neighbourhood.
GrayImage local_sharpness(const GrayImage& image, Execution exec = {});

enum class SharpnessLabel : std::uint8_t { Equal = 0, BSharper = 1, FSharper = 2 };

struct SharpnessPartition {
  Image<SharpnessLabel> labels;
  std::size_t b_sharper = 0;
  std::size_t f_sharper = 0;
  std::size_t equal = 0;

  /// Pixels where I_B is sharper: BH on I_B, BL on I_F.
  Mask b_sharper_mask() const;
  /// Pixels where I_F is sharper: FH on I_F, FL on I_B.
  Mask f_sharper_mask() const;
  std::size_t size() const noexcept { return labels.size(); }
};

SharpnessPartition partition_pair(const GrayImage& background_focused,
                                  const GrayImage& foreground_focused,
                                  double eq_tol = kDefaultEqualityTolerance, Execution exec = {});

/// Estimation and reconstruction over one sharper subset.
struct SubsetEvaluation {
  BlurMap blur;
  /// The less-sharp image rebuilt from the sharper one; outside the subset it
  /// is a copy of the sharper image.
  GrayImage reconstruction;
  double mae = 0.0;
  /// Pixels in the subset; all of them enter the MAE.
  std::size_t pixels = 0;
  /// Subset pixels that received a valid blur estimate.
  std::size_t valid_pixels = 0;
};

struct PairEvaluation {
  int width = 0;
  int height = 0;
  SharpnessPartition partition;
  /// MAE between I_B and its reconstruction on FL; empty when no pixel is F-sharper.
  std::optional<double> e_b;
  /// MAE between I_F and its reconstruction on BL; empty when no pixel is B-sharper.
  std::optional<double> e_f;
  std::optional<SubsetEvaluation> from_b;
  std::optional<SubsetEvaluation> from_f;

  double pct_b_sharper() const;
  double pct_f_sharper() const;
  double pct_equal() const;
};

struct PairOptions {
  double eq_tol = kDefaultEqualityTolerance;
  EstimationOptions estimation{};
};

/// Cross-estimation over the partition: on B-sharper pixels I_B predicts I_F
/// (giving e_F), on F-sharper pixels I_F predicts I_B (giving e_B). Equal
/// pixels enter neither error.
PairEvaluation evaluate_pair(const GrayImage& background_focused,
                             const GrayImage& foreground_focused, const WeightMatrix& weights,
                             const QuadratureVector& quadrature, const PairOptions& options = {});

/// Display image: the sharper source where one exists, the pair average on Equal pixels.
GrayImage fusion_visualization(const GrayImage& background_focused,
                               const GrayImage& foreground_focused,
                               const SharpnessPartition& partition);

}  // namespace defocus
