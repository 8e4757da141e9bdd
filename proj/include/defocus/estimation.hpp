#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "defocus/image.hpp"
#include "defocus/kernel.hpp"
#include "defocus/parallel.hpp"

namespace defocus {

/// Per-pixel status bits of a BlurMap.
enum PixelFlag : std::uint8_t {
  kValid = 1 << 0,
  /// Estimate sits on the grid floor; the true blur may be smaller.
  kFloor = 1 << 1,
  /// Every grid sigma explains the observation equally well.
  kTextureless = 1 << 2,
  /// The pixel's best matches all disagree with its neighbourhood.
  kInconsistent = 1 << 3,
  /// Outside the processing mask.
  kSkipped = 1 << 4,
};

/// Per-pixel relative blur estimate in pixel pitches.
struct BlurMap {
  Image<double> sigma;
  Image<std::uint8_t> flags;
  /// |M(sigma_hat) - i_R| at the reported sigma.
  Image<double> residual;
  double sigma_min = 0.0;
  double sigma_max = 0.0;

  BlurMap() = default;
  BlurMap(int width, int height, double grid_min, double grid_max);

  int width() const noexcept { return sigma.width(); }
  int height() const noexcept { return sigma.height(); }
  bool valid(int x, int y) const noexcept { return (flags(x, y) & kValid) != 0; }
  Mask valid_mask() const;
  /// Fraction of all pixels that are valid.
  double coverage() const;
};

/// Grid indices whose candidate is within `tie_tol` of the best match.
struct MatchCandidates {
  std::vector<std::uint16_t> indices;
  std::vector<double> residuals;

  std::size_t size() const noexcept { return indices.size(); }
};

inline constexpr double kDefaultTieTolerance = 1e-4;

MatchCandidates match_sigma(std::span<const double> candidates, double observed,
                            double tie_tol = kDefaultTieTolerance);
inline MatchCandidates match_sigma(const CandidateVector& candidates, double observed,
                                   double tie_tol = kDefaultTieTolerance) {
  return match_sigma(std::span<const double>(candidates.values), observed, tie_tol);
}

/// Result of the per-pixel stage: the tie set of every processed pixel plus
/// its full residual curve |M(sigma_m) - i_R| over the grid (single precision).
class CandidateField {
 public:
  CandidateField(int width, int height, SigmaGrid grid);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  const SigmaGrid& grid() const noexcept { return grid_; }

  bool processed(int x, int y) const noexcept { return processed_[index(x, y)] != 0; }
  const MatchCandidates& matches(int x, int y) const noexcept { return matches_[index(x, y)]; }
  std::span<const float> residuals(int x, int y) const noexcept;
  /// All grid values tie: the pixel carries no blur information.
  bool ambiguous(int x, int y) const noexcept {
    return processed(x, y) && matches(x, y).size() == grid_.size();
  }

  void set(int x, int y, MatchCandidates matches, std::span<const double> residuals);

 private:
  std::size_t index(int x, int y) const noexcept {
    return std::size_t(y) * std::size_t(width_) + std::size_t(x);
  }

  int width_;
  int height_;
  SigmaGrid grid_;
  std::vector<std::uint8_t> processed_;
  std::vector<MatchCandidates> matches_;
  std::vector<float> residuals_;
};

struct DisambiguationOptions {
  /// Side of the square neighbourhood whose residuals are pooled.
  int window = 5;
  /// Apply the final 3x3 median over valid estimates.
  bool median_pass = true;
};

struct EstimationOptions {
  double tie_tol = kDefaultTieTolerance;
  DisambiguationOptions disambiguation{};
  Execution execution{};
};

/// Runs the framework and matching at every masked-in pixel.
CandidateField compute_candidate_field(const GrayImage& left, const GrayImage& right,
                                       const WeightMatrix& weights,
                                       const QuadratureVector& quadrature,
                                       const Mask* mask = nullptr, double tie_tol = kDefaultTieTolerance,
                                       Execution exec = {});

/// Resolves each pixel's tie set to one sigma.
///
/// Every candidate in the tie set is scored by the residuals its sigma leaves
/// over the processed, informative pixels of the window. The lowest score
/// wins (smallest sigma on exact ties). A pixel is marked inconsistent when the
/// winner is more than one grid step away from the sigma that minimizes the
/// pooled residual over the whole grid, and textureless when all grid values
/// tie. A 3x3 median over valid neighbours follows.
BlurMap disambiguate(const CandidateField& field, const DisambiguationOptions& options = {},
                     Execution exec = {});

BlurMap estimate_blur_map(const GrayImage& left, const GrayImage& right,
                          const WeightMatrix& weights, const QuadratureVector& quadrature,
                          const Mask* mask = nullptr, const EstimationOptions& options = {});

}  // namespace defocus
