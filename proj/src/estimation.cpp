#include "defocus/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace defocus {

namespace {

void vectorize_window(const GrayImage& image, int cx, int cy, int side, std::span<double> out) {
  const int h = (side - 1) / 2;
  std::size_t l = 0;
  for (int dx = -h; dx <= h; ++dx) {
    for (int dy = -h; dy <= h; ++dy) out[l++] = image.clamped(cx + dx, cy + dy);
  }
}

void require_unit_range(const GrayImage& image, const char* what) {
  for (double v : image.pixels()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorCode::InvalidParameter, std::string(what) + " intensities must lie in [0, 1]");
    }
  }
}

}  // namespace

BlurMap::BlurMap(int width, int height, double grid_min, double grid_max)
    : sigma(width, height, 0.0),
      flags(width, height, 0),
      residual(width, height, 0.0),
      sigma_min(grid_min),
      sigma_max(grid_max) {}

Mask BlurMap::valid_mask() const {
  Mask mask(width(), height(), 0);
  for (int y = 0; y < height(); ++y) {
    for (int x = 0; x < width(); ++x) mask(x, y) = valid(x, y) ? 1 : 0;
  }
  return mask;
}

double BlurMap::coverage() const {
  return double(count_set(valid_mask())) / double(flags.size());
}

MatchCandidates match_sigma(std::span<const double> candidates, double observed, double tie_tol) {
  if (candidates.empty()) throw Error(ErrorCode::InvalidParameter, "empty candidate vector");
  if (!(tie_tol >= 0.0)) throw Error(ErrorCode::InvalidParameter, "tie tolerance must be >= 0");
  double best = std::numeric_limits<double>::infinity();
  for (double c : candidates) best = std::min(best, std::abs(c - observed));
  MatchCandidates result;
  for (std::size_t m = 0; m < candidates.size(); ++m) {
    const double r = std::abs(candidates[m] - observed);
    if (r <= best + tie_tol) {
      result.indices.push_back(std::uint16_t(m));
      result.residuals.push_back(r);
    }
  }
  return result;
}

CandidateField::CandidateField(int width, int height, SigmaGrid grid)
    : width_(width), height_(height), grid_(std::move(grid)) {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidParameter, "empty candidate field");
  const std::size_t pixels = std::size_t(width) * std::size_t(height);
  processed_.assign(pixels, 0);
  matches_.resize(pixels);
  residuals_.assign(pixels * grid_.size(), 0.0f);
}

std::span<const float> CandidateField::residuals(int x, int y) const noexcept {
  return std::span(residuals_).subspan(index(x, y) * grid_.size(), grid_.size());
}

void CandidateField::set(int x, int y, MatchCandidates matches, std::span<const double> residuals) {
  const std::size_t i = index(x, y);
  processed_[i] = 1;
  matches_[i] = std::move(matches);
  float* dst = residuals_.data() + i * grid_.size();
  for (std::size_t m = 0; m < grid_.size(); ++m) dst[m] = float(residuals[m]);
}

CandidateField compute_candidate_field(const GrayImage& left, const GrayImage& right,
                                       const WeightMatrix& weights,
                                       const QuadratureVector& quadrature, const Mask* mask,
                                       double tie_tol, Execution exec) {
  require_same_shape(left, right, "estimate_blur_map");
  if (mask) require_same_shape(left, *mask, "estimate_blur_map mask");
  if (quadrature.size() != weights.radial_grid().size()) {
    throw Error(ErrorCode::ShapeError, "quadrature vector does not match the radial grid");
  }
  if (!(tie_tol >= 0.0)) throw Error(ErrorCode::InvalidParameter, "tie tolerance must be >= 0");
  require_unit_range(right, "R-Image");

  CandidateField field(left.width(), left.height(), weights.sigma_grid());
  const std::size_t m_count = weights.sigma_grid().size();
  const int side = weights.patch_side();

  parallel_rows(left.height(), exec, [&](int y) {
    FrameworkWorkspace workspace;
    workspace.patch_vector.resize(weights.cols());
    std::vector<double> candidates(m_count);
    std::vector<double> residuals(m_count);
    for (int x = 0; x < left.width(); ++x) {
      if (mask && (*mask)(x, y) == 0) continue;
      vectorize_window(left, x, y, side, workspace.patch_vector);
      forward_candidates(workspace.patch_vector, weights, quadrature, workspace, candidates);
      const double observed = right(x, y);
      for (std::size_t m = 0; m < m_count; ++m) residuals[m] = std::abs(candidates[m] - observed);
      field.set(x, y, match_sigma(candidates, observed, tie_tol), residuals);
    }
  });
  return field;
}

BlurMap disambiguate(const CandidateField& field, const DisambiguationOptions& options,
                     Execution exec) {
  if (options.window < 3 || options.window % 2 == 0) {
    throw Error(ErrorCode::InvalidParameter, "disambiguation window must be odd and >= 3");
  }
  const SigmaGrid& grid = field.grid();
  const std::size_t m_count = grid.size();
  const int w = field.width();
  const int h = field.height();
  const int reach = options.window / 2;

  BlurMap stage(w, h, grid.front(), grid.back());
  Image<std::uint16_t> chosen(w, h, 0);

  parallel_rows(h, exec, [&](int y) {
    std::vector<double> pooled(m_count);
    for (int x = 0; x < w; ++x) {
      if (!field.processed(x, y)) {
        stage.flags(x, y) = kSkipped;
        continue;
      }
      const MatchCandidates& own = field.matches(x, y);
      if (field.ambiguous(x, y)) {
        stage.flags(x, y) = kTextureless;
        stage.sigma(x, y) = grid.sigmas[own.indices.front()];
        stage.residual(x, y) = own.residuals.front();
        continue;
      }

      std::fill(pooled.begin(), pooled.end(), 0.0);
      for (int qy = std::max(0, y - reach); qy <= std::min(h - 1, y + reach); ++qy) {
        for (int qx = std::max(0, x - reach); qx <= std::min(w - 1, x + reach); ++qx) {
          if (!field.processed(qx, qy) || field.ambiguous(qx, qy)) continue;
          const auto r = field.residuals(qx, qy);
          for (std::size_t m = 0; m < m_count; ++m) pooled[m] += double(r[m]);
        }
      }

      std::size_t best = own.indices.front();
      for (std::uint16_t m : own.indices) {
        if (pooled[m] < pooled[best]) best = m;
      }
      std::size_t consensus = 0;
      for (std::size_t m = 1; m < m_count; ++m) {
        if (pooled[m] < pooled[consensus]) consensus = m;
      }

      const bool consistent = (best > consensus ? best - consensus : consensus - best) <= 1;
      chosen(x, y) = std::uint16_t(best);
      stage.sigma(x, y) = grid.sigmas[best];
      stage.residual(x, y) = double(field.residuals(x, y)[best]);
      stage.flags(x, y) = consistent ? kValid : kInconsistent;
    }
  });

  if (!options.median_pass) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (stage.valid(x, y) && chosen(x, y) == 0) stage.flags(x, y) |= kFloor;
      }
    }
    return stage;
  }

  BlurMap result = stage;
  parallel_rows(h, exec, [&](int y) {
    std::vector<std::uint16_t> window;
    window.reserve(9);
    for (int x = 0; x < w; ++x) {
      if (!stage.valid(x, y)) continue;
      window.clear();
      for (int qy = std::max(0, y - 1); qy <= std::min(h - 1, y + 1); ++qy) {
        for (int qx = std::max(0, x - 1); qx <= std::min(w - 1, x + 1); ++qx) {
          if (stage.valid(qx, qy)) window.push_back(chosen(qx, qy));
        }
      }
      std::sort(window.begin(), window.end());
      const std::uint16_t m = window[(window.size() - 1) / 2];
      result.sigma(x, y) = grid.sigmas[m];
      result.residual(x, y) = double(field.residuals(x, y)[m]);
      if (m == 0) result.flags(x, y) |= kFloor;
    }
  });
  return result;
}

BlurMap estimate_blur_map(const GrayImage& left, const GrayImage& right,
                          const WeightMatrix& weights, const QuadratureVector& quadrature,
                          const Mask* mask, const EstimationOptions& options) {
  const CandidateField field = compute_candidate_field(left, right, weights, quadrature, mask,
                                                       options.tie_tol, options.execution);
  return disambiguate(field, options.disambiguation, options.execution);
}

}  // namespace defocus
