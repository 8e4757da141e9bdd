#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "defocus/estimation.hpp"
#include "defocus/reconstruction.hpp"
#include "test_support.hpp"

namespace defocus {
namespace {

GrayImage uniform_blur(const GrayImage& img, double sigma) {
  return spatially_varying_gaussian(img, Image<double>(img.width(), img.height(), sigma));
}

TEST(MatchSigma, UniqueExactMatch) {
  const std::vector<double> c = {0.1, 0.2, 0.3, 0.4};
  const MatchCandidates m = match_sigma(c, 0.3);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m.indices[0], 2);
  EXPECT_EQ(m.residuals[0], 0.0);
}

TEST(MatchSigma, AllEqualCandidatesTie) {
  const std::vector<double> c(50, 0.5);
  const MatchCandidates m = match_sigma(c, 0.7);
  EXPECT_EQ(m.size(), 50u);
}

TEST(MatchSigma, TieToleranceWindow) {
  const std::vector<double> c = {0.50000, 0.50005, 0.50020, 0.49990};
  const MatchCandidates m = match_sigma(c, 0.5, 1e-4);
  EXPECT_EQ(m.indices, (std::vector<std::uint16_t>{0, 1, 3}));
  EXPECT_THROW(match_sigma(c, 0.5, -1.0), Error);
  EXPECT_THROW(match_sigma(std::span<const double>(), 0.5), Error);
}

TEST(MatchSigma, BlurredPatchPicksTrueSigma) {
  const auto& fw = default_framework();
  const GrayImage img = camera_crop(200, 200, 101, 101);
  const GrayImage r = uniform_blur(img, 1.5);
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> pos(10, 90);
  for (int trial = 0; trial < 10; ++trial) {
    const int x = pos(rng), y = pos(rng);
    const CandidateVector c =
        forward_candidates(Patch::extract(img, x, y, 51), fw.weights, fw.quadrature);
    const MatchCandidates m = match_sigma(c, r(x, y));
    const std::size_t truth = fw.sigma_grid.nearest_index(1.5);
    EXPECT_TRUE(std::ranges::find(m.indices, truth) != m.indices.end());
    if (m.size() == 1) EXPECT_LE(std::abs(int(m.indices[0]) - int(truth)), 1);
  }
}

TEST(CandidateField, OnGridSigmaIsAlwaysInTieSet) {
  const auto& fw = default_framework();
  const GrayImage img = camera_crop(100, 150, 64, 48);
  const GrayImage r = uniform_blur(img, 1.5);
  const CandidateField field = compute_candidate_field(img, r, fw.weights, fw.quadrature);
  const auto truth = std::uint16_t(fw.sigma_grid.nearest_index(1.5));
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const auto& m = field.matches(x, y);
      ASSERT_TRUE(std::ranges::find(m.indices, truth) != m.indices.end());
      if (m.size() == 1) ASSERT_EQ(m.indices[0], truth);
    }
  }
}

TEST(CandidateField, MaskMonotonicity) {
  const auto& fw = default_framework();
  const GrayImage img = camera_crop(300, 100, 40, 40);
  const GrayImage r = uniform_blur(img, 2.2);
  Mask mask(40, 40, 0);
  for (int y = 5; y < 30; ++y) {
    for (int x = 10; x < 25; ++x) mask(x, y) = 1;
  }
  const CandidateField full = compute_candidate_field(img, r, fw.weights, fw.quadrature);
  const CandidateField part = compute_candidate_field(img, r, fw.weights, fw.quadrature, &mask);
  for (int y = 0; y < 40; ++y) {
    for (int x = 0; x < 40; ++x) {
      ASSERT_EQ(part.processed(x, y), mask(x, y) != 0);
      if (!mask(x, y)) continue;
      ASSERT_EQ(part.matches(x, y).indices, full.matches(x, y).indices);
      ASSERT_TRUE(std::ranges::equal(part.residuals(x, y), full.residuals(x, y)));
    }
  }
}

TEST(CandidateField, InputContracts) {
  const auto& fw = default_framework();
  const GrayImage a(10, 10, 0.5);
  expect_error(ErrorCode::ShapeError, [&] {
    compute_candidate_field(a, GrayImage(10, 11, 0.5), fw.weights, fw.quadrature);
  });
  expect_error(ErrorCode::InvalidParameter, [&] {
    compute_candidate_field(a, GrayImage(10, 10, 1.5), fw.weights, fw.quadrature);
  });
  const Mask wrong(9, 10, 1);
  expect_error(ErrorCode::ShapeError,
               [&] { compute_candidate_field(a, a, fw.weights, fw.quadrature, &wrong); });
}

// Builds a field of singleton tie sets with V-shaped residual curves.
CandidateField singleton_field(const Image<int>& index, const SigmaGrid& grid) {
  CandidateField field(index.width(), index.height(), grid);
  std::vector<double> residuals(grid.size());
  for (int y = 0; y < index.height(); ++y) {
    for (int x = 0; x < index.width(); ++x) {
      const int k = index(x, y);
      for (std::size_t m = 0; m < grid.size(); ++m) residuals[m] = 0.01 * std::abs(int(m) - k);
      MatchCandidates mc;
      mc.indices = {std::uint16_t(k)};
      mc.residuals = {0.0};
      field.set(x, y, mc, residuals);
    }
  }
  return field;
}

TEST(Disambiguate, SingletonsPassThrough) {
  const SigmaGrid grid = make_sigma_grid(50, 0.1, 5.0);
  Image<int> index(20, 12);
  for (int y = 0; y < 12; ++y) {
    for (int x = 0; x < 20; ++x) index(x, y) = x < 10 ? 10 : 30;
  }
  const BlurMap blur = disambiguate(singleton_field(index, grid));
  for (int y = 0; y < 12; ++y) {
    for (int x = 0; x < 20; ++x) {
      ASSERT_TRUE(blur.valid(x, y));
      ASSERT_EQ(blur.sigma(x, y), grid.sigmas[std::size_t(index(x, y))]);
    }
  }
}

TEST(Disambiguate, TieResolvedByNeighbours) {
  const SigmaGrid grid = make_sigma_grid(50, 0.1, 5.0);
  Image<int> index(9, 9, 20);
  CandidateField field = singleton_field(index, grid);
  // Centre pixel matches sigma indices 5 and 21 equally well.
  std::vector<double> residuals(grid.size(), 0.5);
  residuals[5] = residuals[21] = 0.0;
  MatchCandidates tie;
  tie.indices = {5, 21};
  tie.residuals = {0.0, 0.0};
  field.set(4, 4, tie, residuals);
  const BlurMap blur = disambiguate(field, {5, false});
  EXPECT_TRUE(blur.valid(4, 4));
  EXPECT_EQ(blur.sigma(4, 4), grid.sigmas[21]);
}

TEST(Disambiguate, OutlierMarkedInconsistent) {
  const SigmaGrid grid = make_sigma_grid(50, 0.1, 5.0);
  Image<int> index(9, 9, 20);
  index(4, 4) = 40;
  const BlurMap blur = disambiguate(singleton_field(index, grid), {5, false});
  EXPECT_FALSE(blur.valid(4, 4));
  EXPECT_TRUE(blur.flags(4, 4) & kInconsistent);
  EXPECT_TRUE(blur.valid(3, 4));
}

TEST(Disambiguate, RejectsBadWindow) {
  const SigmaGrid grid = make_sigma_grid(5, 0.1, 5.0);
  CandidateField field(3, 3, grid);
  expect_error(ErrorCode::InvalidParameter, [&] { disambiguate(field, {4, true}); });
  expect_error(ErrorCode::InvalidParameter, [&] { disambiguate(field, {1, true}); });
}

TEST(EstimateBlurMap, TexturelessInteriorIsInvalid) {
  const auto& fw = default_framework();
  GrayImage img = random_image(160, 160, 5);
  for (int y = 30; y < 130; ++y) {
    for (int x = 30; x < 130; ++x) img(x, y) = 0.4;
  }
  const GrayImage r = uniform_blur(img, 2.0);
  const BlurMap blur = estimate_blur_map(img, r, fw.weights, fw.quadrature);
  for (int y = 55; y < 105; ++y) {
    for (int x = 55; x < 105; ++x) {
      ASSERT_FALSE(blur.valid(x, y));
      ASSERT_TRUE(blur.flags(x, y) & kTextureless);
    }
  }
  // The textured ring recovers sigma = 2.
  std::size_t hits = 0, valid = 0;
  for (int y = 0; y < 160; ++y) {
    for (int x = 0; x < 20; ++x) {
      if (!blur.valid(x, y)) continue;
      ++valid;
      if (std::abs(blur.sigma(x, y) - 2.0) < 1e-9) ++hits;
    }
  }
  ASSERT_GT(valid, 0u);
  EXPECT_GT(double(hits) / double(valid), 0.95);
}

TEST(EstimateBlurMap, IdenticalImagesSitOnFloor) {
  const auto& fw = default_framework();
  const GrayImage img = camera_crop(50, 50, 48, 40);
  const BlurMap blur = estimate_blur_map(img, img, fw.weights, fw.quadrature);
  std::size_t valid = 0;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (!blur.valid(x, y)) continue;
      ++valid;
      ASSERT_EQ(blur.sigma(x, y), fw.sigma_grid.front());
      ASSERT_TRUE(blur.flags(x, y) & kFloor);
      ASSERT_LT(blur.residual(x, y), 1e-6);
    }
  }
  EXPECT_GT(valid, 0u);
}

TEST(EstimateBlurMap, ResidualOptimalityBeforeMedian) {
  const auto& fw = default_framework();
  const GrayImage img = camera_crop(260, 300, 56, 40);
  const GrayImage r = uniform_blur(img, 1.23);
  const CandidateField field = compute_candidate_field(img, r, fw.weights, fw.quadrature);
  const BlurMap blur = disambiguate(field, {5, false});
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (!blur.valid(x, y)) continue;
      const auto res = field.residuals(x, y);
      const double best = *std::ranges::min_element(res);
      ASSERT_LE(blur.residual(x, y), best + kDefaultTieTolerance + 1e-7);
      ASSERT_GE(blur.residual(x, y), 0.0);
      ASSERT_GE(blur.sigma(x, y), fw.sigma_grid.front());
      ASSERT_LE(blur.sigma(x, y), fw.sigma_grid.back());
    }
  }
}

TEST(EstimateBlurMap, OffGridSigmaWithinOneStep) {
  const auto& fw = default_framework();
  const GrayImage img = camera_crop(260, 300, 56, 40);
  const GrayImage r = uniform_blur(img, 1.23);
  const BlurMap blur = estimate_blur_map(img, r, fw.weights, fw.quadrature);
  std::size_t valid = 0, within = 0;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (!blur.valid(x, y)) continue;
      ++valid;
      if (std::abs(blur.sigma(x, y) - 1.23) <= fw.sigma_grid.spacing() + 1e-9) ++within;
    }
  }
  ASSERT_GT(valid, img.size() / 2);
  EXPECT_GT(double(within) / double(valid), 0.95);
}

TEST(EstimateBlurMap, MaskRestrictsValidity) {
  const auto& fw = default_framework();
  const GrayImage img = camera_crop(120, 220, 48, 32);
  const GrayImage r = uniform_blur(img, 1.0);
  Mask mask(48, 32, 0);
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 20; ++x) mask(x, y) = 1;
  }
  const BlurMap blur = estimate_blur_map(img, r, fw.weights, fw.quadrature, &mask);
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 48; ++x) {
      if (mask(x, y)) continue;
      ASSERT_FALSE(blur.valid(x, y));
      ASSERT_EQ(blur.flags(x, y), kSkipped);
    }
  }
  EXPECT_GT(blur.coverage(), 0.0);
}

TEST(EstimateBlurMap, DeterministicAcrossWorkerCounts) {
  const auto& fw = default_framework();
  const GrayImage img = camera_crop(10, 300, 60, 44);
  Image<double> scale(60, 44);
  for (int y = 0; y < 44; ++y) {
    for (int x = 0; x < 60; ++x) scale(x, y) = 1.0 + double(y) / 43.0;
  }
  const GrayImage r = spatially_varying_gaussian(img, scale);
  EstimationOptions serial;
  serial.execution.workers = 1;
  const BlurMap a = estimate_blur_map(img, r, fw.weights, fw.quadrature, nullptr, serial);
  for (int workers : {2, 3, 8}) {
    EstimationOptions opts;
    opts.execution.workers = workers;
    const BlurMap b = estimate_blur_map(img, r, fw.weights, fw.quadrature, nullptr, opts);
    EXPECT_EQ(a.sigma, b.sigma);
    EXPECT_EQ(a.flags, b.flags);
    EXPECT_EQ(a.residual, b.residual);
  }
}

}  // namespace
}  // namespace defocus
