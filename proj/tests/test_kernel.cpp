#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "defocus/kernel.hpp"
#include "defocus/reference.hpp"
#include "test_support.hpp"

namespace defocus {
namespace {

TEST(RadialGrid, MidpointAbscissae) {
  const RadialGrid g = make_radial_grid(100);
  ASSERT_EQ(g.size(), 100u);
  EXPECT_NEAR(g.points.front(), 0.025, 1e-15);
  EXPECT_NEAR(g.points.back(), 4.975, 1e-12);
  for (int n = 1; n <= 100; ++n) {
    EXPECT_NEAR(g.points[std::size_t(n - 1)], 5.0 * (n - 0.5) / 100.0, 1e-12);
  }
  for (std::size_t n = 0; n + 1 < g.size(); ++n) {
    EXPECT_LT(std::abs(g.points[n + 1] - g.points[n] - 0.05), 1e-12);
  }
  EXPECT_LE(g.points.back(), 5.0);
}

TEST(RadialGrid, TwoPoints) {
  const RadialGrid g = make_radial_grid(2);
  ASSERT_EQ(g.size(), 2u);
  EXPECT_DOUBLE_EQ(g.points[0], 1.25);
  EXPECT_DOUBLE_EQ(g.points[1], 3.75);
}

TEST(RadialGrid, RejectsTooFewPoints) {
  EXPECT_THROW(make_radial_grid(1), Error);
  EXPECT_THROW(make_radial_grid(0), Error);
}

TEST(SigmaGrid, DefaultRange) {
  const SigmaGrid g = make_sigma_grid(50, 0.1, 5.0);
  ASSERT_EQ(g.size(), 50u);
  EXPECT_DOUBLE_EQ(g.front(), 0.1);
  EXPECT_DOUBLE_EQ(g.back(), 5.0);
  EXPECT_NEAR(g.spacing(), 0.1, 1e-12);
  for (std::size_t m = 0; m + 1 < g.size(); ++m) EXPECT_GT(g.sigmas[m + 1], g.sigmas[m]);
}

TEST(SigmaGrid, EndpointsOnly) {
  const SigmaGrid g = make_sigma_grid(2, 1.0, 2.0);
  EXPECT_EQ(g.sigmas, (std::vector<double>{1.0, 2.0}));
}

TEST(SigmaGrid, RejectsInvalidRanges) {
  expect_error(ErrorCode::InvalidParameter, [] { make_sigma_grid(11, 0.0, 1.0); });
  expect_error(ErrorCode::InvalidParameter, [] { make_sigma_grid(11, 2.0, 1.0); });
  expect_error(ErrorCode::InvalidParameter, [] { make_sigma_grid(1, 0.1, 1.0); });
}

TEST(SigmaGrid, NearestIndex) {
  const SigmaGrid g = make_sigma_grid(50, 0.1, 5.0);
  EXPECT_EQ(g.nearest_index(1.5), 14u);
  EXPECT_EQ(g.nearest_index(0.0), 0u);
  EXPECT_EQ(g.nearest_index(9.0), 49u);
}

TEST(Quadrature, SumMatchesIntegral) {
  const QuadratureVector f = make_quadrature_vector(make_radial_grid(100));
  // Independent check: adaptive Simpson of r exp(-r^2/2) on [0, 5].
  auto integrand = [](double r) { return r * std::exp(-r * r / 2.0); };
  double integral = 0.0;
  const int pieces = 20000;
  const double h = 5.0 / pieces;
  for (int i = 0; i < pieces; ++i) {
    const double a = i * h;
    integral += h / 6.0 * (integrand(a) + 4.0 * integrand(a + h / 2.0) + integrand(a + h));
  }
  EXPECT_NEAR(integral, 1.0 - std::exp(-12.5), 1e-12);
  EXPECT_NEAR(f.sum(), integral, 1e-3);
  // The midpoint rule overshoots 1 - e^-12.5 by about 1e-4; the slack allowed
  // for the quadrature is 1e-3.
  EXPECT_GE(f.sum(), 0.95);
  EXPECT_LE(f.sum(), 1.0 + 1e-3);
}

TEST(Quadrature, EntriesFollowFormula) {
  const RadialGrid g = make_radial_grid(100);
  const QuadratureVector f = make_quadrature_vector(g);
  std::size_t peak = 0;
  for (std::size_t n = 0; n < f.size(); ++n) {
    EXPECT_GE(f.values[n], 0.0);
    if (f.values[n] > f.values[peak]) peak = n;
  }
  EXPECT_NEAR(g.points[peak], 1.0, 0.05);
  // r_60 = 2.975
  EXPECT_NEAR(g.points[59], 2.975, 1e-12);
  EXPECT_DOUBLE_EQ(f.values[59], 5.0 * 2.975 * std::exp(-2.975 * 2.975 / 2.0) / 100.0);
}

TEST(PatchSide, Examples) {
  EXPECT_EQ(required_patch_side(make_sigma_grid(50, 0.1, 5.0), make_radial_grid(100)), 51);
  // Fixed upper bound r_N = 5, so sigma_M = 0.5 gives 2 * 0.5 * 5 + 1 = 6, next odd 7.
  EXPECT_EQ(required_patch_side(make_sigma_grid(2, 0.1, 0.5), make_radial_grid(10)), 7);
}

TEST(VecIvec, IdentityOnMatrices) {
  ColumnMajorMatrix m(50, 100);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t c = 0; c < m.cols(); ++c) {
    for (std::size_t r = 0; r < m.rows(); ++r) m(r, c) = u(rng);
  }
  const std::vector<double> v = vec(m);
  ASSERT_EQ(v.size(), 5000u);
  EXPECT_EQ(v[3 * 50 + 7], m(7, 3));
  EXPECT_EQ(ivec(v, 50), m);
}

TEST(VecIvec, RejectsIndivisibleLength) {
  const std::vector<double> v(10, 0.0);
  expect_error(ErrorCode::ShapeError, [&] { ivec(v, 3); });
}

TEST(Patch, ReplicatePaddingAtBorder) {
  GrayImage img(4, 3);
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 4; ++x) img(x, y) = 0.1 * x + 0.01 * y;
  }
  const Patch p = Patch::extract(img, 0, 0, 5);
  EXPECT_EQ(p.at(-2, -2), img(0, 0));
  EXPECT_EQ(p.at(2, -1), img(2, 0));
  EXPECT_EQ(p.at(1, 2), img(1, 2));
  const auto v = p.vectorized();
  // Column-stacking: element col * side + row.
  EXPECT_EQ(v[4 * 5 + 0], p.at(2, -2));
  EXPECT_EQ(v[0 * 5 + 4], p.at(-2, 2));
}

class WeightMatrixTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { framework_ = &default_framework(); }
  static const TestFramework* framework_;
};
const TestFramework* WeightMatrixTest::framework_ = nullptr;

TEST_F(WeightMatrixTest, Shape) {
  const WeightMatrix& w = framework_->weights;
  EXPECT_EQ(w.rows(), 5000u);
  EXPECT_EQ(w.cols(), 2601u);
  EXPECT_EQ(w.patch_side(), 51);
  EXPECT_GT(w.nonzeros(), 0u);
}

TEST_F(WeightMatrixTest, RowsAreNonnegativeAndSumToOne) {
  const WeightMatrix& w = framework_->weights;
  for (std::size_t row = 0; row < w.rows(); ++row) {
    const auto values = w.row_values(row);
    ASSERT_FALSE(values.empty()) << "row " << row;
    double sum = 0.0;
    for (double v : values) {
      ASSERT_GE(v, 0.0);
      sum += v;
    }
    ASSERT_NEAR(sum, 1.0, 1e-9) << "row " << row;
  }
}

TEST_F(WeightMatrixTest, RowOnConstantPatchGivesConstant) {
  const WeightMatrix& w = framework_->weights;
  const std::vector<double> x(w.cols(), 0.37);
  std::vector<double> y(w.rows());
  w.multiply(x, y);
  for (double v : y) ASSERT_NEAR(v, 0.37, 1e-12);
}

TEST_F(WeightMatrixTest, RowsRecombineIntoSampledGaussian) {
  // sum_n F_n / sum(F) W_(m,n),l equals the normalized sampled Gaussian tap at l.
  const WeightMatrix& w = framework_->weights;
  const QuadratureVector& f = framework_->quadrature;
  const int side = w.patch_side();
  const int half = side / 2;
  for (std::size_t m : {0u, 7u, 14u, 31u, 49u}) {
    const SampledGaussian g(w.sigma_grid().sigmas[m]);
    std::vector<double> combined(w.cols(), 0.0);
    for (std::size_t n = 0; n < f.size(); ++n) {
      const auto cols = w.row_columns(w.row_index(m, n));
      const auto vals = w.row_values(w.row_index(m, n));
      for (std::size_t k = 0; k < cols.size(); ++k) combined[cols[k]] += f.values[n] * vals[k];
    }
    for (int dx = -half; dx <= half; ++dx) {
      for (int dy = -half; dy <= half; ++dy) {
        const std::size_t l = std::size_t(dx + half) * std::size_t(side) + std::size_t(dy + half);
        const double expected =
            std::abs(dx) <= g.radius() && std::abs(dy) <= g.radius() ? g.weight(dx, dy) : 0.0;
        ASSERT_NEAR(combined[l] / f.sum(), expected, 1e-12) << "m=" << m;
      }
    }
  }
}

TEST(WeightMatrixBuild, SmallGridsHaveNoEmptyRows) {
  const WeightMatrix w = build_weight_matrix(make_sigma_grid(5, 0.1, 0.5), make_radial_grid(20));
  EXPECT_EQ(w.patch_side(), 7);
  for (std::size_t row = 0; row < w.rows(); ++row) EXPECT_FALSE(w.row_values(row).empty());
}

TEST(WeightMatrixBuild, MemoryCap) {
  expect_error(ErrorCode::MemoryExceeded, [] {
    build_weight_matrix(make_sigma_grid(50, 0.1, 5.0), make_radial_grid(100), 1000);
  });
}

TEST_F(WeightMatrixTest, DenseDumpRoundTrip) {
  const WeightMatrix& w = framework_->weights;
  const auto path = temp_path("w.dflw");
  w.save(path);
  const WeightMatrix loaded = WeightMatrix::load(path);
  ASSERT_EQ(loaded.rows(), w.rows());
  ASSERT_EQ(loaded.patch_side(), w.patch_side());
  for (std::size_t row = 0; row < w.rows(); row += 37) {
    const auto cols = w.row_columns(row);
    const auto vals = w.row_values(row);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      EXPECT_NEAR(loaded.entry(row, cols[k]), vals[k], 1e-7 * vals[k] + 1e-12);
    }
  }
  std::filesystem::remove(path);
}

TEST_F(WeightMatrixTest, SparseDumpIsExact) {
  const WeightMatrix& w = framework_->weights;
  const auto path = temp_path("w.dfls");
  w.save_sparse(path);
  const WeightMatrix loaded = WeightMatrix::load_sparse(path);
  ASSERT_EQ(loaded.nonzeros(), w.nonzeros());
  for (std::size_t row = 0; row < w.rows(); ++row) {
    ASSERT_TRUE(std::ranges::equal(loaded.row_columns(row), w.row_columns(row)));
    ASSERT_TRUE(std::ranges::equal(loaded.row_values(row), w.row_values(row)));
  }
  std::filesystem::remove(path);
}

TEST(WeightMatrixLoad, RejectsForeignFiles) {
  const auto path = temp_path("not_w.bin");
  write_file(path, "hello world, not a matrix");
  expect_error(ErrorCode::UnsupportedFormat, [&] { WeightMatrix::load(path); });
  expect_error(ErrorCode::UnsupportedFormat, [&] { WeightMatrix::load_sparse(path); });
  std::filesystem::remove(path);
}

TEST(RadialAverage, ConstantPatch) {
  Patch p(51, 0.42);
  for (double r : {0.0, 0.3, 1.0, 7.5, 25.0}) EXPECT_NEAR(radial_average(p, r), 0.42, 1e-12);
}

TEST(RadialAverage, RadiusZeroIsCentre) {
  Patch p(11, 0.0);
  p.at(0, 0) = 0.9;
  EXPECT_EQ(radial_average(p, 0.0), 0.9);
}

TEST(RadialAverage, LinearRampAveragesToCentre) {
  Patch p(11);
  for (int dy = -5; dy <= 5; ++dy) {
    for (int dx = -5; dx <= 5; ++dx) p.at(dx, dy) = 0.5 + 0.01 * dx;
  }
  EXPECT_NEAR(radial_average(p, 3.0), 0.5, 1e-12);
}

TEST(RadialAverage, OutOfSupport) {
  Patch p(11);
  expect_error(ErrorCode::OutOfSupport, [&] { radial_average(p, 5.5); });
}

TEST_F(WeightMatrixTest, ConstantPatchCandidates) {
  const Patch p(51, 0.8);
  const CandidateVector c = forward_candidates(p, framework_->weights, framework_->quadrature);
  ASSERT_EQ(c.size(), 50u);
  for (double v : c.values) EXPECT_NEAR(v, 0.8, 1e-6);
}

TEST_F(WeightMatrixTest, BlurredImpulseMatchesOracleAtTrueSigma) {
  // Centre patch of an impulse blurred with sigma* = 2, then candidates.
  GrayImage img(101, 101, 0.0);
  img(50, 50) = 1.0;
  const SampledGaussian g(2.0);
  GrayImage blurred(101, 101);
  for (int y = 0; y < 101; ++y) {
    for (int x = 0; x < 101; ++x) blurred(x, y) = g.apply(img, x, y);
  }
  const Patch p = Patch::extract(blurred, 50, 50, 51);
  const CandidateVector c = forward_candidates(p, framework_->weights, framework_->quadrature);
  const std::size_t m = framework_->weights.sigma_grid().nearest_index(2.0);
  EXPECT_NEAR(c.values[m], direct_blur_oracle(p, 2.0), 1e-3);
}

TEST_F(WeightMatrixTest, ImpulseCandidatesDecreaseWithSigma) {
  Patch p(51, 0.0);
  p.at(0, 0) = 1.0;
  const CandidateVector c = forward_candidates(p, framework_->weights, framework_->quadrature);
  for (std::size_t m = 0; m + 1 < c.size(); ++m) EXPECT_GT(c.values[m], c.values[m + 1]);
}

TEST_F(WeightMatrixTest, SideMismatchIsShapeError) {
  const Patch p(49, 0.5);
  expect_error(ErrorCode::ShapeError,
               [&] { forward_candidates(p, framework_->weights, framework_->quadrature); });
}

TEST_F(WeightMatrixTest, MatchesDenseReferenceAndOracle) {
  std::mt19937 rng(11);
  const GrayImage& img = camera_image();
  std::uniform_int_distribution<int> px(0, img.width() - 1), py(0, img.height() - 1);
  for (int trial = 0; trial < 5; ++trial) {
    const Patch p = Patch::extract(img, px(rng), py(rng), 51);
    const CandidateVector fast = forward_candidates(p, framework_->weights, framework_->quadrature);
    const CandidateVector dense =
        reference::forward_candidates(p, framework_->weights, framework_->quadrature);
    for (std::size_t m = 0; m < fast.size(); ++m) {
      ASSERT_NEAR(fast.values[m], dense.values[m], 1e-12);
      ASSERT_NEAR(fast.values[m], direct_blur_oracle(p, framework_->weights.sigma_grid().sigmas[m]),
                  1e-3);
    }
  }
}

TEST(SampledGaussian, NormalizedAndSymmetric) {
  for (double s : {0.1, 0.5, 1.0, 2.3, 5.0}) {
    const SampledGaussian g(s);
    EXPECT_EQ(g.radius(), int(std::floor(5.0 * s)));
    double sum = 0.0;
    for (double w : g.weights()) sum += w;
    EXPECT_NEAR(sum, 1.0, 1e-12);
    for (int d = 0; d <= g.radius(); ++d) {
      EXPECT_EQ(g.weight(d, 0), g.weight(-d, 0));
      EXPECT_EQ(g.weight(0, d), g.weight(d, 0));
    }
  }
  expect_error(ErrorCode::InvalidParameter, [] { SampledGaussian g(0.0); });
}

TEST(Oracle, ConstantPatch) {
  const Patch p(51, 0.25);
  for (double s : {0.1, 1.0, 5.0}) EXPECT_NEAR(direct_blur_oracle(p, s), 0.25, 1e-12);
}

TEST(Oracle, ImpulseGivesCentreTap) {
  Patch p(11, 0.0);
  p.at(0, 0) = 1.0;
  const SampledGaussian g(1.0);
  EXPECT_DOUBLE_EQ(direct_blur_oracle(p, 1.0), g.weight(0, 0));
  // Close to the continuous peak 1 / (2 pi) up to the lattice normalization.
  EXPECT_NEAR(g.weight(0, 0), 1.0 / (2.0 * std::numbers::pi), 2e-3);
}

TEST(Oracle, TinySigmaIsNearDelta) {
  const Patch p = Patch::extract(camera_image(), 100, 100, 11);
  EXPECT_NEAR(direct_blur_oracle(p, 0.1), p.at(0, 0), 1e-3);
}

TEST(Oracle, OutOfSupport) {
  const Patch p(11, 0.5);
  expect_error(ErrorCode::OutOfSupport, [&] { direct_blur_oracle(p, 1.5); });
}

}  // namespace
}  // namespace defocus
