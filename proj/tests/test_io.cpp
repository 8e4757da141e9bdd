#include <gtest/gtest.h>

#include <cmath>

#include "defocus/io.hpp"
#include "test_support.hpp"

namespace defocus {
namespace {

double luma(double r, double g, double b) { return (0.299 * r + 0.587 * g + 0.114 * b) / 255.0; }

TEST(LoadGray, RgbUsesLuma) {
  const GrayImage img = io::load_gray(data_path("rgb.png"));
  ASSERT_EQ(img.width(), 3);
  ASSERT_EQ(img.height(), 2);
  EXPECT_NEAR(img(0, 0), luma(255, 0, 0), 1e-9);
  EXPECT_NEAR(img(1, 0), luma(0, 255, 0), 1e-9);
  EXPECT_NEAR(img(2, 0), luma(0, 0, 255), 1e-9);
  EXPECT_NEAR(img(0, 1), 1.0, 1e-9);
  EXPECT_EQ(img(1, 1), 0.0);
  EXPECT_NEAR(img(2, 1), luma(10, 200, 40), 1e-9);
}

TEST(LoadGray, AlphaIgnored) {
  EXPECT_EQ(io::load_gray(data_path("rgba.png")), io::load_gray(data_path("rgb.png")));
}

TEST(LoadGray, SixteenBit) {
  const GrayImage img = io::load_gray(data_path("gray16.png"));
  EXPECT_EQ(img(0, 0), 1.0);
  EXPECT_EQ(img(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(img(0, 1), 32768.0 / 65535.0);
  EXPECT_DOUBLE_EQ(img(1, 1), 1.0 / 65535.0);
}

TEST(LoadGray, PgmAsciiAndBinary) {
  const auto ascii = temp_path("a.pgm");
  write_file(ascii, "P2\n# comment\n3 1\n255\n0 128 255\n");
  const GrayImage a = io::load_gray(ascii);
  EXPECT_EQ(a(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(a(1, 0), 128.0 / 255.0);
  EXPECT_EQ(a(2, 0), 1.0);
  const auto binary = temp_path("b.pgm");
  write_file(binary, std::string("P5\n2 1\n255\n") + char(255) + char(0));
  const GrayImage b = io::load_gray(binary);
  EXPECT_EQ(b(0, 0), 1.0);
  EXPECT_EQ(b(1, 0), 0.0);
}

TEST(LoadGray, Errors) {
  expect_error(ErrorCode::IoError, [] { io::load_gray(temp_path("missing.png")); });
  const auto bogus = temp_path("bogus.bmp");
  write_file(bogus, "BM not an image");
  expect_error(ErrorCode::UnsupportedFormat, [&] { io::load_gray(bogus); });
}

TEST(SaveGray, HalfRoundsUp) {
  const auto path = temp_path("half.png");
  io::save_gray(GrayImage(1, 1, 0.5), path);
  EXPECT_DOUBLE_EQ(io::load_gray(path)(0, 0), 128.0 / 255.0);
}

TEST(SaveGray, RoundTripWithinHalfStep) {
  const GrayImage img = random_image(37, 23, 3);
  for (const char* name : {"rt.png", "rt.pgm"}) {
    const auto path = temp_path(name);
    io::save_gray(img, path);
    const GrayImage back = io::load_gray(path);
    ASSERT_TRUE(back.same_shape(img));
    for (std::size_t i = 0; i < img.size(); ++i) {
      ASSERT_LE(std::abs(back.pixels()[i] - img.pixels()[i]), 1.0 / 510.0 + 1e-12);
    }
  }
}

TEST(SaveGray, RejectsOutOfRange) {
  GrayImage img(2, 2, 0.5);
  img(1, 1) = 1.01;
  expect_error(ErrorCode::InvalidParameter, [&] { io::save_gray(img, temp_path("bad.png")); });
  EXPECT_NO_THROW(io::save_gray_clamped(img, temp_path("clamped.png")));
  EXPECT_EQ(io::load_gray(temp_path("clamped.png"))(1, 1), 1.0);
  expect_error(ErrorCode::UnsupportedFormat,
               [] { io::save_gray(GrayImage(2, 2), temp_path("x.tiff")); });
}

TEST(BlurRaster, RoundTripWithNaN) {
  BlurMap blur(4, 3, 0.1, 5.0);
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 4; ++x) {
      blur.sigma(x, y) = 0.1 + 0.3 * (x + 4 * y);
      blur.flags(x, y) = (x + y) % 3 == 0 ? kTextureless : kValid;
    }
  }
  const auto path = temp_path("map.dfbm");
  io::save_blur_raster(blur, path);
  const Image<double> back = io::load_blur_raster(path);
  ASSERT_EQ(back.width(), 4);
  ASSERT_EQ(back.height(), 3);
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 4; ++x) {
      if (blur.flags(x, y) == kValid) {
        EXPECT_EQ(back(x, y), double(float(blur.sigma(x, y))));
      } else {
        EXPECT_TRUE(std::isnan(back(x, y)));
      }
    }
  }
  const auto bad = temp_path("bad.dfbm");
  write_file(bad, "NOPE");
  EXPECT_THROW(io::load_blur_raster(bad), Error);
}

TEST(BlurVisualization, LinearMapping) {
  BlurMap blur(3, 1, 1.0, 3.0);
  blur.sigma(0, 0) = 1.0;
  blur.sigma(1, 0) = 3.0;
  blur.sigma(2, 0) = 2.0;
  blur.flags(0, 0) = kValid;
  blur.flags(1, 0) = kValid;
  blur.flags(2, 0) = kInconsistent;
  const GrayImage v = io::blur_visualization(blur);
  EXPECT_EQ(v(0, 0), 0.0);
  EXPECT_EQ(v(1, 0), 1.0);
  EXPECT_EQ(v(2, 0), 0.0);
}

}  // namespace
}  // namespace defocus
