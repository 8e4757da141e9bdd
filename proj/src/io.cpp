#include "defocus/io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace defocus::io {

namespace {

constexpr std::array<char, 8> kBlurMagic = {'D', 'F', 'B', 'M', '1', 0, 0, 0};

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return f;
}

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return char(std::tolower(c)); });
  return ext;
}

double luma(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

GrayImage read_png(const std::filesystem::path& path) {
  FilePtr file = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::IoError, "libpng initialization failed");
  }
  // libpng reports errors by longjmp: objects with destructors must exist before setjmp.
  std::vector<std::vector<png_byte>> rows;
  std::vector<png_bytep> pointers;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::UnsupportedFormat, "failed to decode PNG " + path.string());
  }
  png_init_io(png, file.get());
  png_read_info(png, info);

  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const auto width = png_get_image_width(png, info);
  const auto height = png_get_image_height(png, info);
  const int channels = png_get_channels(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  const std::size_t row_bytes = png_get_rowbytes(png, info);

  rows.assign(height, std::vector<png_byte>(row_bytes));
  pointers.resize(height);
  for (std::size_t y = 0; y < height; ++y) pointers[y] = rows[y].data();
  png_read_image(png, pointers.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const double max_code = bit_depth == 16 ? 65535.0 : 255.0;
  auto sample = [&](const std::vector<png_byte>& row, std::size_t index) {
    if (bit_depth == 16) return double((row[2 * index] << 8) | row[2 * index + 1]) / max_code;
    return double(row[index]) / max_code;
  };

  GrayImage image{int(width), int(height)};
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const std::size_t base = x * std::size_t(channels);
      image(int(x), int(y)) =
          channels >= 3
              ? luma(sample(rows[y], base), sample(rows[y], base + 1), sample(rows[y], base + 2))
              : sample(rows[y], base);
    }
  }
  return image;
}

void write_png(const std::vector<std::uint8_t>& codes, int width, int height,
               const std::filesystem::path& path) {
  FilePtr file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::IoError, "libpng initialization failed");
  }
  std::vector<png_bytep> pointers(static_cast<std::size_t>(height));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::IoError, "failed to encode PNG " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, png_uint_32(width), png_uint_32(height), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    pointers[std::size_t(y)] =
        const_cast<png_bytep>(codes.data() + std::size_t(y) * std::size_t(width));
  }
  png_write_image(png, pointers.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// Reads the next whitespace-separated PGM header token, skipping comments.
std::string pgm_token(std::istream& in) {
  std::string token;
  while (in) {
    const int c = in.get();
    if (c == '#') {
      std::string ignored;
      std::getline(in, ignored);
    } else if (std::isspace(c)) {
      if (!token.empty()) break;
    } else if (c != EOF) {
      token.push_back(char(c));
    }
  }
  return token;
}

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  const std::string magic = pgm_token(in);
  if (magic != "P5" && magic != "P2") {
    throw Error(ErrorCode::UnsupportedFormat, path.string() + " is not a PGM file");
  }
  int width = 0, height = 0, max_code = 0;
  try {
    width = std::stoi(pgm_token(in));
    height = std::stoi(pgm_token(in));
    max_code = std::stoi(pgm_token(in));
  } catch (const std::exception&) {
    throw Error(ErrorCode::UnsupportedFormat, "malformed PGM header in " + path.string());
  }
  if (width <= 0 || height <= 0 || max_code <= 0 || max_code > 65535) {
    throw Error(ErrorCode::UnsupportedFormat, "malformed PGM header in " + path.string());
  }
  GrayImage image(width, height);
  for (double& v : image.pixels()) {
    unsigned code = 0;
    if (magic == "P2") {
      const std::string token = pgm_token(in);
      if (token.empty()) throw Error(ErrorCode::IoError, "truncated PGM " + path.string());
      code = unsigned(std::stoul(token));
    } else if (max_code < 256) {
      code = unsigned(in.get());
    } else {
      const int hi = in.get();
      code = (unsigned(hi) << 8) | unsigned(in.get());
    }
    if (!in && magic == "P5") throw Error(ErrorCode::IoError, "truncated PGM " + path.string());
    v = double(code) / double(max_code);
  }
  return image;
}

std::vector<std::uint8_t> quantize(const GrayImage& image) {
  std::vector<std::uint8_t> codes(image.size());
  const auto px = image.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (!(px[i] >= 0.0 && px[i] <= 1.0)) {
      throw Error(ErrorCode::InvalidParameter, "intensity outside [0, 1] cannot be saved");
    }
    codes[i] = std::uint8_t(std::floor(px[i] * 255.0 + 0.5));
  }
  return codes;
}

template <typename T>
void write_le(std::ostream& out, T value) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

}  // namespace

GrayImage load_gray(const std::filesystem::path& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::array<unsigned char, 8> head{};
  probe.read(reinterpret_cast<char*>(head.data()), head.size());
  probe.close();
  if (png_sig_cmp(head.data(), 0, head.size()) == 0) return read_png(path);
  if (head[0] == 'P' && (head[1] == '5' || head[1] == '2')) return read_pgm(path);
  throw Error(ErrorCode::UnsupportedFormat, path.string() + ": expected PNG or PGM");
}

void save_gray(const GrayImage& image, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> codes = quantize(image);
  const std::string ext = lower_extension(path);
  if (ext == ".png") {
    write_png(codes, image.width(), image.height(), path);
  } else if (ext == ".pgm") {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    out << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(codes.data()), std::streamsize(codes.size()));
    if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
  } else {
    throw Error(ErrorCode::UnsupportedFormat, "output must be .png or .pgm: " + path.string());
  }
}

void save_gray_clamped(const GrayImage& image, const std::filesystem::path& path) {
  GrayImage clamped = image;
  for (double& v : clamped.pixels()) v = std::clamp(v, 0.0, 1.0);
  save_gray(clamped, path);
}

void save_blur_raster(const BlurMap& blur, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out.write(kBlurMagic.data(), kBlurMagic.size());
  write_le<std::uint32_t>(out, std::uint32_t(blur.width()));
  write_le<std::uint32_t>(out, std::uint32_t(blur.height()));
  for (int y = 0; y < blur.height(); ++y) {
    for (int x = 0; x < blur.width(); ++x) {
      const float v = blur.valid(x, y) ? float(blur.sigma(x, y))
                                       : std::numeric_limits<float>::quiet_NaN();
      write_le<float>(out, v);
    }
  }
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

Image<double> load_blur_raster(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::array<char, 8> magic{};
  std::uint32_t width = 0, height = 0;
  in.read(magic.data(), magic.size());
  in.read(reinterpret_cast<char*>(&width), sizeof(width));
  in.read(reinterpret_cast<char*>(&height), sizeof(height));
  if (!in || magic != kBlurMagic) {
    throw Error(ErrorCode::UnsupportedFormat, path.string() + " is not a blur map raster");
  }
  Image<double> sigma{int(width), int(height)};
  std::vector<float> row(width);
  for (std::uint32_t y = 0; y < height; ++y) {
    in.read(reinterpret_cast<char*>(row.data()), std::streamsize(width * sizeof(float)));
    if (!in) throw Error(ErrorCode::IoError, "truncated blur map raster " + path.string());
    for (std::uint32_t x = 0; x < width; ++x) sigma(int(x), int(y)) = double(row[x]);
  }
  return sigma;
}

GrayImage blur_visualization(const BlurMap& blur) {
  GrayImage vis(blur.width(), blur.height(), 0.0);
  const double span = blur.sigma_max - blur.sigma_min;
  for (int y = 0; y < blur.height(); ++y) {
    for (int x = 0; x < blur.width(); ++x) {
      if (!blur.valid(x, y)) continue;
      vis(x, y) = std::clamp((blur.sigma(x, y) - blur.sigma_min) / span, 0.0, 1.0);
    }
  }
  return vis;
}

}  // namespace defocus::io
