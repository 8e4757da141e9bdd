#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "defocus/error.hpp"

namespace defocus {

/// Row-major 2D raster.
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, T fill = T{})
      : width_(width), height_(height), data_(checked_size(width, height), fill) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(int x, int y) noexcept { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const noexcept { return data_[index(x, y)]; }

  /// Replicate-padded read: coordinates outside the raster are clamped to the border.
  const T& clamped(int x, int y) const noexcept {
    return (*this)(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1));
  }

  std::span<T> pixels() noexcept { return data_; }
  std::span<const T> pixels() const noexcept { return data_; }
  std::span<T> row(int y) noexcept { return {data_.data() + index(0, y), std::size_t(width_)}; }
  std::span<const T> row(int y) const noexcept {
    return {data_.data() + index(0, y), std::size_t(width_)};
  }

  bool same_shape(int w, int h) const noexcept { return width_ == w && height_ == h; }
  template <typename U>
  bool same_shape(const Image<U>& other) const noexcept {
    return same_shape(other.width(), other.height());
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  static std::size_t checked_size(int width, int height) {
    if (width <= 0 || height <= 0) {
      throw Error(ErrorCode::InvalidParameter, "image dimensions must be positive");
    }
    return std::size_t(width) * std::size_t(height);
  }
  std::size_t index(int x, int y) const noexcept {
    return std::size_t(y) * std::size_t(width_) + std::size_t(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Intensities normalized to [0, 1].
using GrayImage = Image<double>;
/// Nonzero marks a pixel as selected.
using Mask = Image<std::uint8_t>;

template <typename A, typename B>
void require_same_shape(const Image<A>& a, const Image<B>& b, const char* what) {
  if (!a.same_shape(b)) {
    throw Error(ErrorCode::ShapeError, std::string(what) + ": image dimensions differ");
  }
}

inline std::size_t count_set(const Mask& mask) {
  return std::size_t(std::count_if(mask.pixels().begin(), mask.pixels().end(),
                                   [](std::uint8_t v) { return v != 0; }));
}

}  // namespace defocus
