#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "defocus/image.hpp"

namespace defocus {

/// Upper bound of the normalized radial integral: the kernel is truncated at 5 sigma.
inline constexpr double kRadialUpperBound = 5.0;

/// Midpoint abscissae r_n of an N-point rule on (0, kRadialUpperBound], in units of sigma.
struct RadialGrid {
  std::vector<double> points;
  double upper = kRadialUpperBound;

  std::size_t size() const noexcept { return points.size(); }
  double spacing() const noexcept { return upper / double(points.size()); }
};

/// Uniformly spaced candidate blur scales, in pixel pitches.
struct SigmaGrid {
  std::vector<double> sigmas;

  std::size_t size() const noexcept { return sigmas.size(); }
  double front() const noexcept { return sigmas.front(); }
  double back() const noexcept { return sigmas.back(); }
  double spacing() const noexcept { return (back() - front()) / double(size() - 1); }
  /// Index of the grid value closest to `sigma` (ties resolve to the smaller index).
  std::size_t nearest_index(double sigma) const noexcept;
};

/// Quadrature weights F(r_n) = 5 r_n exp(-r_n^2 / 2) / N.
struct QuadratureVector {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  double sum() const noexcept;
};

RadialGrid make_radial_grid(int point_count);
SigmaGrid make_sigma_grid(int count, double sigma_min, double sigma_max);
QuadratureVector make_quadrature_vector(const RadialGrid& grid);

/// Smallest odd window side R_s >= 2 sigma_M r_N + 1.
int required_patch_side(const SigmaGrid& sigma_grid, const RadialGrid& radial_grid);

/// Dense column-major matrix, just enough for the vec/ivec reshapes of the framework.
class ColumnMajorMatrix {
 public:
  ColumnMajorMatrix() = default;
  ColumnMajorMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[c * rows_ + r]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[c * rows_ + r]; }
  std::span<const double> storage() const noexcept { return data_; }

  friend bool operator==(const ColumnMajorMatrix&, const ColumnMajorMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Stacks the columns of `m` into one vector.
std::vector<double> vec(const ColumnMajorMatrix& m);
/// Inverse of vec: lays `v` out column by column in a matrix with `rows` rows.
ColumnMajorMatrix ivec(std::span<const double> v, std::size_t rows);

/// Square odd-sided window of the L-Image centred on the pixel of interest.
class Patch {
 public:
  Patch() = default;
  explicit Patch(int side, double fill = 0.0);

  /// Window of side `side` around (cx, cy), replicate-padded at the image border.
  static Patch extract(const GrayImage& image, int cx, int cy, int side);

  int side() const noexcept { return side_; }
  int half() const noexcept { return (side_ - 1) / 2; }
  int center_x() const noexcept { return center_x_; }
  int center_y() const noexcept { return center_y_; }

  /// Offsets are relative to the window centre, +x right, +y down.
  double& at(int dx, int dy) noexcept { return pixels_[index(dx, dy)]; }
  double at(int dx, int dy) const noexcept { return pixels_[index(dx, dy)]; }

  /// Column-stacked pixels (element l = column * side + row).
  std::vector<double> vectorized() const;
  void vectorize_into(std::span<double> out) const;

 private:
  std::size_t index(int dx, int dy) const noexcept {
    return std::size_t(dy + half()) * std::size_t(side_) + std::size_t(dx + half());
  }

  int side_ = 0;
  int center_x_ = 0;
  int center_y_ = 0;
  std::vector<double> pixels_;
};

/// Predicted R-Image intensity at the patch centre for every grid sigma.
struct CandidateVector {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
};

/// Sparse (CSR) storage of the MN x R_s^2 weighting matrix.
///
/// Row (m, n) sits at index n * M + m, i.e. the ordering of vec() applied to the
/// M x N matrix of ring averages I_L(sigma_m r_n). Each row is a nonnegative
/// Gaussian-weighted estimator of the ring average at radius sigma_m r_n and
/// sums to one. The ring band of row (m, n) is chosen so that the quadrature
/// weights recombine the rows into the sum-normalized sampled Gaussian of
/// scale sigma_m truncated at radius r_N sigma_m.
class WeightMatrix {
 public:
  static constexpr std::size_t kDefaultEntryCap = 100'000'000;

  std::size_t rows() const noexcept { return row_offsets_.size() - 1; }
  std::size_t cols() const noexcept { return std::size_t(patch_side_) * std::size_t(patch_side_); }
  std::size_t nonzeros() const noexcept { return values_.size(); }
  int patch_side() const noexcept { return patch_side_; }
  const SigmaGrid& sigma_grid() const noexcept { return sigma_grid_; }
  const RadialGrid& radial_grid() const noexcept { return radial_grid_; }
  /// Factor each row was divided by so that it sums to one.
  std::span<const double> row_normalization() const noexcept { return row_normalization_; }

  std::size_t row_index(std::size_t m, std::size_t n) const noexcept {
    return n * sigma_grid_.size() + m;
  }
  std::span<const std::uint32_t> row_columns(std::size_t row) const noexcept;
  std::span<const double> row_values(std::size_t row) const noexcept;
  /// Entry (row, col), zero when not stored.
  double entry(std::size_t row, std::size_t col) const noexcept;

  /// y = W x, where x is a vectorized patch.
  void multiply(std::span<const double> x, std::span<double> y) const;

  /// Binary dump: "DFLW1" header followed by dense row-major float32 entries.
  void save(const std::filesystem::path& path) const;
  static WeightMatrix load(const std::filesystem::path& path);

  /// Exact CSR dump in double precision ("DFLS1"); used by the on-disk cache.
  void save_sparse(const std::filesystem::path& path) const;
  static WeightMatrix load_sparse(const std::filesystem::path& path);

 private:
  friend WeightMatrix build_weight_matrix(const SigmaGrid&, const RadialGrid&, std::size_t);

  int patch_side_ = 0;
  SigmaGrid sigma_grid_;
  RadialGrid radial_grid_;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<std::uint32_t> columns_;
  std::vector<double> values_;
  std::vector<double> row_normalization_;
};

/// Throws MemoryExceeded when M * N * R_s^2 exceeds `entry_cap`.
WeightMatrix build_weight_matrix(const SigmaGrid& sigma_grid, const RadialGrid& radial_grid,
                                 std::size_t entry_cap = WeightMatrix::kDefaultEntryCap);

/// Angular mean of the bilinearly interpolated patch on the circle of `radius`
/// pixels about the centre. Radius zero returns the centre pixel.
double radial_average(const Patch& patch, double radius);

/// Scratch buffers for allocation-free candidate evaluation.
struct FrameworkWorkspace {
  std::vector<double> patch_vector;
  std::vector<double> ring_averages;
};

/// M(sigma_m) = ivec(W vec(patch), M) F, divided by sum(F) so that the
/// truncated quadrature has unit DC gain.
CandidateVector forward_candidates(const Patch& patch, const WeightMatrix& weights,
                                   const QuadratureVector& quadrature);
void forward_candidates(std::span<const double> patch_vector, const WeightMatrix& weights,
                        const QuadratureVector& quadrature, FrameworkWorkspace& workspace,
                        std::span<double> out);

/// Sum-normalized circular Gaussian sampled on the pixel lattice and truncated
/// at radius 5 sigma. Weights are stored row-major over (2 radius + 1)^2 taps.
class SampledGaussian {
 public:
  explicit SampledGaussian(double sigma);

  double sigma() const noexcept { return sigma_; }
  int radius() const noexcept { return radius_; }
  int side() const noexcept { return 2 * radius_ + 1; }
  double weight(int dx, int dy) const noexcept {
    return weights_[std::size_t(dy + radius_) * std::size_t(side()) + std::size_t(dx + radius_)];
  }
  std::span<const double> weights() const noexcept { return weights_; }
  /// Sum of the un-normalized density 1/(2 pi sigma^2) exp(-r^2 / 2 sigma^2) inside the support.
  double raw_mass() const noexcept { return raw_mass_; }

  /// Weighted sum of `image` around (x, y) with replicate padding.
  double apply(const GrayImage& image, int x, int y) const noexcept;

 private:
  double sigma_;
  int radius_;
  double raw_mass_ = 0.0;
  std::vector<double> weights_;
};

/// Centre value of the patch convolved with SampledGaussian(sigma). Independent
/// of the weighting matrix; used to verify forward_candidates.
double direct_blur_oracle(const Patch& patch, double sigma);

/// Sum of the un-normalized sampled density over lattice points beyond radius 5 sigma.
double sampled_tail_mass(double sigma);

}  // namespace defocus
