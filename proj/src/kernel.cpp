#include "defocus/kernel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

namespace defocus {

namespace {

constexpr char kWeightMagic[8] = {'D', 'F', 'L', 'W', '1', 0, 0, 0};
constexpr char kSparseMagic[8] = {'D', 'F', 'L', 'S', '1', 0, 0, 0};

// Lattice points with r^2 <= (5 sigma)^2 belong to the kernel support. Shared
// by the sampled Gaussian and the weighting matrix so both see the same disc.
double support_radius_squared(double sigma) {
  const double r = kRadialUpperBound * sigma;
  return r * r;
}

int support_radius(double sigma) {
  return int(std::floor(kRadialUpperBound * sigma));
}

template <typename T>
void write_le(std::ostream& out, T value) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw Error(ErrorCode::IoError, "truncated weight matrix file");
  return value;
}

}  // namespace

std::size_t SigmaGrid::nearest_index(double sigma) const noexcept {
  std::size_t best = 0;
  for (std::size_t m = 1; m < sigmas.size(); ++m) {
    if (std::abs(sigmas[m] - sigma) < std::abs(sigmas[best] - sigma)) best = m;
  }
  return best;
}

double QuadratureVector::sum() const noexcept {
  return std::accumulate(values.begin(), values.end(), 0.0);
}

RadialGrid make_radial_grid(int point_count) {
  if (point_count < 2) {
    throw Error(ErrorCode::InvalidParameter, "radial grid needs at least 2 points");
  }
  RadialGrid grid;
  grid.points.resize(std::size_t(point_count));
  const double step = grid.upper / double(point_count);
  for (int n = 0; n < point_count; ++n) {
    grid.points[std::size_t(n)] = (double(n) + 0.5) * step;
  }
  return grid;
}

SigmaGrid make_sigma_grid(int count, double sigma_min, double sigma_max) {
  if (count < 2) throw Error(ErrorCode::InvalidParameter, "sigma grid needs at least 2 values");
  if (!(sigma_min > 0.0) || !(sigma_min < sigma_max) || !std::isfinite(sigma_max)) {
    throw Error(ErrorCode::InvalidParameter, "sigma grid requires 0 < sigma_min < sigma_max");
  }
  SigmaGrid grid;
  grid.sigmas.resize(std::size_t(count));
  const double step = (sigma_max - sigma_min) / double(count - 1);
  for (int m = 0; m < count; ++m) {
    grid.sigmas[std::size_t(m)] = sigma_min + double(m) * step;
  }
  grid.sigmas.back() = sigma_max;
  return grid;
}

QuadratureVector make_quadrature_vector(const RadialGrid& grid) {
  if (grid.size() < 2) throw Error(ErrorCode::InvalidParameter, "invalid radial grid");
  QuadratureVector q;
  q.values.reserve(grid.size());
  const double n = double(grid.size());
  for (double r : grid.points) {
    q.values.push_back(5.0 * r * std::exp(-0.5 * r * r) / n);
  }
  return q;
}

int required_patch_side(const SigmaGrid& sigma_grid, const RadialGrid& radial_grid) {
  const double extent = 2.0 * sigma_grid.back() * radial_grid.upper;
  // Tolerate representation noise such as 2 * 0.5 * 5 = 5.000000000000001.
  int side = int(std::ceil(extent - 1e-9)) + 1;
  if (side % 2 == 0) ++side;
  return side;
}

std::vector<double> vec(const ColumnMajorMatrix& m) {
  return {m.storage().begin(), m.storage().end()};
}

ColumnMajorMatrix ivec(std::span<const double> v, std::size_t rows) {
  if (rows == 0 || v.size() % rows != 0) {
    throw Error(ErrorCode::ShapeError, "ivec: vector length is not a multiple of the row count");
  }
  ColumnMajorMatrix m(rows, v.size() / rows);
  for (std::size_t i = 0; i < v.size(); ++i) m(i % rows, i / rows) = v[i];
  return m;
}

Patch::Patch(int side, double fill) : side_(side) {
  if (side <= 0 || side % 2 == 0) {
    throw Error(ErrorCode::InvalidParameter, "patch side must be a positive odd integer");
  }
  pixels_.assign(std::size_t(side) * std::size_t(side), fill);
}

Patch Patch::extract(const GrayImage& image, int cx, int cy, int side) {
  Patch patch(side);
  patch.center_x_ = cx;
  patch.center_y_ = cy;
  const int h = patch.half();
  for (int dy = -h; dy <= h; ++dy) {
    for (int dx = -h; dx <= h; ++dx) patch.at(dx, dy) = image.clamped(cx + dx, cy + dy);
  }
  return patch;
}

std::vector<double> Patch::vectorized() const {
  std::vector<double> out(pixels_.size());
  vectorize_into(out);
  return out;
}

void Patch::vectorize_into(std::span<double> out) const {
  const std::size_t s = std::size_t(side_);
  for (std::size_t col = 0; col < s; ++col) {
    for (std::size_t row = 0; row < s; ++row) out[col * s + row] = pixels_[row * s + col];
  }
}

std::span<const std::uint32_t> WeightMatrix::row_columns(std::size_t row) const noexcept {
  return std::span(columns_).subspan(row_offsets_[row], row_offsets_[row + 1] - row_offsets_[row]);
}

std::span<const double> WeightMatrix::row_values(std::size_t row) const noexcept {
  return std::span(values_).subspan(row_offsets_[row], row_offsets_[row + 1] - row_offsets_[row]);
}

double WeightMatrix::entry(std::size_t row, std::size_t col) const noexcept {
  const auto cols = row_columns(row);
  const auto it = std::lower_bound(cols.begin(), cols.end(), std::uint32_t(col));
  if (it == cols.end() || *it != col) return 0.0;
  return row_values(row)[std::size_t(it - cols.begin())];
}

void WeightMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != cols() || y.size() != rows()) {
    throw Error(ErrorCode::ShapeError, "weight matrix product: dimension mismatch");
  }
  for (std::size_t row = 0; row < rows(); ++row) {
    double acc = 0.0;
    for (std::size_t k = row_offsets_[row]; k < row_offsets_[row + 1]; ++k) {
      acc += values_[k] * x[columns_[k]];
    }
    y[row] = acc;
  }
}

WeightMatrix build_weight_matrix(const SigmaGrid& sigma_grid, const RadialGrid& radial_grid,
                                 std::size_t entry_cap) {
  if (sigma_grid.size() < 2 || radial_grid.size() < 2) {
    throw Error(ErrorCode::InvalidParameter, "invalid grids");
  }
  WeightMatrix w;
  w.sigma_grid_ = sigma_grid;
  w.radial_grid_ = radial_grid;
  w.patch_side_ = required_patch_side(sigma_grid, radial_grid);

  const std::size_t m_count = sigma_grid.size();
  const std::size_t n_count = radial_grid.size();
  const double dense_entries =
      double(m_count) * double(n_count) * double(w.patch_side_) * double(w.patch_side_);
  if (dense_entries > double(entry_cap)) {
    throw Error(ErrorCode::MemoryExceeded, "weighting matrix exceeds the configured entry cap");
  }

  // Band edges in cumulative quadrature mass; band n spans [edges[n], edges[n+1]).
  const QuadratureVector quadrature = make_quadrature_vector(radial_grid);
  const double quadrature_sum = quadrature.sum();
  std::vector<double> edges(n_count + 1, 0.0);
  for (std::size_t n = 0; n < n_count; ++n) {
    edges[n + 1] = edges[n] + quadrature.values[n] / quadrature_sum;
  }
  edges.back() = 1.0;

  const int side = w.patch_side_;
  const int half = (side - 1) / 2;

  struct Entry {
    std::uint32_t column;
    double value;
  };
  // Indexed n * M + m, the order of vec() on the M x N ring-average matrix.
  std::vector<std::vector<Entry>> rows(m_count * n_count);
  std::vector<double> norms(m_count * n_count, 0.0);

  struct Tap {
    int r2;
    std::uint32_t column;
    double density;
  };
  std::vector<Tap> taps;
  for (std::size_t m = 0; m < m_count; ++m) {
    const double sigma = sigma_grid.sigmas[m];
    const double limit = support_radius_squared(sigma);
    const double density_scale = 1.0 / (2.0 * std::numbers::pi * sigma * sigma);

    taps.clear();
    for (int dx = -half; dx <= half; ++dx) {
      for (int dy = -half; dy <= half; ++dy) {
        const int r2 = dx * dx + dy * dy;
        if (double(r2) > limit) continue;
        const auto column = std::uint32_t((dx + half) * side + (dy + half));
        taps.push_back({r2, column, density_scale * std::exp(-double(r2) / (2.0 * sigma * sigma))});
      }
    }
    std::sort(taps.begin(), taps.end(), [](const Tap& a, const Tap& b) {
      return a.r2 != b.r2 ? a.r2 < b.r2 : a.column < b.column;
    });
    double total = 0.0;
    for (const Tap& t : taps) total += t.density;

    // Lay the normalized tap masses end to end in order of radius and cut the
    // unit interval at the band edges. A tap straddling an edge is shared by
    // both neighbouring rows in proportion to the overlap.
    std::size_t band = 0;
    double tap_start = 0.0;
    for (std::size_t k = 0; k < taps.size(); ++k) {
      const double share = taps[k].density / total;
      const double tap_end = (k + 1 == taps.size()) ? 1.0 : tap_start + share;
      while (band < n_count) {
        const double lo = std::max(tap_start, edges[band]);
        const double hi = std::min(tap_end, edges[band + 1]);
        if (hi > lo) {
          // Gaussian weight of the portion of this tap assigned to the band.
          const double raw = taps[k].density * (hi - lo) / (tap_end - tap_start);
          const std::size_t row = band * m_count + m;
          rows[row].push_back({taps[k].column, raw});
          norms[row] += raw;
        }
        if (edges[band + 1] <= tap_end && band + 1 < n_count) {
          ++band;
        } else {
          break;
        }
      }
      tap_start = tap_end;
    }
  }

  w.row_offsets_.assign(1, 0);
  w.row_offsets_.reserve(rows.size() + 1);
  w.row_normalization_ = norms;
  for (std::size_t row = 0; row < rows.size(); ++row) {
    auto& entries = rows[row];
    if (entries.empty() || !(norms[row] > 0.0)) {
      throw Error(ErrorCode::InvalidParameter, "weighting matrix row has no support");
    }
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.column < b.column; });
    const std::size_t begin = w.values_.size();
    for (const Entry& e : entries) {
      w.columns_.push_back(e.column);
      w.values_.push_back(e.value);
    }
    double sum = 0.0;
    for (std::size_t k = begin; k < w.values_.size(); ++k) sum += w.values_[k];
    for (std::size_t k = begin; k < w.values_.size(); ++k) w.values_[k] /= sum;
    w.row_offsets_.push_back(w.values_.size());
    entries = {};
  }
  return w;
}

void WeightMatrix::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out.write(kWeightMagic, sizeof(kWeightMagic));
  write_le<std::uint64_t>(out, sigma_grid_.size());
  write_le<std::uint64_t>(out, radial_grid_.size());
  write_le<std::uint64_t>(out, std::uint64_t(patch_side_));
  write_le<double>(out, sigma_grid_.front());
  write_le<double>(out, sigma_grid_.back());
  std::vector<float> dense(cols());
  for (std::size_t row = 0; row < rows(); ++row) {
    std::fill(dense.begin(), dense.end(), 0.0f);
    const auto c = row_columns(row);
    const auto v = row_values(row);
    for (std::size_t k = 0; k < c.size(); ++k) dense[c[k]] = float(v[k]);
    out.write(reinterpret_cast<const char*>(dense.data()),
              std::streamsize(dense.size() * sizeof(float)));
  }
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

WeightMatrix WeightMatrix::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(magic, magic + 8, kWeightMagic)) {
    throw Error(ErrorCode::UnsupportedFormat, path.string() + " is not a weight matrix dump");
  }
  const auto m_count = read_le<std::uint64_t>(in);
  const auto n_count = read_le<std::uint64_t>(in);
  const auto side = read_le<std::uint64_t>(in);
  const auto sigma_min = read_le<double>(in);
  const auto sigma_max = read_le<double>(in);

  WeightMatrix w;
  w.sigma_grid_ = make_sigma_grid(int(m_count), sigma_min, sigma_max);
  w.radial_grid_ = make_radial_grid(int(n_count));
  w.patch_side_ = required_patch_side(w.sigma_grid_, w.radial_grid_);
  if (std::uint64_t(w.patch_side_) != side) {
    throw Error(ErrorCode::UnsupportedFormat, "weight matrix header is inconsistent");
  }
  std::vector<float> dense(w.cols());
  const std::size_t row_count = std::size_t(m_count * n_count);
  w.row_offsets_.assign(1, 0);
  w.row_normalization_.assign(row_count, 1.0);
  for (std::size_t row = 0; row < row_count; ++row) {
    in.read(reinterpret_cast<char*>(dense.data()), std::streamsize(dense.size() * sizeof(float)));
    if (!in) throw Error(ErrorCode::IoError, "truncated weight matrix file");
    for (std::size_t col = 0; col < dense.size(); ++col) {
      if (dense[col] != 0.0f) {
        w.columns_.push_back(std::uint32_t(col));
        w.values_.push_back(double(dense[col]));
      }
    }
    w.row_offsets_.push_back(w.values_.size());
  }
  return w;
}

void WeightMatrix::save_sparse(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out.write(kSparseMagic, sizeof(kSparseMagic));
  write_le<std::uint64_t>(out, sigma_grid_.size());
  write_le<std::uint64_t>(out, radial_grid_.size());
  write_le<std::uint64_t>(out, std::uint64_t(patch_side_));
  write_le<double>(out, sigma_grid_.front());
  write_le<double>(out, sigma_grid_.back());
  write_le<std::uint64_t>(out, values_.size());
  for (std::size_t offset : row_offsets_) write_le<std::uint64_t>(out, offset);
  for (std::uint32_t c : columns_) write_le<std::uint32_t>(out, c);
  for (double v : values_) write_le<double>(out, v);
  for (double v : row_normalization_) write_le<double>(out, v);
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

WeightMatrix WeightMatrix::load_sparse(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(magic, magic + 8, kSparseMagic)) {
    throw Error(ErrorCode::UnsupportedFormat, path.string() + " is not a sparse weight matrix");
  }
  const auto m_count = read_le<std::uint64_t>(in);
  const auto n_count = read_le<std::uint64_t>(in);
  const auto side = read_le<std::uint64_t>(in);
  const auto sigma_min = read_le<double>(in);
  const auto sigma_max = read_le<double>(in);
  const auto nnz = read_le<std::uint64_t>(in);

  WeightMatrix w;
  w.sigma_grid_ = make_sigma_grid(int(m_count), sigma_min, sigma_max);
  w.radial_grid_ = make_radial_grid(int(n_count));
  w.patch_side_ = required_patch_side(w.sigma_grid_, w.radial_grid_);
  const std::size_t row_count = std::size_t(m_count * n_count);
  if (std::uint64_t(w.patch_side_) != side) {
    throw Error(ErrorCode::UnsupportedFormat, "weight matrix header is inconsistent");
  }
  w.row_offsets_.resize(row_count + 1);
  for (auto& offset : w.row_offsets_) offset = std::size_t(read_le<std::uint64_t>(in));
  if (w.row_offsets_.front() != 0 || w.row_offsets_.back() != nnz ||
      !std::is_sorted(w.row_offsets_.begin(), w.row_offsets_.end())) {
    throw Error(ErrorCode::UnsupportedFormat, "corrupt row offsets in " + path.string());
  }
  w.columns_.resize(nnz);
  for (auto& c : w.columns_) {
    c = read_le<std::uint32_t>(in);
    if (c >= w.cols()) throw Error(ErrorCode::UnsupportedFormat, "column out of range");
  }
  w.values_.resize(nnz);
  for (auto& v : w.values_) v = read_le<double>(in);
  w.row_normalization_.resize(row_count);
  for (auto& v : w.row_normalization_) v = read_le<double>(in);
  return w;
}

double radial_average(const Patch& patch, double radius) {
  if (!(radius >= 0.0) || radius > double(patch.half())) {
    throw Error(ErrorCode::OutOfSupport, "radius exceeds the patch half-side");
  }
  if (radius == 0.0) return patch.at(0, 0);
  const int samples = std::max(8, int(std::ceil(2.0 * std::numbers::pi * radius * 4.0)));
  const int h = patch.half();
  double sum = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double theta = 2.0 * std::numbers::pi * double(k) / double(samples);
    const double x = radius * std::cos(theta);
    const double y = radius * std::sin(theta);
    const int x0 = std::clamp(int(std::floor(x)), -h, h);
    const int y0 = std::clamp(int(std::floor(y)), -h, h);
    const int x1 = std::min(x0 + 1, h);
    const int y1 = std::min(y0 + 1, h);
    const double fx = x - double(x0);
    const double fy = y - double(y0);
    sum += (1.0 - fy) * ((1.0 - fx) * patch.at(x0, y0) + fx * patch.at(x1, y0)) +
           fy * ((1.0 - fx) * patch.at(x0, y1) + fx * patch.at(x1, y1));
  }
  return sum / double(samples);
}

void forward_candidates(std::span<const double> patch_vector, const WeightMatrix& weights,
                        const QuadratureVector& quadrature, FrameworkWorkspace& workspace,
                        std::span<double> out) {
  const std::size_t m_count = weights.sigma_grid().size();
  const std::size_t n_count = weights.radial_grid().size();
  if (quadrature.size() != n_count || out.size() != m_count) {
    throw Error(ErrorCode::ShapeError, "framework dimensions disagree");
  }
  workspace.ring_averages.resize(weights.rows());
  weights.multiply(patch_vector, workspace.ring_averages);

  // ivec(., M) F without materializing the M x N matrix.
  const double inv_sum = 1.0 / quadrature.sum();
  for (std::size_t m = 0; m < m_count; ++m) {
    double acc = 0.0;
    for (std::size_t n = 0; n < n_count; ++n) {
      acc += workspace.ring_averages[n * m_count + m] * quadrature.values[n];
    }
    out[m] = acc * inv_sum;
  }
}

CandidateVector forward_candidates(const Patch& patch, const WeightMatrix& weights,
                                   const QuadratureVector& quadrature) {
  if (patch.side() != weights.patch_side()) {
    throw Error(ErrorCode::ShapeError, "patch side differs from the weighting matrix window");
  }
  FrameworkWorkspace workspace;
  workspace.patch_vector = patch.vectorized();
  CandidateVector result;
  result.values.resize(weights.sigma_grid().size());
  forward_candidates(workspace.patch_vector, weights, quadrature, workspace, result.values);
  return result;
}

SampledGaussian::SampledGaussian(double sigma) : sigma_(sigma), radius_(0) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::InvalidParameter, "Gaussian scale must be positive");
  }
  radius_ = support_radius(sigma);
  const int s = side();
  const double limit = support_radius_squared(sigma);
  const double density_scale = 1.0 / (2.0 * std::numbers::pi * sigma * sigma);
  weights_.assign(std::size_t(s) * std::size_t(s), 0.0);
  double total = 0.0;
  for (int dy = -radius_; dy <= radius_; ++dy) {
    for (int dx = -radius_; dx <= radius_; ++dx) {
      const int r2 = dx * dx + dy * dy;
      if (double(r2) > limit) continue;
      const double v = std::exp(-double(r2) / (2.0 * sigma * sigma));
      weights_[std::size_t(dy + radius_) * std::size_t(s) + std::size_t(dx + radius_)] = v;
      total += v;
    }
  }
  raw_mass_ = total * density_scale;
  for (double& v : weights_) v /= total;
}

double SampledGaussian::apply(const GrayImage& image, int x, int y) const noexcept {
  const int s = side();
  double acc = 0.0;
  const bool interior = x - radius_ >= 0 && y - radius_ >= 0 && x + radius_ < image.width() &&
                        y + radius_ < image.height();
  for (int dy = -radius_; dy <= radius_; ++dy) {
    const double* w = weights_.data() + std::size_t(dy + radius_) * std::size_t(s);
    if (interior) {
      const double* src = &image(x - radius_, y + dy);
      for (int k = 0; k < s; ++k) acc += w[k] * src[k];
    } else {
      for (int dx = -radius_; dx <= radius_; ++dx) {
        acc += w[dx + radius_] * image.clamped(x + dx, y + dy);
      }
    }
  }
  return acc;
}

double direct_blur_oracle(const Patch& patch, double sigma) {
  const SampledGaussian kernel(sigma);
  if (kernel.radius() > patch.half()) {
    throw Error(ErrorCode::OutOfSupport, "patch does not cover the 5 sigma kernel support");
  }
  const int r = kernel.radius();
  double acc = 0.0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) acc += kernel.weight(dx, dy) * patch.at(dx, dy);
  }
  return acc;
}

double sampled_tail_mass(double sigma) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidParameter, "Gaussian scale must be positive");
  const double limit = support_radius_squared(sigma);
  const double density_scale = 1.0 / (2.0 * std::numbers::pi * sigma * sigma);
  // Terms beyond 12 sigma are below 1e-31 and do not affect the sum.
  const int reach = int(std::ceil(12.0 * sigma)) + 1;
  double tail = 0.0;
  for (int dy = -reach; dy <= reach; ++dy) {
    for (int dx = -reach; dx <= reach; ++dx) {
      const int r2 = dx * dx + dy * dy;
      if (double(r2) > limit) tail += std::exp(-double(r2) / (2.0 * sigma * sigma));
    }
  }
  return tail * density_scale;
}

}  // namespace defocus
