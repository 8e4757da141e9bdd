#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "defocus/estimation.hpp"
#include "defocus/kernel.hpp"
#include "defocus/sharpness.hpp"

namespace defocus {

/// Effective parameters of a run. Defaults give the 50 x 100 framework on sigma in [0.1, 5].
struct RunConfig {
  int sigma_count = 50;
  int radial_count = 100;
  double sigma_min = 0.1;
  double sigma_max = 5.0;
  double tie_tol = kDefaultTieTolerance;
  double eq_tol = kDefaultEqualityTolerance;
  int disambiguation_window = 5;
  bool median_pass = true;
  int decimation_factor = 1;
  int workers = 0;
  std::filesystem::path output_dir = ".";

  /// Throws InvalidParameter on the first inconsistent field.
  void validate() const;

  Execution execution() const { return Execution{workers}; }
  EstimationOptions estimation_options() const;
  PairOptions pair_options() const;
};

/// Grids, quadrature and weighting matrix of one configuration.
struct Framework {
  SigmaGrid sigma_grid;
  RadialGrid radial_grid;
  QuadratureVector quadrature;
  WeightMatrix weights;
  /// Set when the weights were read from the cache rather than built.
  bool from_cache = false;
  std::optional<std::filesystem::path> cache_file;
};

/// 64-bit FNV-1a over (M, N, sigma_1, sigma_M, R_s) and the cache format version.
std::uint64_t framework_cache_key(const RunConfig& config);

/// The directory named by DEFOCUS_CACHE_DIR, if set and non-empty.
std::optional<std::filesystem::path> cache_dir_from_env();

/// Builds the framework, reusing a cached weighting matrix from `cache_dir`
/// when present and storing a freshly built one there otherwise. A cache that
/// cannot be read or written is ignored.
Framework prepare_framework(const RunConfig& config,
                            const std::optional<std::filesystem::path>& cache_dir = std::nullopt);

}  // namespace defocus
