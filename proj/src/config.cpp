#include "defocus/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <string>
#include <system_error>

namespace defocus {

namespace {

constexpr int kCacheFormatVersion = 1;

void require(bool ok, const char* message) {
  if (!ok) throw Error(ErrorCode::InvalidParameter, message);
}

}  // namespace

void RunConfig::validate() const {
  require(sigma_count >= 2, "sigma count M must be >= 2");
  require(radial_count >= 2, "radial count N must be >= 2");
  require(sigma_min > 0.0 && sigma_min < sigma_max, "need 0 < sigma_min < sigma_max");
  require(tie_tol >= 0.0, "tie tolerance must be >= 0");
  require(eq_tol >= 0.0, "equality tolerance must be >= 0");
  require(disambiguation_window >= 3 && disambiguation_window % 2 == 1,
          "disambiguation window must be odd and >= 3");
  require(decimation_factor >= 1, "decimation factor must be >= 1");
  require(workers >= 0, "worker count must be >= 0");
}

EstimationOptions RunConfig::estimation_options() const {
  EstimationOptions options;
  options.tie_tol = tie_tol;
  options.disambiguation.window = disambiguation_window;
  options.disambiguation.median_pass = median_pass;
  options.execution = execution();
  return options;
}

PairOptions RunConfig::pair_options() const {
  return PairOptions{eq_tol, estimation_options()};
}

std::uint64_t framework_cache_key(const RunConfig& config) {
  const SigmaGrid sg = make_sigma_grid(config.sigma_count, config.sigma_min, config.sigma_max);
  const RadialGrid rg = make_radial_grid(config.radial_count);
  char text[160];
  // Hex floats make the key exact in the grid bounds.
  std::snprintf(text, sizeof(text), "v%d|M=%d|N=%d|s1=%a|sM=%a|Rs=%d", kCacheFormatVersion,
                config.sigma_count, config.radial_count, config.sigma_min, config.sigma_max,
                required_patch_side(sg, rg));
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const char* p = text; *p; ++p) {
    hash ^= std::uint8_t(*p);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::optional<std::filesystem::path> cache_dir_from_env() {
  const char* dir = std::getenv("DEFOCUS_CACHE_DIR");
  if (!dir || !*dir) return std::nullopt;
  return std::filesystem::path(dir);
}

Framework prepare_framework(const RunConfig& config,
                            const std::optional<std::filesystem::path>& cache_dir) {
  config.validate();
  Framework fw;
  fw.sigma_grid = make_sigma_grid(config.sigma_count, config.sigma_min, config.sigma_max);
  fw.radial_grid = make_radial_grid(config.radial_count);
  fw.quadrature = make_quadrature_vector(fw.radial_grid);

  if (cache_dir) {
    char name[40];
    std::snprintf(name, sizeof(name), "w-%016llx.dfls",
                  static_cast<unsigned long long>(framework_cache_key(config)));
    const auto file = *cache_dir / name;
    std::error_code ec;
    if (std::filesystem::exists(file, ec)) {
      try {
        fw.weights = WeightMatrix::load_sparse(file);
        fw.from_cache = true;
        fw.cache_file = file;
        return fw;
      } catch (const Error&) {
        // Unreadable entries are rebuilt and overwritten below.
      }
    }
    fw.weights = build_weight_matrix(fw.sigma_grid, fw.radial_grid);
    std::filesystem::create_directories(*cache_dir, ec);
    // Write to a temporary name first so concurrent runs never read a partial file.
    const auto partial = file.string() + ".partial";
    try {
      fw.weights.save_sparse(partial);
      std::filesystem::rename(partial, file, ec);
      if (!ec) fw.cache_file = file;
    } catch (const Error&) {
      std::filesystem::remove(partial, ec);
    }
    return fw;
  }
  fw.weights = build_weight_matrix(fw.sigma_grid, fw.radial_grid);
  return fw;
}

}  // namespace defocus
