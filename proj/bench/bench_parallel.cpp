// Serial reference implementations against the OpenMP kernels.
// Pass --benchmark_filter to pick a subset; worker counts are the second argument.

#include <benchmark/benchmark.h>

#include <random>

#include "defocus/estimation.hpp"
#include "defocus/kernel.hpp"
#include "defocus/reconstruction.hpp"
#include "defocus/reference.hpp"
#include "defocus/resample.hpp"
#include "defocus/sharpness.hpp"

namespace {

using namespace defocus;

GrayImage smooth_noise(int w, int h) {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GrayImage img(w, h);
  for (double& v : img.pixels()) v = u(rng);
  return spatially_varying_gaussian(img, Image<double>(w, h, 1.0), Execution{1});
}

Image<double> ramp_scale(int w, int h) {
  Image<double> s(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) s(x, y) = 1.0 + double(y) / double(h - 1);
  }
  return s;
}

struct Framework {
  QuadratureVector quadrature;
  WeightMatrix weights;
};

const Framework& framework() {
  static const Framework fw = [] {
    Framework f;
    const RadialGrid radial = make_radial_grid(100);
    f.quadrature = make_quadrature_vector(radial);
    f.weights = build_weight_matrix(make_sigma_grid(50, 0.1, 5.0), radial);
    return f;
  }();
  return fw;
}

void BM_ConvolveReference(benchmark::State& state) {
  const int n = int(state.range(0));
  const GrayImage img = smooth_noise(n, n);
  const Image<double> scale = ramp_scale(n, n);
  for (auto _ : state) benchmark::DoNotOptimize(reference::spatially_varying_gaussian(img, scale));
  state.SetItemsProcessed(state.iterations() * n * n);
}

void BM_ConvolveParallel(benchmark::State& state) {
  const int n = int(state.range(0));
  const GrayImage img = smooth_noise(n, n);
  const Image<double> scale = ramp_scale(n, n);
  const Execution exec{int(state.range(1))};
  for (auto _ : state) benchmark::DoNotOptimize(spatially_varying_gaussian(img, scale, exec));
  state.SetItemsProcessed(state.iterations() * n * n);
}

void BM_DecimateReference(benchmark::State& state) {
  const int n = int(state.range(0));
  const GrayImage img = smooth_noise(n, n);
  const FirFilter filter = kaiser_sinc_taps(2);
  for (auto _ : state) benchmark::DoNotOptimize(reference::decimate(img, filter));
  state.SetItemsProcessed(state.iterations() * n * n);
}

void BM_DecimateParallel(benchmark::State& state) {
  const int n = int(state.range(0));
  const GrayImage img = smooth_noise(n, n);
  const FirFilter filter = kaiser_sinc_taps(2);
  const Execution exec{int(state.range(1))};
  for (auto _ : state) benchmark::DoNotOptimize(decimate(img, filter, exec));
  state.SetItemsProcessed(state.iterations() * n * n);
}

void BM_SharpnessReference(benchmark::State& state) {
  const int n = int(state.range(0));
  const GrayImage img = smooth_noise(n, n);
  for (auto _ : state) benchmark::DoNotOptimize(reference::local_sharpness(img));
  state.SetItemsProcessed(state.iterations() * n * n);
}

void BM_SharpnessParallel(benchmark::State& state) {
  const int n = int(state.range(0));
  const GrayImage img = smooth_noise(n, n);
  const Execution exec{int(state.range(1))};
  for (auto _ : state) benchmark::DoNotOptimize(local_sharpness(img, exec));
  state.SetItemsProcessed(state.iterations() * n * n);
}

void BM_CandidatesReference(benchmark::State& state) {
  const Framework& fw = framework();
  const GrayImage img = smooth_noise(64, 64);
  const Patch patch = Patch::extract(img, 32, 32, fw.weights.patch_side());
  for (auto _ : state) {
    benchmark::DoNotOptimize(reference::forward_candidates(patch, fw.weights, fw.quadrature));
  }
}

void BM_CandidatesSparse(benchmark::State& state) {
  const Framework& fw = framework();
  const GrayImage img = smooth_noise(64, 64);
  const Patch patch = Patch::extract(img, 32, 32, fw.weights.patch_side());
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward_candidates(patch, fw.weights, fw.quadrature));
  }
}

void BM_CandidateField(benchmark::State& state) {
  const Framework& fw = framework();
  const int n = int(state.range(0));
  const GrayImage left = smooth_noise(n, n);
  const GrayImage right = spatially_varying_gaussian(left, ramp_scale(n, n));
  const Execution exec{int(state.range(1))};
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_candidate_field(left, right, fw.weights, fw.quadrature,
                                                     nullptr, kDefaultTieTolerance, exec));
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}

void worker_sweep(benchmark::internal::Benchmark* b, int size) {
  for (int workers : {1, 2, 4, 8}) b->Args({size, workers});
}

BENCHMARK(BM_ConvolveReference)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvolveParallel)->Apply([](auto* b) { worker_sweep(b, 256); })->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DecimateReference)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DecimateParallel)->Apply([](auto* b) { worker_sweep(b, 512); })->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SharpnessReference)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SharpnessParallel)->Apply([](auto* b) { worker_sweep(b, 512); })->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CandidatesReference)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_CandidatesSparse)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_CandidateField)->Apply([](auto* b) { worker_sweep(b, 64); })->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
