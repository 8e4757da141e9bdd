#pragma once

#include <utility>
#include <vector>

#include "defocus/image.hpp"
#include "defocus/parallel.hpp"

namespace defocus {

inline constexpr int kDefaultFilterHalfLength = 8;
inline constexpr double kDefaultKaiserBeta = 10.0;

/// Linear-phase anti-alias filter g(k), k = -L..L, stored at taps[k + L].
struct FirFilter {
  std::vector<double> taps;
  int factor = 1;
  int half_length = 0;
  double beta = 0.0;

  double tap(int k) const noexcept { return taps[std::size_t(k + half_length)]; }
};

/// sin(pi x) / (pi x), exactly zero at nonzero integers.
double sinc(double x);

/// Symmetric Kaiser window of 2L+1 points.
std::vector<double> kaiser_window(int half_length, double beta);

/// g(k) = sinc(k / D) * Kaiser(2L+1, beta), scaled to unit sum.
FirFilter kaiser_sinc_taps(int factor, int half_length = kDefaultFilterHalfLength,
                           double beta = kDefaultKaiserBeta);

/// Separable FIR low-pass (rows, then columns) with replicate padding, then
/// every factor-th sample from index 0. Output is ceil(w/D) x ceil(h/D).
GrayImage decimate(const GrayImage& image, int factor, Execution exec = {});
GrayImage decimate(const GrayImage& image, const FirFilter& filter, Execution exec = {});

/// |DTFT| in dB at `num_points` frequencies spread over [0, 1], where 1 is the
/// Nyquist frequency (half a cycle per sample).
std::vector<std::pair<double, double>> frequency_response(const std::vector<double>& taps,
                                                          int num_points);
inline std::vector<std::pair<double, double>> frequency_response(const FirFilter& filter,
                                                                 int num_points) {
  return frequency_response(filter.taps, num_points);
}

struct SpectralMetrics {
  /// Highest sidelobe relative to the mainlobe peak, in dB (negative).
  double peak_sidelobe_db = 0.0;
  /// Full mainlobe width at -3 dB, in Nyquist-normalized frequency.
  double mainlobe_width_3db = 0.0;
};

/// Measures a symmetric, lowpass-shaped response on a dense frequency grid.
SpectralMetrics spectral_metrics(const std::vector<double>& taps, int num_points = 1 << 15);

}  // namespace defocus
