#include "defocus/resample.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace defocus {

double sinc(double x) {
  if (x == 0.0) return 1.0;
  if (x == std::round(x)) return 0.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

std::vector<double> kaiser_window(int half_length, double beta) {
  if (half_length < 1) throw Error(ErrorCode::InvalidParameter, "window half-length must be >= 1");
  if (!(beta >= 0.0)) throw Error(ErrorCode::InvalidParameter, "Kaiser beta must be >= 0");
  std::vector<double> w(std::size_t(2 * half_length + 1));
  const double norm = std::cyl_bessel_i(0.0, beta);
  for (int k = -half_length; k <= half_length; ++k) {
    const double t = double(k) / double(half_length);
    w[std::size_t(k + half_length)] = std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - t * t)) / norm;
  }
  return w;
}

FirFilter kaiser_sinc_taps(int factor, int half_length, double beta) {
  if (factor < 1) throw Error(ErrorCode::InvalidParameter, "decimation factor must be >= 1");
  FirFilter filter{kaiser_window(half_length, beta), factor, half_length, beta};
  for (int k = -half_length; k <= half_length; ++k) {
    filter.taps[std::size_t(k + half_length)] *= sinc(double(k) / double(factor));
  }
  const double sum = std::accumulate(filter.taps.begin(), filter.taps.end(), 0.0);
  for (double& t : filter.taps) t /= sum;
  // Exact mirror symmetry regardless of rounding in the window evaluation.
  for (int k = 1; k <= half_length; ++k) {
    filter.taps[std::size_t(half_length - k)] = filter.taps[std::size_t(half_length + k)];
  }
  return filter;
}

GrayImage decimate(const GrayImage& image, int factor, Execution exec) {
  return decimate(image, kaiser_sinc_taps(factor), exec);
}

GrayImage decimate(const GrayImage& image, const FirFilter& filter, Execution exec) {
  const int support = 2 * filter.half_length + 1;
  if (image.width() < support || image.height() < support) {
    throw Error(ErrorCode::TooSmall, "image is smaller than the filter support");
  }
  const int d = filter.factor;
  const int out_w = (image.width() + d - 1) / d;
  const int out_h = (image.height() + d - 1) / d;
  const int l = filter.half_length;

  // Horizontal pass, evaluated only at the retained columns.
  GrayImage rows(out_w, image.height());
  parallel_rows(image.height(), exec, [&](int y) {
    for (int j = 0; j < out_w; ++j) {
      const int x = j * d;
      double acc = 0.0;
      for (int k = -l; k <= l; ++k) acc += filter.tap(k) * image.clamped(x - k, y);
      rows(j, y) = acc;
    }
  });

  GrayImage out(out_w, out_h);
  parallel_rows(out_h, exec, [&](int i) {
    const int y = i * d;
    for (int j = 0; j < out_w; ++j) {
      double acc = 0.0;
      for (int k = -l; k <= l; ++k) acc += filter.tap(k) * rows.clamped(j, y - k);
      out(j, i) = acc;
    }
  });
  return out;
}

std::vector<std::pair<double, double>> frequency_response(const std::vector<double>& taps,
                                                          int num_points) {
  if (num_points < 64) throw Error(ErrorCode::InvalidParameter, "need at least 64 points");
  if (taps.empty() || taps.size() % 2 == 0) {
    throw Error(ErrorCode::InvalidParameter, "taps must have odd length");
  }
  const int half = int(taps.size() / 2);
  std::vector<std::pair<double, double>> response;
  response.reserve(std::size_t(num_points));
  for (int i = 0; i < num_points; ++i) {
    const double f = double(i) / double(num_points - 1);
    // Zero-phase form: centred taps make the DTFT real.
    double h = 0.0;
    for (int k = -half; k <= half; ++k) {
      h += taps[std::size_t(k + half)] * std::cos(std::numbers::pi * f * double(k));
    }
    response.emplace_back(f, 20.0 * std::log10(std::max(std::abs(h), 1e-300)));
  }
  return response;
}

SpectralMetrics spectral_metrics(const std::vector<double>& taps, int num_points) {
  const auto response = frequency_response(taps, num_points);
  double peak = response.front().second;
  for (const auto& [f, db] : response) peak = std::max(peak, db);

  SpectralMetrics metrics;
  std::size_t i = 0;
  while (i + 1 < response.size() && response[i + 1].second - peak > -3.0) ++i;
  if (i + 1 < response.size()) {
    const auto [f0, d0] = response[i];
    const auto [f1, d1] = response[i + 1];
    const double target = peak - 3.0;
    metrics.mainlobe_width_3db = 2.0 * (f0 + (target - d0) * (f1 - f0) / (d1 - d0));
  }

  // First local minimum past the -3 dB point ends the mainlobe.
  while (i + 1 < response.size() && response[i + 1].second <= response[i].second) ++i;
  double sidelobe = -std::numeric_limits<double>::infinity();
  for (std::size_t k = i; k < response.size(); ++k) sidelobe = std::max(sidelobe, response[k].second);
  metrics.peak_sidelobe_db = sidelobe - peak;
  return metrics;
}

}  // namespace defocus
